#pragma once

// JSON views of analysis results. Key order is fixed by nlohmann's sorted
// object map, so equal results serialize to equal bytes.

#include "readerbench/stats/bootstrap.hpp"
#include "readerbench/stats/grader_comparison.hpp"
#include "readerbench/stats/lmm.hpp"
#include "readerbench/stats/wilcoxon.hpp"

#include <nlohmann/json_fwd.hpp>

namespace rbench::stats {

void to_json(nlohmann::json& j, const WilcoxonResult& r);
void to_json(nlohmann::json& j, const Interval& i);
// Includes per-iteration F1 pairs and the subsample indices.
void to_json(nlohmann::json& j, const BootstrapResult& r);
void to_json(nlohmann::json& j, const Coefficient& c);
void to_json(nlohmann::json& j, const LmmFit& f);
void to_json(nlohmann::json& j, const RoundEffect& e);
void to_json(nlohmann::json& j, const MetricsSummary& m);
void to_json(nlohmann::json& j, const GraderComparison& g);

}  // namespace rbench::stats
