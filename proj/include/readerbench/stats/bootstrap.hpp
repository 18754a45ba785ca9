#pragma once

// Paired bootstrap comparison of two classifiers scored on one patient set.

#include "readerbench/stats/metrics.hpp"
#include "readerbench/stats/wilcoxon.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rbench::stats {

struct BootstrapOptions {
    std::size_t sample_size = 60;
    std::size_t iterations = 100;
    std::uint64_t seed = 0;
    unsigned threads = 1;  // 0 selects hardware concurrency
};

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

struct BootstrapResult {
    std::size_t iterations = 0;
    std::size_t sample_size = 0;
    std::uint64_t seed = 0;
    std::vector<double> f1_a;  // one macro-F1 per iteration
    std::vector<double> f1_b;
    std::vector<std::vector<std::size_t>> subsamples;  // patient indices, shared by both models
    double full_f1_a = 0.0;  // macro-F1 on every patient
    double full_f1_b = 0.0;
    double mean_f1_a = 0.0;
    double mean_f1_b = 0.0;
    Interval ci_a;  // 2.5 / 97.5 percentiles of the bootstrap F1s
    Interval ci_b;
    WilcoxonResult test;
};

// Linear-interpolation percentile, q in [0, 1].
double percentile(std::span<const double> values, double q);
Interval percentile_interval(std::span<const double> values, double level = 0.95);

// Both prediction vectors are aligned to `gold`. Every iteration draws one
// subsample without replacement from stream ("bootstrap", iteration) and
// scores both models on it, so results do not depend on the thread count.
BootstrapResult bootstrap_compare(std::span<const Label> gold, std::span<const Label> pred_a,
                                  std::span<const Label> pred_b, std::span<const Label> classes,
                                  const BootstrapOptions& options);

// Variant for two models evaluated against separately stored gold vectors
// that must agree patient by patient.
BootstrapResult bootstrap_compare(std::span<const Label> gold_a, std::span<const Label> pred_a,
                                  std::span<const Label> gold_b, std::span<const Label> pred_b,
                                  std::span<const Label> classes, const BootstrapOptions& options);

}  // namespace rbench::stats
