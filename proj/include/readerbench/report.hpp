#pragma once

// Study pipeline stages behind the command line, the study report, and the
// delimited tables and figure-data files rendered from it.

#include "readerbench/config.hpp"
#include "readerbench/design.hpp"
#include "readerbench/events.hpp"
#include "readerbench/predictor.hpp"
#include "readerbench/simulation.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rbench {

// ---------------------------------------------------------------------------
// Model-comparison inputs.

// Delimited file with columns patient_id, gold, <model A>, <model B>; levels
// 0-5. The dataset name is the file stem. Rows are kept sorted by patient_id
// so the bootstrap does not depend on file order.
struct PredictionSet {
    std::string dataset;
    std::string model_a;
    std::string model_b;
    std::vector<std::string> patient_ids;
    std::vector<int> gold;
    std::vector<int> pred_a;
    std::vector<int> pred_b;
};

PredictionSet parse_prediction_set(std::string_view text, std::string dataset, std::string_view source = "<predictions>");
PredictionSet load_prediction_set(const std::filesystem::path& path);
std::string format_prediction_set(const PredictionSet& set);

// Bootstrap parameters for one dataset: iterations and sample size from the
// config, seed from stream ("model-comparison/<dataset>") of the root seed.
stats::BootstrapOptions comparison_bootstrap(const StudyConfig& config, std::string_view dataset);
ModelComparison compare_prediction_set(const PredictionSet& set, const stats::BootstrapOptions& options);

// "<.001" below 0.001, otherwise two decimals.
std::string format_p(double p);

// Tab-separated: dataset, scale, model_a, model_b, p. Per dataset an Overall
// row then one row per scale (omitted when there is only one scale); datasets
// in name order. Validation when a comparison lacks its overall entry.
std::string render_table1(const nlohmann::json& comparisons);

// ---------------------------------------------------------------------------
// Study report.

struct StudyInputs {
    StudyConfig config;
    SeverityRuleTable rules = SeverityRuleTable::simplified_scale();
    Schedule schedule;
    std::vector<PatientRecord> cohort;
    std::vector<GradingEvent> events;
    // AI-alone grades by patient id, when available.
    std::optional<std::map<std::string, PatientGrade>> ai_predictions;
    std::vector<PredictionSet> prediction_sets;
};

// Every value is a function of the inputs; no wall-clock time is read.
nlohmann::json analyze_study(const StudyInputs& inputs);

// Two-space indented JSON with a trailing newline.
std::string dump_report(const nlohmann::json& report);

// File name -> content for every table and figure-data file the report
// supports; study sections are skipped when the report has no events.
std::map<std::string, std::string> render_artifacts(const nlohmann::json& report);

// ---------------------------------------------------------------------------
// Pipeline stages. Each reads and writes files under `out_dir`; paths in the
// config take precedence over the defaults named below.

struct DesignOutputs {
    Schedule schedule;
    std::vector<PatientRecord> cohort;
    VerificationReport verification;
};

// manifest -> cohort.csv, schedule.json, verification.json.
DesignOutputs run_design(const StudyConfig& config, const std::filesystem::path& out_dir,
                         const SeverityRuleTable& rules);

// cohort.csv + schedule.json -> events.jsonl, ai_predictions.csv, simulation.json.
SimulationSummary run_simulate(const StudyConfig& config, const std::filesystem::path& out_dir,
                               const SeverityRuleTable& rules, const SimulationOptions& options);

// events.jsonl (+ ai_predictions.csv when present, + prediction sets) -> report.json.
nlohmann::json run_analyze(const StudyConfig& config, const std::filesystem::path& out_dir,
                           const SeverityRuleTable& rules, const std::vector<std::filesystem::path>& prediction_sets);

// report.json -> tables and figure-data files; returns the file names written.
std::vector<std::string> run_report(const std::filesystem::path& report_path, const std::filesystem::path& out_dir);

SeverityRuleTable load_rules(const StudyConfig& config);

// The ai_predictions.csv layout (load_prediction_table reads it back).
std::string format_prediction_table(const std::map<std::string, PatientGrade>& table);

}  // namespace rbench
