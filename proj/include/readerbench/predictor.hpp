#pragma once

// AI predictor boundary. A predictor maps one patient's two images to per-eye
// risk-feature grades; the severity suggestion is always recomputed locally.

#include "readerbench/design.hpp"
#include "readerbench/severity.hpp"
#include "readerbench/stats/bootstrap.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace rbench {

struct FeatureConfidence {
    std::optional<double> drusen;
    std::optional<double> pigment;
    std::optional<double> late_amd;

    bool empty() const { return !drusen && !pigment && !late_amd; }
    friend bool operator==(const FeatureConfidence&, const FeatureConfidence&) = default;
};

struct EyePrediction {
    EyeGrade grade;
    FeatureConfidence confidence;

    friend bool operator==(const EyePrediction&, const EyePrediction&) = default;
};

struct FeaturePrediction {
    EyePrediction left;
    EyePrediction right;

    PatientGrade grades() const { return {left.grade, right.grade}; }
    static FeaturePrediction from_grades(const PatientGrade& g) { return {{g.left, {}}, {g.right, {}}}; }

    friend bool operator==(const FeaturePrediction&, const FeaturePrediction&) = default;
};

// Wire format:
//   {"left": {"drusen": 0, "pigment": 0, "late_amd": 0, "confidence": {...}}, "right": {...}}
// An optional top-level "severity" is accepted for cross-checking only.
void to_json(nlohmann::json& j, const FeaturePrediction& p);
void from_json(const nlohmann::json& j, FeaturePrediction& p);

struct WireResponse {
    FeaturePrediction prediction;
    std::optional<int> wire_severity;
};

// Throws Error(Protocol) carrying the raw payload when the response does not
// parse or a field is out of range.
WireResponse parse_wire_response(std::string_view raw);

struct PredictRequest {
    std::string patient_alias;
    std::string image_left;
    std::string image_right;
    // Known to fixture and simulated predictors only; never sent on the wire.
    std::string patient_id;
    std::optional<PatientGrade> gold;
};

PredictRequest make_request(const PatientRecord& record, std::string alias = {});
std::string wire_request(const PredictRequest& request);  // one JSON line, no newline

struct AiSuggestion {
    FeaturePrediction prediction;
    SeverityLevel severity;
    // Set when the wire carried a severity that disagrees with the recomputed one.
    std::optional<std::string> wire_mismatch;
};

void to_json(nlohmann::json& j, const AiSuggestion& s);
void from_json(const nlohmann::json& j, AiSuggestion& s);

class Predictor {
public:
    virtual ~Predictor() = default;
    virtual WireResponse predict(const PredictRequest& request) = 0;
    virtual std::string describe() const = 0;
};

// Calls the predictor and recomputes severity with `rules`.
AiSuggestion suggest(Predictor& predictor, const PredictRequest& request, const SeverityRuleTable& rules);

// ---------------------------------------------------------------------------
// Modes

// Persistent child process speaking one JSON object per line on stdin/stdout.
// A response slower than `timeout` kills the child (restarted on the next
// call) and raises PredictorUnavailable. Calls are serialized.
class SubprocessPredictor final : public Predictor {
public:
    SubprocessPredictor(std::string command, std::chrono::milliseconds timeout);
    ~SubprocessPredictor() override;
    SubprocessPredictor(const SubprocessPredictor&) = delete;
    SubprocessPredictor& operator=(const SubprocessPredictor&) = delete;

    WireResponse predict(const PredictRequest& request) override;
    std::string describe() const override { return "subprocess:" + command_; }

private:
    void start();
    void stop();

    std::string command_;
    std::chrono::milliseconds timeout_;
    std::mutex mutex_;
    int fd_ = -1;
    int pid_ = -1;
    std::string buffer_;
};

// POST <endpoint>/predict with the request JSON as body.
class HttpPredictor final : public Predictor {
public:
    HttpPredictor(std::string endpoint, std::chrono::milliseconds timeout);
    WireResponse predict(const PredictRequest& request) override;
    std::string describe() const override { return "http:" + endpoint_; }

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
};

// Echoes gold grades, or looks predictions up by patient id in a table.
class FixturePredictor final : public Predictor {
public:
    FixturePredictor() = default;
    explicit FixturePredictor(std::map<std::string, PatientGrade> table) : table_(std::move(table)) {}
    WireResponse predict(const PredictRequest& request) override;
    std::string describe() const override { return table_ ? "fixture:table" : "fixture:gold"; }

private:
    std::optional<std::map<std::string, PatientGrade>> table_;
};

// Prediction table file: the manifest grade columns keyed by patient_id
// (patient_id, drusen_L, pigment_L, late_L, drusen_R, pigment_R, late_R).
std::map<std::string, PatientGrade> load_prediction_table(const std::filesystem::path& path);

// Row-stochastic confusion matrices per risk feature, rows indexed by gold.
struct SimulatedPredictorSpec {
    std::vector<std::vector<double>> drusen = identity_rows(kDrusenLevels);
    std::vector<std::vector<double>> pigment = identity_rows(kPigmentLevels);
    std::vector<std::vector<double>> late_amd = identity_rows(kLateAmdLevels);
    std::uint64_t seed = 0;

    static std::vector<std::vector<double>> identity_rows(int n);
    static std::vector<std::vector<double>> uniform_rows(int n);
};

// Matrices tuned so the AI alone scores about 0.48 severity macro-F1 on a
// cohort balanced over levels 0-5.
SimulatedPredictorSpec calibrated_predictor_spec(std::uint64_t seed = 0);

void validate(const SimulatedPredictorSpec& spec);  // Validation error naming the matrix and row
void to_json(nlohmann::json& j, const SimulatedPredictorSpec& spec);
void from_json(const nlohmann::json& j, SimulatedPredictorSpec& spec);

// Each per-eye field is drawn from its matrix row for the gold value, using
// stream ("predictor", draw_index). Same spec and index -> same output.
FeaturePrediction simulate_predictor(const SimulatedPredictorSpec& spec, const PatientGrade& gold,
                                     std::uint64_t draw_index);

// Draw index is derived from the patient id, so the prediction for a patient
// does not depend on call order.
class SimulatedPredictor final : public Predictor {
public:
    explicit SimulatedPredictor(SimulatedPredictorSpec spec);
    WireResponse predict(const PredictRequest& request) override;
    std::string describe() const override { return "simulated"; }
    const SimulatedPredictorSpec& spec() const { return spec_; }

private:
    SimulatedPredictorSpec spec_;
};

enum class PredictorMode { Subprocess, Http, Fixture, Simulated };

std::string_view to_string(PredictorMode mode);
PredictorMode parse_predictor_mode(std::string_view text);

struct PredictorBinding {
    PredictorMode mode = PredictorMode::Fixture;
    // Command line (subprocess), base URL (http), prediction table path or
    // empty for gold echo (fixture), spec JSON path or empty for the
    // calibrated default (simulated).
    std::string target;
    std::chrono::milliseconds timeout{5000};
    std::uint64_t seed = 0;  // simulated mode, overrides the spec seed
};

// Binding syntax: "<mode>[:<target>]", e.g. "simulated", "http:http://127.0.0.1:9000",
// "subprocess:python3 model.py".
PredictorBinding parse_binding(std::string_view text);
std::unique_ptr<Predictor> make_predictor(const PredictorBinding& binding);

// ---------------------------------------------------------------------------

// Suggestions precomputed at study setup; each patient is written once.
class PredictionCache {
public:
    PredictionCache() = default;
    PredictionCache(PredictionCache&& other) noexcept;
    PredictionCache& operator=(PredictionCache&& other) noexcept;

    void put(const std::string& patient_id, AiSuggestion suggestion);  // Conflict on a second write
    const AiSuggestion* find(const std::string& patient_id) const;
    const AiSuggestion& at(const std::string& patient_id) const;  // NotFound
    std::size_t size() const;

    // Queries the predictor for every record, `parallelism` calls at a time.
    // The first failure is rethrown once all workers stop.
    static PredictionCache precompute(Predictor& predictor, const std::vector<PatientRecord>& records,
                                      const SeverityRuleTable& rules, unsigned parallelism = 1);

private:
    mutable std::mutex mutex_;
    std::map<std::string, AiSuggestion> entries_;
};

// ---------------------------------------------------------------------------
// Model comparison on held-out prediction sets.

struct ScaleF1 {
    int level = 0;
    double f1_a = 0.0;
    double f1_b = 0.0;
};

struct ModelComparison {
    std::string dataset;
    std::string model_a;
    std::string model_b;
    std::size_t patients = 0;
    std::vector<ScaleF1> scales;  // levels with gold support, ascending
    stats::BootstrapResult bootstrap;
};

// Severity predictions from two models against a shared gold vector.
ModelComparison compare_models(std::string dataset, std::span<const int> gold_a, std::span<const int> pred_a,
                               std::span<const int> gold_b, std::span<const int> pred_b,
                               const stats::BootstrapOptions& options, std::string model_a = "model_a",
                               std::string model_b = "model_b");

// "overall" holds the bootstrap mean F1s with their percentile intervals and
// the rank-sum p over the per-iteration F1s; "scales" are full-set values.
void to_json(nlohmann::json& j, const ModelComparison& c);

}  // namespace rbench
