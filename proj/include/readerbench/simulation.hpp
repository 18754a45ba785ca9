#pragma once

// Simulated clinicians driven through the grading service: per-feature
// confusion matrices for unassisted grading, field-wise adoption of the AI
// suggestion, and a timing generator with the random-intercept structure the
// timing model assumes.

#include "readerbench/design.hpp"
#include "readerbench/predictor.hpp"
#include "readerbench/rng.hpp"
#include "readerbench/service.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace rbench {

struct ReaderModel {
    // Unassisted grading, rows indexed by gold (seed field unused).
    SimulatedPredictorSpec manual;
    // Per-clinician skill s ~ N(0, skill_sd), clipped to [-0.9, 0.9]: s > 0
    // mixes each row toward the identity, s < 0 toward uniform.
    double skill_sd = 0.0;
    // Probability that a field shown by the AI is adopted, per clinician
    // N(trust, trust_sd) clipped to [0, 1].
    double trust = 0.0;
    double trust_sd = 0.0;
};

// Tuned so the Manual and Manual+AI severity macro-F1 means sit near 0.377
// and 0.466 against the bundled AI prediction table (AI alone 0.500).
ReaderModel calibrated_reader_model();

struct TimingTruth {
    double intercept = 39.8;                        // round 1, Manual
    std::array<double, 3> round_effects{-12.0, -13.0, -14.0};  // rounds 2-4, Manual
    double method_effect = -10.3;                   // round 1 AI saving
    std::array<double, 3> interactions{7.0, 7.8, 8.6};  // rounds 2-4
    double sigma_u2 = 108.3;                        // clinician intercept variance
    double sigma_cell = 6.0;                        // per (clinician, round, arm) deviation
    double case_cv = 0.25;                          // lognormal spread of single cases
    double floor_seconds = 3.0;                     // lower bound on a cell mean

    // Expected cell mean for clinician offset u.
    double cell_mean(int round_no, Arm arm, double u) const;
    // AI effect in a round: method_effect plus that round's interaction.
    double ai_effect(int round_no) const;
};

struct ClinicianProfile {
    std::string clinician_id;
    double skill = 0.0;
    double trust = 0.0;
    double intercept = 0.0;  // seconds, u_c
    std::optional<int> abandoned_round;
};

struct SimulationOptions {
    std::uint64_t seed = 0;
    ReaderModel readers = calibrated_reader_model();
    TimingTruth timing;
    // Clinicians whose timing is invalidated for one case in one round.
    int clinicians_with_missing_time = 5;
};

struct SimulationSummary {
    std::vector<ClinicianProfile> profiles;
    std::size_t events = 0;
    std::size_t manual_payloads = 0;
    std::size_t ai_payloads = 0;
    // "clinician/round/alias: field" for every predictor key found in a
    // serialized Manual case view, and every AI view missing its suggestion.
    std::vector<std::string> blinding_violations;
};

void to_json(nlohmann::json& j, const ClinicianProfile& p);
void to_json(nlohmann::json& j, const SimulationSummary& s);

std::vector<ClinicianProfile> draw_profiles(const std::vector<std::string>& clinicians,
                                            const SimulationOptions& options);

// An unassisted read of every field from the clinician's matrices.
PatientGrade draw_read(const ReaderModel& model, const ClinicianProfile& profile, const PatientGrade& gold, Rng& rng);

// Grades one patient: an unassisted read, then, when `suggestion` is given,
// each field replaced by the AI's with probability `profile.trust`. The
// number of draws taken from `rng` does not depend on the arm.
PatientGrade simulate_reader(const ReaderModel& model, const ClinicianProfile& profile, const PatientGrade& gold,
                             const PatientGrade* suggestion, Rng& rng);

// Runs every (clinician, round) session to completion through `service`,
// advancing `clock` by simulated case durations. Sessions run clinician by
// clinician, rounds in order.
SimulationSummary simulate_study(GradingService& service, ManualClock& clock, const std::vector<PatientRecord>& cohort,
                                 const SimulationOptions& options);

}  // namespace rbench
