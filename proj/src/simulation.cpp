#include "readerbench/simulation.hpp"

#include "readerbench/error.hpp"
#include "readerbench/rng.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace rbench {

using nlohmann::json;

ReaderModel calibrated_reader_model() {
    ReaderModel m;
    m.manual.drusen = {{0.69, 0.24, 0.07}, {0.30, 0.49, 0.21}, {0.08, 0.27, 0.65}};
    m.manual.pigment = {{0.78, 0.22}, {0.33, 0.67}};
    m.manual.late_amd = {{0.91, 0.09}, {0.21, 0.79}};
    m.skill_sd = 0.05;
    m.trust = 0.55;
    m.trust_sd = 0.05;
    return m;
}

double TimingTruth::ai_effect(int round_no) const {
    return method_effect + (round_no > 1 ? interactions.at(static_cast<std::size_t>(round_no - 2)) : 0.0);
}

double TimingTruth::cell_mean(int round_no, Arm arm, double u) const {
    double mean = intercept + u;
    if (round_no > 1) mean += round_effects.at(static_cast<std::size_t>(round_no - 2));
    if (arm == Arm::ManualPlusAI) mean += ai_effect(round_no);
    return mean;
}

void to_json(json& j, const ClinicianProfile& p) {
    j = json{{"clinician_id", p.clinician_id}, {"skill", p.skill}, {"trust", p.trust}, {"intercept", p.intercept}};
    j["abandoned_round"] = p.abandoned_round ? json(*p.abandoned_round) : json(nullptr);
}

void to_json(json& j, const SimulationSummary& s) {
    j = json{{"profiles", s.profiles},
             {"events", s.events},
             {"manual_payloads", s.manual_payloads},
             {"ai_payloads", s.ai_payloads},
             {"blinding_violations", s.blinding_violations}};
}

std::vector<ClinicianProfile> draw_profiles(const std::vector<std::string>& clinicians,
                                            const SimulationOptions& options) {
    std::vector<ClinicianProfile> out;
    for (const auto& id : clinicians) {
        Rng rng(options.seed, "clinician/" + id);
        ClinicianProfile p;
        p.clinician_id = id;
        p.skill = std::clamp(rng.normal(0.0, options.readers.skill_sd), -0.9, 0.9);
        p.trust = std::clamp(rng.normal(options.readers.trust, options.readers.trust_sd), 0.0, 1.0);
        p.intercept = rng.normal(0.0, std::sqrt(options.timing.sigma_u2));
        out.push_back(std::move(p));
    }
    const auto missing = static_cast<std::size_t>(std::max(0, options.clinicians_with_missing_time));
    if (missing > out.size()) {
        fail(ErrorKind::Argument, fmt::format("{} clinicians with missing time but only {} clinicians", missing,
                                              out.size()));
    }
    std::vector<std::size_t> order(out.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(options.seed, "missing-time");
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t k = 0; k < missing; ++k) {
        out[order[k]].abandoned_round = 1 + static_cast<int>(rng.below(kProtocolRounds));
    }
    return out;
}

namespace {

int draw_row(const std::vector<std::vector<double>>& matrix, int gold, double skill, Rng& rng) {
    const auto& base = matrix.at(static_cast<std::size_t>(gold));
    std::vector<double> row(base.size());
    const double uniform = 1.0 / static_cast<double>(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
        const double target = skill >= 0.0 ? (static_cast<int>(k) == gold ? 1.0 : 0.0) : uniform;
        const double w = std::abs(skill);
        row[k] = (1.0 - w) * base[k] + w * target;
    }
    return static_cast<int>(rng.categorical(row));
}

}  // namespace

PatientGrade draw_read(const ReaderModel& model, const ClinicianProfile& profile, const PatientGrade& gold, Rng& rng) {
    PatientGrade out;
    for (Eye eye : {Eye::Left, Eye::Right}) {
        const EyeGrade& g = gold.eye(eye);
        (eye == Eye::Left ? out.left : out.right) =
            EyeGrade{draw_row(model.manual.drusen, g.drusen, profile.skill, rng),
                     draw_row(model.manual.pigment, g.pigment, profile.skill, rng),
                     draw_row(model.manual.late_amd, g.late_amd, profile.skill, rng)};
    }
    return out;
}

PatientGrade simulate_reader(const ReaderModel& model, const ClinicianProfile& profile, const PatientGrade& gold,
                             const PatientGrade* suggestion, Rng& rng) {
    PatientGrade out = draw_read(model, profile, gold, rng);
    for (Eye eye : {Eye::Left, Eye::Right}) {
        EyeGrade& e = eye == Eye::Left ? out.left : out.right;
        const double adopt[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
        if (!suggestion) continue;
        const EyeGrade& ai = suggestion->eye(eye);
        if (adopt[0] < profile.trust) e.drusen = ai.drusen;
        if (adopt[1] < profile.trust) e.pigment = ai.pigment;
        if (adopt[2] < profile.trust) e.late_amd = ai.late_amd;
    }
    return out;
}

SimulationSummary simulate_study(GradingService& service, ManualClock& clock, const std::vector<PatientRecord>& cohort,
                                 const SimulationOptions& options) {
    const Schedule& schedule = service.schedule();
    std::map<std::string, const PatientRecord*> by_id;
    for (const auto& r : cohort) by_id.emplace(r.patient_id, &r);

    SimulationSummary summary;
    summary.profiles = draw_profiles(schedule.clinicians, options);
    const TimingTruth& t = options.timing;

    for (const auto& profile : summary.profiles) {
        for (int round_no = 1; round_no <= kProtocolRounds; ++round_no) {
            Rng grades(options.seed, "grades/" + profile.clinician_id, static_cast<std::uint64_t>(round_no));
            Rng timing(options.seed, "timing/" + profile.clinician_id, static_cast<std::uint64_t>(round_no));
            const double cell_noise[2] = {timing.normal(0.0, t.sigma_cell), timing.normal(0.0, t.sigma_cell)};

            const auto session = service.start_session(profile.clinician_id, round_no);
            const bool abandons = profile.abandoned_round == round_no;
            const std::size_t abandon_at = abandons ? timing.below(session.total) : 0;

            for (;;) {
                CaseView view;
                try {
                    view = service.next_case(session.session_id);
                } catch (const Error& ex) {
                    if (ex.kind() == ErrorKind::EndOfRound) break;
                    throw;
                }
                const json payload = view;
                const auto where = fmt::format("{}/{}/{}", profile.clinician_id, round_no, view.patient_alias);
                const PatientGrade* suggestion = nullptr;
                PatientGrade shown;
                if (view.arm == Arm::Manual) {
                    ++summary.manual_payloads;
                    for (const auto& field : predictor_fields(payload)) {
                        summary.blinding_violations.push_back(where + ": " + field);
                    }
                } else {
                    ++summary.ai_payloads;
                    if (!payload.contains("ai_suggestion")) {
                        summary.blinding_violations.push_back(where + ": suggestion missing");
                    } else {
                        shown = payload.at("ai_suggestion").at("prediction").get<FeaturePrediction>().grades();
                        suggestion = &shown;
                    }
                }

                const auto pid = schedule.patient_for_alias(view.patient_alias);
                const PatientGrade submitted =
                    simulate_reader(options.readers, profile, by_id.at(pid)->gold, suggestion, grades);

                const int arm_index = view.arm == Arm::Manual ? 0 : 1;
                const double mean =
                    std::max(t.floor_seconds, t.cell_mean(round_no, view.arm, profile.intercept) + cell_noise[arm_index]);
                const double s = std::sqrt(std::log1p(t.case_cv * t.case_cv));
                clock.advance(mean * std::exp(timing.normal(-0.5 * s * s, s)));
                if (abandons && view.position == abandon_at) service.abandon(session.session_id);
                service.submit(session.session_id, view.patient_alias, submitted);
                ++summary.events;
            }
        }
    }
    return summary;
}

}  // namespace rbench
