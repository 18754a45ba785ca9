#include "readerbench/stats/serialize.hpp"

#include <nlohmann/json.hpp>

namespace rbench::stats {

using nlohmann::json;

void to_json(json& j, const WilcoxonResult& r) {
    j = json{{"statistic", r.statistic},
             {"n_x", r.n_x},
             {"n_y", r.n_y},
             {"method", to_string(r.method)},
             {"z", r.z ? json(*r.z) : json(nullptr)},
             {"p_two_sided", r.p_two_sided},
             {"tie_correction_applied", r.tie_correction_applied}};
}

void to_json(json& j, const Interval& i) { j = json{{"low", i.low}, {"high", i.high}}; }

void to_json(json& j, const BootstrapResult& r) {
    json pairs = json::array();
    for (std::size_t it = 0; it < r.f1_a.size(); ++it) {
        pairs.push_back({{"iteration", it}, {"f1_a", r.f1_a[it]}, {"f1_b", r.f1_b[it]}, {"subsample", r.subsamples[it]}});
    }
    j = json{{"iterations", r.iterations},
             {"sample_size", r.sample_size},
             {"seed", r.seed},
             {"full_f1_a", r.full_f1_a},
             {"full_f1_b", r.full_f1_b},
             {"mean_f1_a", r.mean_f1_a},
             {"mean_f1_b", r.mean_f1_b},
             {"ci_a", r.ci_a},
             {"ci_b", r.ci_b},
             {"test", r.test},
             {"samples", pairs}};
}

void to_json(json& j, const Coefficient& c) {
    j = json{{"name", c.name}, {"estimate", c.estimate}, {"std_error", c.std_error}, {"z", c.z},
             {"p", c.p},       {"ci_low", c.ci_low},     {"ci_high", c.ci_high}};
}

void to_json(json& j, const LmmFit& f) {
    j = json{{"coefficients", f.coefficients},
             {"sigma_u2", f.sigma_u2},
             {"sigma_e2", f.sigma_e2},
             {"reml_loglik", f.reml_loglik},
             {"converged", f.converged},
             {"at_boundary", f.at_boundary},
             {"diagnostics", f.diagnostics},
             {"coding", f.coding},
             {"n_obs", f.n_obs},
             {"n_groups", f.n_groups}};
}

void to_json(json& j, const RoundEffect& e) {
    j = json{{"round", e.round}, {"estimate", e.estimate}, {"std_error", e.std_error}, {"z", e.z}, {"p", e.p}};
}

void to_json(json& j, const MetricsSummary& m) {
    json classes = json::array();
    for (const auto& c : m.per_class) {
        classes.push_back({{"label", c.label},
                           {"support", c.support},
                           {"precision", c.precision},
                           {"sensitivity", c.sensitivity},
                           {"specificity", c.specificity},
                           {"f1", c.f1}});
    }
    j = json{{"per_class", classes},
             {"macro_f1", m.macro_f1},
             {"macro_precision", m.macro_precision},
             {"macro_sensitivity", m.macro_sensitivity},
             {"macro_specificity", m.macro_specificity}};
}

void to_json(json& j, const GraderComparison& g) {
    json clinicians = json::array();
    for (const auto& c : g.clinicians) {
        clinicians.push_back({{"clinician_id", c.clinician_id},
                              {"patients", c.patients},
                              {"f1_manual", c.f1_manual},
                              {"f1_ai", c.f1_ai},
                              {"delta", c.delta},
                              {"manual", c.manual},
                              {"ai", c.ai}});
    }
    json excluded = json::array();
    for (const auto& e : g.excluded) excluded.push_back({{"clinician_id", e.clinician_id}, {"reason", e.reason}});
    json per_class = json::array();
    for (const auto& m : g.per_class) per_class.push_back({{"label", m.label}, {"manual", m.manual}, {"ai", m.ai}});
    j = json{{"target", to_string(g.target)},
             {"clinicians", clinicians},
             {"excluded", excluded},
             {"mean_manual", g.mean_manual},
             {"mean_ai", g.mean_ai},
             {"ci_manual", g.ci_manual},
             {"ci_ai", g.ci_ai},
             {"improved", g.improved},
             {"test", g.test},
             {"per_class", per_class}};
}

}  // namespace rbench::stats
