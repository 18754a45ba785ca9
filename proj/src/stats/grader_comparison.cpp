#include "readerbench/stats/grader_comparison.hpp"

#include "readerbench/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace rbench::stats {

std::string_view to_string(GradingTarget target) {
    switch (target) {
        case GradingTarget::Severity: return "severity";
        case GradingTarget::Drusen: return "drusen";
        case GradingTarget::Pigment: return "pigment";
        case GradingTarget::LateAmd: return "late_amd";
    }
    return "severity";
}

GradingTarget parse_target(std::string_view text) {
    for (auto t : kAllTargets)
        if (to_string(t) == text) return t;
    fail(ErrorKind::Validation, "unknown grading target: " + std::string(text));
}

std::vector<Label> target_classes(GradingTarget target) {
    switch (target) {
        case GradingTarget::Severity: return {0, 1, 2, 3, 4, 5};
        case GradingTarget::Drusen: return {0, 1, 2};
        case GradingTarget::Pigment:
        case GradingTarget::LateAmd: return {0, 1};
    }
    return {};
}

GoldIndex make_gold_index(const Schedule& schedule, const std::vector<PatientRecord>& cohort,
                          const SeverityRuleTable& rules) {
    GoldIndex index;
    index.rules = rules;
    index.alias_to_patient = schedule.alias_registry;
    for (const auto& p : cohort) index.gold[p.patient_id] = p.gold;
    for (const auto& [alias, patient] : index.alias_to_patient) {
        if (!index.gold.contains(patient)) fail(ErrorKind::Validation, "schedule patient " + patient + " not in cohort");
    }
    return index;
}

namespace {

int feature(const EyeGrade& e, GradingTarget target) {
    switch (target) {
        case GradingTarget::Drusen: return e.drusen;
        case GradingTarget::Pigment: return e.pigment;
        case GradingTarget::LateAmd: return e.late_amd;
        case GradingTarget::Severity: break;
    }
    return 0;
}

// Appends the scored items for one patient: one severity label, or one label
// per eye for a risk feature.
void append_items(const PatientGrade& gold, const PatientGrade& graded, GradingTarget target, const GoldIndex& index,
                  std::vector<Label>& g, std::vector<Label>& p) {
    if (target == GradingTarget::Severity) {
        g.push_back(compute_severity(gold, index.rules).value());
        p.push_back(compute_severity(graded, index.rules).value());
        return;
    }
    for (Eye eye : {Eye::Left, Eye::Right}) {
        g.push_back(feature(gold.eye(eye), target));
        p.push_back(feature(graded.eye(eye), target));
    }
}

}  // namespace

GraderComparison paired_grader_comparison(const std::vector<GradingEvent>& events, const GoldIndex& gold,
                                          GradingTarget target, const std::vector<std::string>& expected_patients) {
    // clinician -> arm -> patient -> grades
    std::map<std::string, std::array<std::map<std::string, PatientGrade>, 2>> graded;
    std::map<std::string, std::string> problems;
    for (const auto& e : events) {
        const auto it = gold.alias_to_patient.find(e.patient_alias);
        if (it == gold.alias_to_patient.end()) fail(ErrorKind::Validation, "event alias " + e.patient_alias + " unknown");
        auto& arm_map = graded[e.clinician_id][e.arm == Arm::Manual ? 0 : 1];
        if (!arm_map.emplace(it->second, e.submitted).second) {
            problems.emplace(e.clinician_id, "patient " + it->second + " graded twice under " + std::string(to_string(e.arm)));
        }
    }

    const std::set<std::string> expected(expected_patients.begin(), expected_patients.end());
    const auto classes = target_classes(target);
    GraderComparison out;
    out.target = target;
    for (const auto& [clinician, arms] : graded) {
        std::string reason;
        if (const auto p = problems.find(clinician); p != problems.end()) {
            reason = p->second;
        } else if (arms[0].empty() || arms[1].empty()) {
            reason = arms[0].empty() ? "no Manual gradings" : "no ManualPlusAI gradings";
        } else {
            std::set<std::string> manual_set, ai_set;
            for (const auto& [pid, g] : arms[0]) manual_set.insert(pid);
            for (const auto& [pid, g] : arms[1]) ai_set.insert(pid);
            if (manual_set != ai_set) {
                reason = "arms cover different patients (" + std::to_string(manual_set.size()) + " Manual vs " +
                         std::to_string(ai_set.size()) + " ManualPlusAI)";
            } else if (!expected.empty() && manual_set != expected) {
                reason = "incomplete arm coverage: " + std::to_string(manual_set.size()) + " of " +
                         std::to_string(expected.size()) + " patients";
            }
        }
        if (!reason.empty()) {
            out.excluded.push_back({clinician, reason});
            continue;
        }

        std::array<std::vector<Label>, 2> g, p;
        for (int a = 0; a < 2; ++a) {
            for (const auto& [pid, grades] : arms[static_cast<std::size_t>(a)]) {
                append_items(gold.gold.at(pid), grades, target, gold, g[static_cast<std::size_t>(a)],
                             p[static_cast<std::size_t>(a)]);
            }
        }
        ClinicianComparison cc;
        cc.clinician_id = clinician;
        cc.patients = arms[0].size();
        cc.manual = per_class_metrics(confusion(g[0], p[0], classes));
        cc.ai = per_class_metrics(confusion(g[1], p[1], classes));
        cc.f1_manual = cc.manual.macro_f1;
        cc.f1_ai = cc.ai.macro_f1;
        cc.delta = cc.f1_ai - cc.f1_manual;
        out.clinicians.push_back(std::move(cc));
    }
    if (out.clinicians.empty()) fail(ErrorKind::Validation, "no clinician has complete gradings in both arms");

    std::vector<double> manual, ai;
    for (const auto& c : out.clinicians) {
        manual.push_back(c.f1_manual);
        ai.push_back(c.f1_ai);
        if (c.delta > 0.0) ++out.improved;
    }
    const double n = static_cast<double>(out.clinicians.size());
    out.mean_manual = std::accumulate(manual.begin(), manual.end(), 0.0) / n;
    out.mean_ai = std::accumulate(ai.begin(), ai.end(), 0.0) / n;
    out.ci_manual = percentile_interval(manual);
    out.ci_ai = percentile_interval(ai);
    out.test = wilcoxon_rank_sum(manual, ai);

    for (std::size_t k = 0; k < classes.size(); ++k) {
        PerClassMean m;
        m.label = classes[k];
        for (const auto& c : out.clinicians) {
            m.manual += c.manual.per_class[k].f1;
            m.ai += c.ai.per_class[k].f1;
        }
        m.manual /= n;
        m.ai /= n;
        out.per_class.push_back(m);
    }
    return out;
}

MetricsSummary score_grades(const GoldIndex& gold, const std::map<std::string, PatientGrade>& graded,
                            GradingTarget target, const std::vector<std::string>& patients) {
    std::vector<Label> g, p;
    for (const auto& id : patients) {
        const auto gi = gold.gold.find(id);
        const auto pi = graded.find(id);
        if (gi == gold.gold.end() || pi == graded.end()) fail(ErrorKind::NotFound, "no grades for patient " + id);
        append_items(gi->second, pi->second, target, gold, g, p);
    }
    return per_class_metrics(confusion(g, p, target_classes(target)));
}

}  // namespace rbench::stats
