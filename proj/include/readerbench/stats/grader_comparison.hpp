#pragma once

// Manual vs Manual+AI accuracy per clinician, pooled across clinicians.

#include "readerbench/design.hpp"
#include "readerbench/events.hpp"
#include "readerbench/stats/bootstrap.hpp"
#include "readerbench/stats/metrics.hpp"
#include "readerbench/stats/wilcoxon.hpp"

#include <map>
#include <string>
#include <vector>

namespace rbench::stats {

// Severity is scored once per patient; each risk feature once per eye.
enum class GradingTarget { Severity, Drusen, Pigment, LateAmd };

std::string_view to_string(GradingTarget target);
GradingTarget parse_target(std::string_view text);
inline constexpr GradingTarget kAllTargets[] = {GradingTarget::Severity, GradingTarget::Drusen, GradingTarget::Pigment,
                                                GradingTarget::LateAmd};

std::vector<Label> target_classes(GradingTarget target);

// Resolves event aliases (either side of the washout) to patients and gold.
struct GoldIndex {
    std::map<std::string, std::string> alias_to_patient;
    std::map<std::string, PatientGrade> gold;  // by patient id
    SeverityRuleTable rules = SeverityRuleTable::simplified_scale();
};

GoldIndex make_gold_index(const Schedule& schedule, const std::vector<PatientRecord>& cohort,
                          const SeverityRuleTable& rules);

struct ClinicianComparison {
    std::string clinician_id;
    double f1_manual = 0.0;
    double f1_ai = 0.0;
    double delta = 0.0;  // f1_ai - f1_manual
    std::size_t patients = 0;
    MetricsSummary manual;
    MetricsSummary ai;
};

struct ExcludedClinician {
    std::string clinician_id;
    std::string reason;
};

struct PerClassMean {
    Label label = 0;
    double manual = 0.0;  // mean over included clinicians of the class F1
    double ai = 0.0;
};

struct GraderComparison {
    GradingTarget target = GradingTarget::Severity;
    std::vector<ClinicianComparison> clinicians;  // sorted by id
    std::vector<ExcludedClinician> excluded;
    double mean_manual = 0.0;
    double mean_ai = 0.0;
    Interval ci_manual;  // percentile interval over clinician F1s
    Interval ci_ai;
    std::size_t improved = 0;  // clinicians with delta > 0
    WilcoxonResult test;       // rank-sum over the two per-clinician F1 vectors
    std::vector<PerClassMean> per_class;
};

// A clinician is included when both arms grade the same non-empty patient set
// with no patient graded twice in one arm (and, if `expected_patients` is
// non-empty, that set equals it). Everyone else is excluded with a reason.
GraderComparison paired_grader_comparison(const std::vector<GradingEvent>& events, const GoldIndex& gold,
                                          GradingTarget target,
                                          const std::vector<std::string>& expected_patients = {});

// Scores one fixed set of grades (the AI alone, say) over `patients` the way
// a clinician arm is scored. NotFound when a patient has no grades.
MetricsSummary score_grades(const GoldIndex& gold, const std::map<std::string, PatientGrade>& graded,
                            GradingTarget target, const std::vector<std::string>& patients);

}  // namespace rbench::stats
