#pragma once

// AREDS Simplified Severity Scale: per-eye risk features -> patient level 0..5.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace rbench {

enum class Eye { Left, Right };

std::string_view to_string(Eye eye);

// Risk-feature grades for a single eye.
//   drusen:   0 = small/none, 1 = medium, 2 = large
//   pigment:  0 = absent, 1 = present
//   late_amd: 0 = absent, 1 = present
struct EyeGrade {
    int drusen = 0;
    int pigment = 0;
    int late_amd = 0;

    friend auto operator<=>(const EyeGrade&, const EyeGrade&) = default;
};

inline constexpr int kDrusenLevels = 3;
inline constexpr int kPigmentLevels = 2;
inline constexpr int kLateAmdLevels = 2;
inline constexpr int kEyeGradeCount = kDrusenLevels * kPigmentLevels * kLateAmdLevels;  // 12
inline constexpr int kPatientGradeCount = kEyeGradeCount * kEyeGradeCount;               // 144

struct PatientGrade {
    EyeGrade left;
    EyeGrade right;

    const EyeGrade& eye(Eye e) const { return e == Eye::Left ? left : right; }
    PatientGrade swapped() const { return {right, left}; }

    friend auto operator<=>(const PatientGrade&, const PatientGrade&) = default;
};

// Patient-level severity, 0..5.
class SeverityLevel {
public:
    static constexpr int kMin = 0;
    static constexpr int kMax = 5;
    static constexpr int kCount = 6;

    constexpr SeverityLevel() = default;
    explicit SeverityLevel(int value);

    constexpr int value() const { return value_; }

    friend auto operator<=>(const SeverityLevel&, const SeverityLevel&) = default;

private:
    int value_ = 0;
};

// Throws Error(Validation) naming the offending field, e.g. "right.drusen".
void validate(const EyeGrade& grade, std::string_view eye_name = "eye");
void validate(const PatientGrade& grade);

// Lexicographic (drusen, pigment, late_amd) index in [0, 12).
int eye_index(const EyeGrade& grade);
EyeGrade eye_from_index(int index);

// Lexicographic (left fields, right fields) index in [0, 144).
int patient_index(const PatientGrade& grade);
PatientGrade patient_from_index(int index);

// Total mapping from (left, right) eye grades to a severity level.
class SeverityRuleTable {
public:
    // The Simplified Severity Scale: late AMD in either eye -> 5; otherwise one
    // point per eye with large drusen, one per eye with pigment, plus one when
    // both eyes have medium drusen and neither has large; capped at 4.
    static SeverityRuleTable simplified_scale();

    // Builds a table from an explicit 144-entry mapping, checking totality,
    // eye-swap symmetry and late-AMD dominance.
    static SeverityRuleTable from_levels(const std::array<SeverityLevel, kPatientGradeCount>& levels);

    SeverityLevel lookup(const PatientGrade& grade) const { return levels_[patient_index(grade)]; }

    const std::array<SeverityLevel, kPatientGradeCount>& levels() const { return levels_; }

    friend bool operator==(const SeverityRuleTable&, const SeverityRuleTable&) = default;

private:
    std::array<SeverityLevel, kPatientGradeCount> levels_{};
};

SeverityLevel compute_severity(const PatientGrade& grade, const SeverityRuleTable& rules);
SeverityLevel compute_severity(const PatientGrade& grade);

struct RuleTableRow {
    PatientGrade grade;
    SeverityLevel level;
};

// All 144 combinations in lexicographic order of
// (drusen_L, pigment_L, late_L, drusen_R, pigment_R, late_R).
std::vector<RuleTableRow> enumerate_rule_table(const SeverityRuleTable& rules);

// Rule-table file: delimited text with header
//   drusen_L,pigment_L,late_L,drusen_R,pigment_R,late_R,level
SeverityRuleTable load_rule_table(const std::filesystem::path& path);
SeverityRuleTable parse_rule_table(std::string_view text, std::string_view source = "<rule table>");
std::string format_rule_table(const SeverityRuleTable& rules);

}  // namespace rbench
