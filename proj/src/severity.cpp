#include "readerbench/severity.hpp"

#include "readerbench/delimited.hpp"
#include "readerbench/error.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

namespace rbench {

std::string_view to_string(Eye eye) { return eye == Eye::Left ? "left" : "right"; }

SeverityLevel::SeverityLevel(int value) : value_(value) {
    if (value < kMin || value > kMax) {
        fail(ErrorKind::Validation, "severity level " + std::to_string(value) + " out of range [0,5]");
    }
}

namespace {

void check_field(int value, int levels, std::string_view eye_name, std::string_view field) {
    if (value < 0 || value >= levels) {
        fail(ErrorKind::Validation, std::string(eye_name) + "." + std::string(field) + "=" + std::to_string(value) +
                                        " out of range [0," + std::to_string(levels - 1) + "]");
    }
}

int simplified_scale_level(const PatientGrade& g) {
    if (g.left.late_amd == 1 || g.right.late_amd == 1) return 5;
    int score = 0;
    score += (g.left.drusen == 2) + (g.right.drusen == 2);
    score += (g.left.pigment == 1) + (g.right.pigment == 1);
    const bool no_large = g.left.drusen != 2 && g.right.drusen != 2;
    if (no_large && g.left.drusen == 1 && g.right.drusen == 1) score += 1;
    return std::min(score, 4);
}

std::string describe(const PatientGrade& g) {
    std::ostringstream out;
    out << "(" << g.left.drusen << "," << g.left.pigment << "," << g.left.late_amd << "," << g.right.drusen << ","
        << g.right.pigment << "," << g.right.late_amd << ")";
    return out.str();
}

}  // namespace

void validate(const EyeGrade& grade, std::string_view eye_name) {
    check_field(grade.drusen, kDrusenLevels, eye_name, "drusen");
    check_field(grade.pigment, kPigmentLevels, eye_name, "pigment");
    check_field(grade.late_amd, kLateAmdLevels, eye_name, "late_amd");
}

void validate(const PatientGrade& grade) {
    validate(grade.left, "left");
    validate(grade.right, "right");
}

int eye_index(const EyeGrade& g) {
    return (g.drusen * kPigmentLevels + g.pigment) * kLateAmdLevels + g.late_amd;
}

EyeGrade eye_from_index(int index) {
    EyeGrade g;
    g.late_amd = index % kLateAmdLevels;
    index /= kLateAmdLevels;
    g.pigment = index % kPigmentLevels;
    g.drusen = index / kPigmentLevels;
    return g;
}

int patient_index(const PatientGrade& g) { return eye_index(g.left) * kEyeGradeCount + eye_index(g.right); }

PatientGrade patient_from_index(int index) {
    return {eye_from_index(index / kEyeGradeCount), eye_from_index(index % kEyeGradeCount)};
}

SeverityRuleTable SeverityRuleTable::simplified_scale() {
    SeverityRuleTable table;
    for (int i = 0; i < kPatientGradeCount; ++i) {
        table.levels_[i] = SeverityLevel(simplified_scale_level(patient_from_index(i)));
    }
    return table;
}

SeverityRuleTable SeverityRuleTable::from_levels(const std::array<SeverityLevel, kPatientGradeCount>& levels) {
    std::vector<std::string> asymmetric;
    std::vector<std::string> late_violations;
    for (int i = 0; i < kPatientGradeCount; ++i) {
        const PatientGrade g = patient_from_index(i);
        const int level = levels[i].value();
        if ((g.left.late_amd == 1 || g.right.late_amd == 1) && level != 5) {
            late_violations.push_back(describe(g) + "->" + std::to_string(level));
        }
        const int mirrored = levels[patient_index(g.swapped())].value();
        if (patient_index(g) < patient_index(g.swapped()) && level != mirrored) {
            asymmetric.push_back(describe(g) + "->" + std::to_string(level) + " vs " + describe(g.swapped()) + "->" +
                                 std::to_string(mirrored));
        }
    }
    auto join = [](const std::vector<std::string>& items) {
        std::string out;
        for (const auto& s : items) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    };
    if (!late_violations.empty()) {
        fail(ErrorKind::Validation, "invariant violation: late AMD rows must map to 5: " + join(late_violations));
    }
    if (!asymmetric.empty()) {
        fail(ErrorKind::Validation, "asymmetry: " + join(asymmetric));
    }
    SeverityRuleTable table;
    table.levels_ = levels;
    return table;
}

SeverityLevel compute_severity(const PatientGrade& grade, const SeverityRuleTable& rules) {
    validate(grade);
    return rules.lookup(grade);
}

SeverityLevel compute_severity(const PatientGrade& grade) {
    static const SeverityRuleTable kDefault = SeverityRuleTable::simplified_scale();
    return compute_severity(grade, kDefault);
}

std::vector<RuleTableRow> enumerate_rule_table(const SeverityRuleTable& rules) {
    std::vector<RuleTableRow> rows;
    rows.reserve(kPatientGradeCount);
    for (int i = 0; i < kPatientGradeCount; ++i) {
        rows.push_back({patient_from_index(i), rules.levels()[i]});
    }
    return rows;
}

SeverityRuleTable parse_rule_table(std::string_view text, std::string_view source) {
    const DelimitedTable table = parse_delimited(text, source);
    const std::array<std::size_t, 7> cols = {
        table.column("drusen_L"), table.column("pigment_L"), table.column("late_L"), table.column("drusen_R"),
        table.column("pigment_R"), table.column("late_R"), table.column("level"),
    };
    std::array<std::optional<SeverityLevel>, kPatientGradeCount> seen{};
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = std::string(source) + ":" + std::to_string(table.line_numbers[r]);
        PatientGrade g;
        g.left.drusen = parse_int_field(row[cols[0]], "drusen_L", where);
        g.left.pigment = parse_int_field(row[cols[1]], "pigment_L", where);
        g.left.late_amd = parse_int_field(row[cols[2]], "late_L", where);
        g.right.drusen = parse_int_field(row[cols[3]], "drusen_R", where);
        g.right.pigment = parse_int_field(row[cols[4]], "pigment_R", where);
        g.right.late_amd = parse_int_field(row[cols[5]], "late_R", where);
        try {
            validate(g);
        } catch (const Error& e) {
            fail(ErrorKind::Validation, where + ": " + e.what());
        }
        const int level = parse_int_field(row[cols[6]], "level", where);
        if (level < SeverityLevel::kMin || level > SeverityLevel::kMax) {
            fail(ErrorKind::Validation, where + ": level " + std::to_string(level) + " out of range [0,5]");
        }
        auto& slot = seen[patient_index(g)];
        if (slot) {
            fail(ErrorKind::Validation, where + ": duplicate row " + describe(g));
        }
        slot = SeverityLevel(level);
    }
    std::vector<std::string> missing;
    std::array<SeverityLevel, kPatientGradeCount> levels{};
    for (int i = 0; i < kPatientGradeCount; ++i) {
        if (!seen[i]) {
            missing.push_back(describe(patient_from_index(i)));
        } else {
            levels[i] = *seen[i];
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : " ") + m;
        fail(ErrorKind::Validation, "incomplete table: " + std::to_string(missing.size()) + " missing rows: " + list);
    }
    return SeverityRuleTable::from_levels(levels);
}

SeverityRuleTable load_rule_table(const std::filesystem::path& path) {
    return parse_rule_table(read_text_file(path), path.string());
}

std::string format_rule_table(const SeverityRuleTable& rules) {
    std::ostringstream out;
    out << "drusen_L,pigment_L,late_L,drusen_R,pigment_R,late_R,level\n";
    for (const auto& row : enumerate_rule_table(rules)) {
        const auto& g = row.grade;
        out << g.left.drusen << ',' << g.left.pigment << ',' << g.left.late_amd << ',' << g.right.drusen << ','
            << g.right.pigment << ',' << g.right.late_amd << ',' << row.level.value() << '\n';
    }
    return out.str();
}

}  // namespace rbench
