#include "readerbench/error.hpp"
#include "readerbench/severity.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace rbench;

namespace {

// Independent rendering of the Simplified Severity Scale rule text, written
// from the rule statement rather than from the library code.
int oracle_level(int dl, int pl, int ll, int dr, int pr, int lr) {
    if (ll || lr) return 5;
    int large_drusen_eyes = 0;
    for (int d : {dl, dr}) large_drusen_eyes += d == 2 ? 1 : 0;
    int pigment_eyes = pl + pr;
    int bilateral_medium = (large_drusen_eyes == 0 && dl == 1 && dr == 1) ? 1 : 0;
    int total = large_drusen_eyes + pigment_eyes + bilateral_medium;
    return total > 4 ? 4 : total;
}

PatientGrade grade(int dl, int pl, int ll, int dr, int pr, int lr) { return {{dl, pl, ll}, {dr, pr, lr}}; }

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / ("rbench_" + name);
    std::ofstream(path) << content;
    return path;
}

}  // namespace

TEST(Severity, SpecExamples) {
    EXPECT_EQ(compute_severity(grade(0, 0, 0, 0, 0, 0)).value(), 0);
    EXPECT_EQ(compute_severity(grade(0, 0, 0, 0, 0, 1)).value(), 5);
    EXPECT_EQ(compute_severity(grade(2, 1, 0, 2, 1, 0)).value(), 4);
    EXPECT_EQ(compute_severity(grade(1, 0, 0, 1, 0, 0)).value(), 1);
}

TEST(Severity, MatchesBruteForceOracleOnAllCombinations) {
    const auto rules = SeverityRuleTable::simplified_scale();
    int checked = 0;
    for (int dl = 0; dl < 3; ++dl)
        for (int pl = 0; pl < 2; ++pl)
            for (int ll = 0; ll < 2; ++ll)
                for (int dr = 0; dr < 3; ++dr)
                    for (int pr = 0; pr < 2; ++pr)
                        for (int lr = 0; lr < 2; ++lr) {
                            EXPECT_EQ(compute_severity(grade(dl, pl, ll, dr, pr, lr), rules).value(),
                                      oracle_level(dl, pl, ll, dr, pr, lr));
                            ++checked;
                        }
    EXPECT_EQ(checked, 144);
}

TEST(Severity, EyeSwapSymmetryAndLateDominance) {
    for (const auto& row : enumerate_rule_table(SeverityRuleTable::simplified_scale())) {
        EXPECT_EQ(compute_severity(row.grade), compute_severity(row.grade.swapped()));
        if (row.grade.left.late_amd || row.grade.right.late_amd) EXPECT_EQ(row.level.value(), 5);
    }
}

TEST(Severity, MonotoneInEachRiskField) {
    for (const auto& row : enumerate_rule_table(SeverityRuleTable::simplified_scale())) {
        for (Eye eye : {Eye::Left, Eye::Right}) {
            PatientGrade up = row.grade;
            EyeGrade& e = eye == Eye::Left ? up.left : up.right;
            if (e.drusen < 2) {
                PatientGrade g = up;
                (eye == Eye::Left ? g.left : g.right).drusen += 1;
                EXPECT_GE(compute_severity(g).value(), row.level.value());
            }
            if (e.pigment < 1) {
                PatientGrade g = up;
                (eye == Eye::Left ? g.left : g.right).pigment += 1;
                EXPECT_GE(compute_severity(g).value(), row.level.value());
            }
        }
    }
}

TEST(Severity, OutOfRangeFieldIsNamed) {
    try {
        compute_severity(grade(0, 0, 0, 3, 0, 0));
        FAIL() << "expected validation error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Validation);
        EXPECT_NE(std::string(e.what()).find("right.drusen"), std::string::npos);
    }
    EXPECT_THROW(compute_severity(grade(0, 2, 0, 0, 0, 0)), Error);
    EXPECT_THROW(compute_severity(grade(0, 0, -1, 0, 0, 0)), Error);
    EXPECT_THROW(SeverityLevel(6), Error);
}

TEST(RuleTable, EnumerationShape) {
    const auto rows = enumerate_rule_table(SeverityRuleTable::simplified_scale());
    ASSERT_EQ(rows.size(), 144u);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i - 1].grade, rows[i].grade);
    int late_rows = 0;
    for (const auto& r : rows) late_rows += (r.grade.left.late_amd || r.grade.right.late_amd) ? 1 : 0;
    // 6 x 6 combinations have no late AMD in either eye.
    EXPECT_EQ(late_rows, 144 - 36);
}

TEST(RuleTable, FileRoundTrip) {
    const auto def = SeverityRuleTable::simplified_scale();
    const auto path = temp_file("rules_full.csv", format_rule_table(def));
    EXPECT_EQ(load_rule_table(path), def);

    // Tab-delimited input is accepted too.
    std::string tsv = format_rule_table(def);
    for (auto& c : tsv) c = c == ',' ? '\t' : c;
    EXPECT_EQ(parse_rule_table(tsv), def);
}

TEST(RuleTable, IncompleteTableListsMissingRows) {
    std::string text = format_rule_table(SeverityRuleTable::simplified_scale());
    const auto last_row = text.rfind('\n', text.size() - 2);
    text = text.substr(0, last_row + 1);  // drop (2,1,1,2,1,1)
    try {
        parse_rule_table(text);
        FAIL() << "expected incomplete-table error";
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("incomplete table"), std::string::npos);
        EXPECT_NE(msg.find("(2,1,1,2,1,1)"), std::string::npos);
    }
}

TEST(RuleTable, LateAmdRowMustMapToFive) {
    std::string text = format_rule_table(SeverityRuleTable::simplified_scale());
    const std::string row = "0,0,1,0,0,0,5";
    text.replace(text.find(row), row.size(), "0,0,1,0,0,0,4");
    try {
        parse_rule_table(text);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("invariant violation"), std::string::npos);
    }
}

TEST(RuleTable, AsymmetricEntryRejected) {
    std::string text = format_rule_table(SeverityRuleTable::simplified_scale());
    const std::string row = "1,0,0,0,0,0,0";
    text.replace(text.find(row), row.size(), "1,0,0,0,0,0,1");
    try {
        parse_rule_table(text);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("asymmetry"), std::string::npos);
    }
}

TEST(RuleTable, DuplicateRowRejected) {
    std::string text = format_rule_table(SeverityRuleTable::simplified_scale());
    text += "0,0,0,0,0,0,0\n";
    EXPECT_THROW(parse_rule_table(text), Error);
}

TEST(RuleTable, CustomTableIsHonoured) {
    auto levels = SeverityRuleTable::simplified_scale().levels();
    const int a = patient_index(grade(1, 0, 0, 0, 0, 0));
    const int b = patient_index(grade(0, 0, 0, 1, 0, 0));
    levels[a] = SeverityLevel(1);
    levels[b] = SeverityLevel(1);
    const auto custom = SeverityRuleTable::from_levels(levels);
    EXPECT_EQ(compute_severity(grade(1, 0, 0, 0, 0, 0), custom).value(), 1);
    EXPECT_EQ(compute_severity(grade(1, 0, 0, 0, 0, 0)).value(), 0);
}
