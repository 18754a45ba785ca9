#include "helpers/study_fixture.hpp"

#include "readerbench/delimited.hpp"
#include "readerbench/error.hpp"
#include "readerbench/report.hpp"
#include "readerbench/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

using namespace rbench;
using nlohmann::json;
using rbench::testing::make_study;
using rbench::testing::run_study;

namespace {

const auto kRules = SeverityRuleTable::simplified_scale();

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error";
    return ErrorKind::Io;
}

// Random prediction set over the given levels, rows in id order.
PredictionSet random_set(std::string dataset, const std::vector<int>& levels, std::size_t per_level,
                         std::uint64_t seed) {
    Rng rng(seed, "set/" + dataset);
    PredictionSet s;
    s.dataset = std::move(dataset);
    s.model_a = "model_a";
    s.model_b = "model_b";
    std::size_t k = 0;
    for (int level : levels)
        for (std::size_t i = 0; i < per_level; ++i) {
            s.patient_ids.push_back("X" + std::to_string(1000 + k++));
            s.gold.push_back(level);
            s.pred_a.push_back(rng.uniform() < 0.5 ? level : levels[rng.below(levels.size())]);
            s.pred_b.push_back(rng.uniform() < 0.6 ? level : levels[rng.below(levels.size())]);
        }
    return s;
}

stats::BootstrapOptions quick_options(std::uint64_t seed) {
    stats::BootstrapOptions o;
    o.seed = seed;
    o.iterations = 50;
    o.sample_size = 30;
    return o;
}

std::vector<std::string> tab_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1)
        out.push_back(line.substr(start, tab - start));
    out.push_back(line.substr(start));
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

StudyInputs study_inputs() {
    static const auto study = make_study(24);
    StudyInputs in;
    in.config.seed = 3;
    in.schedule = study.schedule;
    in.cohort = study.cohort;
    in.events = run_study(study, [](const std::string& c, Arm arm, const PatientGrade& gold) {
        Rng rng(std::hash<std::string>{}(c), arm == Arm::Manual ? "m" : "a",
                static_cast<std::uint64_t>(patient_index(gold)));
        return rng.uniform() < (arm == Arm::Manual ? 0.5 : 0.8)
                   ? gold
                   : patient_from_index(static_cast<int>(rng.below(kPatientGradeCount)));
    });
    return in;
}

}  // namespace

TEST(Report, FormatP) {
    EXPECT_EQ(format_p(0.0), "<.001");
    EXPECT_EQ(format_p(0.000999), "<.001");
    EXPECT_EQ(format_p(0.001), "0.00");
    EXPECT_EQ(format_p(0.0449), "0.04");
    EXPECT_EQ(format_p(0.95), "0.95");
    EXPECT_EQ(format_p(1.0), "1.00");
}

TEST(Report, PredictionSetParsingSortsAndValidates) {
    const auto s = parse_prediction_set("patient_id,gold,m1,m2\nB,1,1,2\nA,0,0,0\nC,5,4,5\n", "D");
    EXPECT_EQ(s.dataset, "D");
    EXPECT_EQ(s.model_a, "m1");
    EXPECT_EQ(s.model_b, "m2");
    EXPECT_EQ(s.patient_ids, (std::vector<std::string>{"A", "B", "C"}));
    EXPECT_EQ(s.gold, (std::vector<int>{0, 1, 5}));
    EXPECT_EQ(s.pred_a, (std::vector<int>{0, 1, 4}));
    EXPECT_EQ(s.pred_b, (std::vector<int>{0, 2, 5}));
    EXPECT_EQ(format_prediction_set(parse_prediction_set(format_prediction_set(s), "D")), format_prediction_set(s));

    EXPECT_EQ(kind_of([] { parse_prediction_set("patient_id,gold,m1\nA,0,0\n", "D"); }), ErrorKind::Validation);
    EXPECT_EQ(kind_of([] { parse_prediction_set("id,gold,m1,m2\nA,0,0,0\n", "D"); }), ErrorKind::Validation);
    EXPECT_EQ(kind_of([] { parse_prediction_set("patient_id,gold,m1,m2\nA,0,0,0\nA,1,1,1\n", "D"); }),
              ErrorKind::Validation);
    EXPECT_EQ(kind_of([] { parse_prediction_set("patient_id,gold,m1,m2\nA,6,0,0\n", "D"); }), ErrorKind::Validation);
    EXPECT_EQ(kind_of([] { parse_prediction_set("patient_id,gold,m1,m2\nA,0,x,0\n", "D"); }), ErrorKind::Validation);
    EXPECT_EQ(kind_of([] { parse_prediction_set("patient_id,gold,m1,m2\n", "D"); }), ErrorKind::Validation);
}

TEST(Report, IdenticalModelsGiveUnitP) {
    auto s = random_set("Same", {0, 1, 2, 3, 4, 5}, 20, 1);
    s.pred_b = s.pred_a;
    const auto c = compare_prediction_set(s, quick_options(4));
    EXPECT_EQ(c.bootstrap.test.p_two_sided, 1.0);
    EXPECT_EQ(c.bootstrap.mean_f1_a, c.bootstrap.mean_f1_b);
    const auto table = render_table1(json::array({json(c)}));
    EXPECT_NE(table.find("Same\tOverall\t"), std::string::npos);
    EXPECT_NE(table.find("\t1.00\n"), std::string::npos);
}

TEST(Report, Table1OrderingAndLayout) {
    const auto opts = quick_options(9);
    const auto zeta = compare_prediction_set(random_set("Zeta", {0, 1, 2, 3, 4, 5}, 15, 2), opts);
    const auto alpha = compare_prediction_set(random_set("Alpha", {3, 4, 5}, 15, 3), opts);
    const auto single = compare_prediction_set(random_set("Mid", {2}, 40, 4), opts);
    const auto table = render_table1(json::array({json(zeta), json(single), json(alpha)}));
    const auto rows = lines_of(table);
    ASSERT_EQ(rows.size(), 1u + 4u + 1u + 7u);
    EXPECT_EQ(rows[0], "dataset\tscale\tmodel_a\tmodel_b\tp");
    EXPECT_EQ(rows[1].rfind("Alpha\tOverall\t", 0), 0u);
    EXPECT_EQ(rows[2].rfind("Alpha\t3\t", 0), 0u);
    EXPECT_EQ(rows[4].rfind("Alpha\t5\t", 0), 0u);
    EXPECT_EQ(rows[5].rfind("Mid\tOverall\t", 0), 0u);
    EXPECT_EQ(rows[6].rfind("Zeta\tOverall\t", 0), 0u);
    EXPECT_EQ(rows[12].rfind("Zeta\t5\t", 0), 0u);
    // Per-scale rows carry F1s to four decimals and no p.
    const auto fields = tab_fields(rows[2]);
    ASSERT_EQ(fields.size(), 5u);
    EXPECT_EQ(fields[2].size(), 6u);
    EXPECT_TRUE(fields[4].empty());

    // Input order does not matter.
    EXPECT_EQ(render_table1(json::array({json(alpha), json(zeta), json(single)})), table);
}

TEST(Report, Table1MissingOverallIsValidation) {
    json c = compare_prediction_set(random_set("D", {0, 1}, 20, 5), quick_options(1));
    c.erase("overall");
    EXPECT_EQ(kind_of([&] { render_table1(json::array({c})); }), ErrorKind::Validation);
}

// Shuffling the file's rows leaves the table byte-identical.
TEST(Report, Table1IndependentOfRowOrder) {
    StudyConfig cfg;
    cfg.seed = 17;
    const auto set = random_set("Shuffled", {0, 1, 2, 3, 4, 5}, 20, 6);
    const auto text = format_prediction_set(set);
    auto rows = lines_of(text);
    const std::string header = rows.front();
    rows.erase(rows.begin());
    Rng rng(5, "shuffle");
    for (int trial = 0; trial < 5; ++trial) {
        rng.shuffle(std::span<std::string>(rows));
        std::string shuffled = header + "\n";
        for (const auto& r : rows) shuffled += r + "\n";
        const auto a = compare_prediction_set(parse_prediction_set(text, "Shuffled"), comparison_bootstrap(cfg, "Shuffled"));
        const auto b =
            compare_prediction_set(parse_prediction_set(shuffled, "Shuffled"), comparison_bootstrap(cfg, "Shuffled"));
        EXPECT_EQ(render_table1(json::array({json(a)})), render_table1(json::array({json(b)})));
    }
}

TEST(Report, ComparisonBootstrapFollowsConfig) {
    StudyConfig cfg;
    cfg.seed = 8;
    cfg.bootstrap_iterations = 33;
    cfg.bootstrap_sample_size = 21;
    const auto a = comparison_bootstrap(cfg, "AREDS");
    EXPECT_EQ(a.iterations, 33u);
    EXPECT_EQ(a.sample_size, 21u);
    EXPECT_NE(a.seed, comparison_bootstrap(cfg, "SEED").seed);
    EXPECT_EQ(a.seed, comparison_bootstrap(cfg, "AREDS").seed);
}

TEST(Report, AnalyzeIsByteIdenticalAndAuditsWorkload) {
    const auto in = study_inputs();
    const auto first = dump_report(analyze_study(in));
    const auto second = dump_report(analyze_study(in));
    EXPECT_EQ(first, second);

    const auto report = json::parse(first);
    EXPECT_EQ(report.at("study").at("events"), 11520);
    EXPECT_EQ(report.at("study").at("expected_events"), 11520);
    EXPECT_TRUE(report.at("study").at("audit_issues").empty());
    std::map<std::string, json> workload;
    for (const auto& row : report.at("study").at("workload")) workload[row.at("quantity")] = row;
    EXPECT_EQ(workload.at("patients").at("expected"), 240);
    EXPECT_EQ(workload.at("images").at("expected"), 480);
    EXPECT_EQ(workload.at("patient_gradings_per_clinician").at("expected"), 480);
    EXPECT_EQ(workload.at("image_gradings_per_clinician").at("expected"), 960);
    EXPECT_EQ(workload.at("feature_gradings_per_clinician").at("expected"), 2880);
    for (const auto& [name, row] : workload) EXPECT_TRUE(row.at("ok").get<bool>()) << name;
    EXPECT_EQ(report.at("timing").at("eligible_clinicians"), 24);
    EXPECT_EQ(report.at("accuracy").size(), 4u);

    // One missing event shows up in the per-clinician counts.
    auto short_in = in;
    short_in.events.pop_back();
    const auto short_report = analyze_study(short_in);
    bool flagged = false;
    for (const auto& row : short_report.at("study").at("workload"))
        if (row.at("quantity") == "patient_gradings_per_clinician") flagged = !row.at("ok").get<bool>();
    EXPECT_TRUE(flagged);
    EXPECT_EQ(short_report.at("timing").at("eligible_clinicians"), 23);
}

TEST(Report, ArtifactsRenderFromReport) {
    auto in = study_inputs();
    in.prediction_sets.push_back(random_set("AREDS", {0, 1, 2, 3, 4, 5}, 15, 7));
    const auto files = render_artifacts(analyze_study(in));
    for (const char* name : {"table1.tsv", "arm_comparison.tsv", "clinician_f1.tsv", "per_scale_f1.tsv",
                             "round_timing.tsv", "clinician_timing.tsv", "timing_model.tsv",
                             "timing_completeness.tsv", "workload.tsv"}) {
        ASSERT_TRUE(files.contains(name)) << name;
        EXPECT_FALSE(files.at(name).empty()) << name;
    }
    EXPECT_EQ(lines_of(files.at("clinician_f1.tsv")).size(), 1u + 24u * 4u);

    // A report with only prediction sets renders only the model table.
    StudyInputs sets_only;
    sets_only.prediction_sets.push_back(random_set("AREDS", {0, 1}, 40, 8));
    const auto only = render_artifacts(analyze_study(sets_only));
    EXPECT_EQ(only.size(), 1u);
    EXPECT_TRUE(only.contains("table1.tsv"));
}

TEST(Report, BundledTable1Fixtures) {
    const std::filesystem::path data = RBENCH_DATA_DIR;
    const auto cfg = load_config(data / "study.conf");
    json comparisons = json::array();
    for (const char* name : {"AREDS", "AREDS2", "SEED"}) {
        const auto set = load_prediction_set(data / "table1" / (std::string(name) + ".csv"));
        comparisons.push_back(compare_prediction_set(set, comparison_bootstrap(cfg, set.dataset)));
    }
    const auto rows = lines_of(render_table1(comparisons));
    auto find = [&](const std::string& prefix) {
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.rfind(prefix, 0) == 0; });
        return it == rows.end() ? std::string() : *it;
    };
    EXPECT_EQ(find("AREDS\tOverall"), "AREDS\tOverall\t0.4755\t0.4793\t0.95");
    EXPECT_EQ(find("AREDS2\tOverall"), "AREDS2\tOverall\t0.5162\t0.6395\t<.001");
    EXPECT_EQ(find("SEED\tOverall"), "SEED\tOverall\t0.3895\t0.5243\t<.001");
}
