#include "helpers/study_fixture.hpp"

#include "readerbench/error.hpp"
#include "readerbench/predictor.hpp"
#include "readerbench/rng.hpp"
#include "readerbench/stats/metrics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <thread>

using namespace rbench;
using namespace std::chrono_literals;

namespace {

const auto kRules = SeverityRuleTable::simplified_scale();

std::string fake(const std::string& args) { return std::string(FAKE_PREDICTOR_PATH) + " " + args; }

PredictRequest request_for(const std::string& alias) {
    PredictRequest r;
    r.patient_alias = alias;
    r.image_left = alias + "_L.jpg";
    r.image_right = alias + "_R.jpg";
    return r;
}

FeaturePrediction random_prediction(Rng& rng) {
    FeaturePrediction p = FeaturePrediction::from_grades(patient_from_index(static_cast<int>(rng.below(144))));
    for (auto* eye : {&p.left, &p.right}) {
        if (rng.uniform() < 0.5) eye->confidence.drusen = rng.uniform();
        if (rng.uniform() < 0.5) eye->confidence.pigment = rng.uniform();
        if (rng.uniform() < 0.5) eye->confidence.late_amd = rng.uniform();
    }
    return p;
}

}  // namespace

TEST(Wire, RequestFieldNames) {
    const auto j = nlohmann::json::parse(wire_request(request_for("P1")));
    EXPECT_EQ(j["patient_alias"], "P1");
    EXPECT_EQ(j["images"]["left"], "P1_L.jpg");
    EXPECT_EQ(j["images"]["right"], "P1_R.jpg");
    EXPECT_EQ(j.size(), 2u);
}

TEST(WireProperty, PredictionRoundTripIsLossless) {
    for (int rep = 0; rep < 500; ++rep) {
        Rng rng(8, "wire", static_cast<std::uint64_t>(rep));
        const auto p = random_prediction(rng);
        const auto back = parse_wire_response(nlohmann::json(p).dump()).prediction;
        EXPECT_EQ(back, p);
    }
}

TEST(Wire, MalformedResponseIsProtocolErrorWithPayload) {
    for (const std::string raw : {"{\"left\": 3}", "nope", R"({"left":{"drusen":5,"pigment":0,"late_amd":0},"right":{"drusen":0,"pigment":0,"late_amd":0}})",
                                  R"({"left":{"drusen":1,"pigment":0,"late_amd":0,"confidence":{"drusen":1.5}},"right":{"drusen":0,"pigment":0,"late_amd":0}})"}) {
        try {
            parse_wire_response(raw);
            FAIL() << raw;
        } catch (const Error& ex) {
            EXPECT_EQ(ex.kind(), ErrorKind::Protocol);
            EXPECT_NE(std::string(ex.what()).find(raw), std::string::npos);
        }
    }
}

TEST(Fixture, EchoMatchesGoldSeverity) {
    const auto manifest = synthesize_manifest(5, 3, kRules);
    FixturePredictor echo;
    for (const auto& r : manifest) {
        const auto s = suggest(echo, make_request(r), kRules);
        EXPECT_EQ(s.severity, r.gold_severity);
        EXPECT_EQ(s.prediction.grades(), r.gold);
    }
}

TEST(Simulated, IdentityMatricesEqualFixture) {
    const auto manifest = synthesize_manifest(5, 4, kRules);
    SimulatedPredictor sim(SimulatedPredictorSpec{});
    FixturePredictor echo;
    for (const auto& r : manifest) {
        EXPECT_EQ(sim.predict(make_request(r)).prediction, echo.predict(make_request(r)).prediction);
    }
}

TEST(Simulated, DeterministicPerDrawIndex) {
    const auto spec = calibrated_predictor_spec(42);
    const PatientGrade g{{1, 1, 0}, {2, 0, 0}};
    EXPECT_EQ(simulate_predictor(spec, g, 7), simulate_predictor(spec, g, 7));
    int differing = 0;
    for (std::uint64_t i = 0; i < 50; ++i) differing += simulate_predictor(spec, g, i) != simulate_predictor(spec, g, 7);
    EXPECT_GT(differing, 0);
}

TEST(Simulated, UniformDrusenFrequencies) {
    SimulatedPredictorSpec spec;
    spec.drusen = SimulatedPredictorSpec::uniform_rows(3);
    spec.seed = 9;
    std::array<int, 3> counts{};
    for (std::uint64_t i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(simulate_predictor(spec, {{2, 0, 0}, {0, 0, 0}}, i).left.grade.drusen)];
    for (int c : counts) EXPECT_NEAR(c / 10000.0, 1.0 / 3.0, 0.02);
}

// Chi-square goodness of fit of every calibrated row at alpha = 0.01.
TEST(SimulatedProperty, MarginalsMatchMatrixRows) {
    const auto spec = calibrated_predictor_spec(77);
    const int draws = 20000;
    auto check = [&](const std::vector<std::vector<double>>& m, auto field, auto make_gold, const char* name) {
        for (std::size_t row = 0; row < m.size(); ++row) {
            std::vector<double> observed(m.size(), 0.0);
            for (int i = 0; i < draws; ++i) {
                const auto p = simulate_predictor(spec, make_gold(static_cast<int>(row)), static_cast<std::uint64_t>(i));
                observed[static_cast<std::size_t>(field(p.right.grade))] += 1.0;
            }
            double stat = 0.0;
            int df = -1;
            for (std::size_t k = 0; k < m.size(); ++k) {
                const double expected = m[row][k] * draws;
                if (expected == 0.0) {
                    EXPECT_EQ(observed[k], 0.0);
                    continue;
                }
                stat += (observed[k] - expected) * (observed[k] - expected) / expected;
                ++df;
            }
            const double critical = boost::math::quantile(boost::math::chi_squared(df), 0.99);
            EXPECT_LT(stat, critical) << name << " row " << row;
        }
    };
    check(spec.drusen, [](const EyeGrade& e) { return e.drusen; }, [](int v) { return PatientGrade{{0, 0, 0}, {v, 0, 0}}; }, "drusen");
    check(spec.pigment, [](const EyeGrade& e) { return e.pigment; }, [](int v) { return PatientGrade{{0, 0, 0}, {0, v, 0}}; }, "pigment");
    check(spec.late_amd, [](const EyeGrade& e) { return e.late_amd; }, [](int v) { return PatientGrade{{0, 0, 0}, {0, 0, v}}; }, "late_amd");
}

TEST(Simulated, InvalidSpecRejected) {
    SimulatedPredictorSpec spec;
    spec.pigment = {{0.5, 0.4}, {0.0, 1.0}};
    EXPECT_THROW(validate(spec), Error);
    spec.pigment = {{1.2, -0.2}, {0.0, 1.0}};
    EXPECT_THROW(SimulatedPredictor{spec}, Error);
    spec = SimulatedPredictorSpec{};
    spec.drusen.pop_back();
    EXPECT_THROW(validate(spec), Error);
    const auto j = nlohmann::json(calibrated_predictor_spec(3));
    EXPECT_EQ(j.get<SimulatedPredictorSpec>().drusen, calibrated_predictor_spec(3).drusen);
}

TEST(Simulated, CalibratedAiAloneSeverityF1) {
    const auto cohort = stratified_sample(synthesize_manifest(45, 5, kRules), 40, 6);
    SimulatedPredictor sim(calibrated_predictor_spec(2024));
    std::vector<int> gold, pred;
    for (const auto& r : cohort) {
        gold.push_back(r.gold_severity.value());
        pred.push_back(suggest(sim, make_request(r), kRules).severity.value());
    }
    const std::vector<int> classes = {0, 1, 2, 3, 4, 5};
    EXPECT_NEAR(stats::macro_f1(gold, pred, classes), 0.4755, 0.05);
}

TEST(Subprocess, EchoAcrossCalls) {
    SubprocessPredictor p(fake("echo"), 5000ms);
    for (const std::string alias : {"P1", "P22", "P333", "P4444"}) {
        const auto s = suggest(p, request_for(alias), kRules);
        EXPECT_EQ(s.prediction.left.grade.drusen, static_cast<int>(alias.size() % 3));
        EXPECT_EQ(s.prediction.left.confidence.drusen, 0.75);
        EXPECT_FALSE(s.wire_mismatch);
    }
}

TEST(Subprocess, TimeoutIsUnavailableAndRecovers) {
    SubprocessPredictor p(fake("hang P9"), 300ms);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        p.predict(request_for("P9"));
        FAIL();
    } catch (const Error& ex) {
        EXPECT_EQ(ex.kind(), ErrorKind::PredictorUnavailable);
    }
    EXPECT_LT(std::chrono::steady_clock::now() - t0, 3s);
    EXPECT_NO_THROW(p.predict(request_for("P1")));
}

TEST(Subprocess, GarbageIsProtocolError) {
    SubprocessPredictor p(fake("garbage"), 5000ms);
    try {
        p.predict(request_for("P1"));
        FAIL();
    } catch (const Error& ex) {
        EXPECT_EQ(ex.kind(), ErrorKind::Protocol);
        EXPECT_NE(std::string(ex.what()).find("not json at all"), std::string::npos);
    }
}

TEST(Subprocess, MissingProgramIsUnavailable) {
    SubprocessPredictor p("/nonexistent/model-binary", 2000ms);
    try {
        p.predict(request_for("P1"));
        FAIL();
    } catch (const Error& ex) {
        EXPECT_EQ(ex.kind(), ErrorKind::PredictorUnavailable);
    }
}

TEST(Subprocess, WireSeverityIsCrossCheckedNotTrusted) {
    SubprocessPredictor p(fake("severity 5"), 5000ms);
    const auto s = suggest(p, request_for("P1"), kRules);  // drusen 2 both eyes -> 2
    EXPECT_EQ(s.severity.value(), 2);
    ASSERT_TRUE(s.wire_mismatch);
    EXPECT_NE(s.wire_mismatch->find("reported severity 5"), std::string::npos);
}

TEST(Http, PostPredictRoundTrip) {
    httplib::Server server;
    server.Post("/predict", [](const httplib::Request& req, httplib::Response& res) {
        const auto j = nlohmann::json::parse(req.body);
        if (j["patient_alias"] == "boom") {
            res.status = 500;
            res.set_content("model crashed", "text/plain");
            return;
        }
        const nlohmann::json eye = {{"drusen", 2}, {"pigment", 1}, {"late_amd", 0}};
        res.set_content(nlohmann::json{{"left", eye}, {"right", eye}}.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpPredictor p("http://127.0.0.1:" + std::to_string(port), 2000ms);
    EXPECT_EQ(suggest(p, request_for("P1"), kRules).severity.value(), 4);
    try {
        p.predict(request_for("boom"));
        FAIL();
    } catch (const Error& ex) {
        EXPECT_EQ(ex.kind(), ErrorKind::Protocol);
        EXPECT_NE(std::string(ex.what()).find("model crashed"), std::string::npos);
    }
    server.stop();
    th.join();

    try {
        p.predict(request_for("P1"));
        FAIL();
    } catch (const Error& ex) {
        EXPECT_EQ(ex.kind(), ErrorKind::PredictorUnavailable);
    }
}

TEST(Binding, ParseAndMake) {
    EXPECT_EQ(parse_binding("simulated").mode, PredictorMode::Simulated);
    const auto b = parse_binding("subprocess:python3 model.py --flag");
    EXPECT_EQ(b.mode, PredictorMode::Subprocess);
    EXPECT_EQ(b.target, "python3 model.py --flag");
    EXPECT_EQ(parse_binding("http:http://host:9000").target, "http://host:9000");
    EXPECT_THROW(parse_binding("http"), Error);
    EXPECT_THROW(parse_binding("oracle"), Error);
    EXPECT_EQ(make_predictor(parse_binding("fixture"))->describe(), "fixture:gold");
}

TEST(Cache, WriteOnceAndParallelPrecompute) {
    const auto cohort = stratified_sample(synthesize_manifest(12, 5, kRules), 10, 6);
    SimulatedPredictor sim(calibrated_predictor_spec(1));
    auto serial = PredictionCache::precompute(sim, cohort, kRules, 1);
    auto parallel = PredictionCache::precompute(sim, cohort, kRules, 4);
    ASSERT_EQ(serial.size(), cohort.size());
    for (const auto& r : cohort) EXPECT_EQ(serial.at(r.patient_id).prediction, parallel.at(r.patient_id).prediction);
    try {
        serial.put(cohort[0].patient_id, serial.at(cohort[0].patient_id));
        FAIL();
    } catch (const Error& ex) {
        EXPECT_EQ(ex.kind(), ErrorKind::Conflict);
    }
    EXPECT_THROW(serial.at("missing"), Error);

    SubprocessPredictor hanging(fake("hang " + cohort[3].patient_id), 200ms);
    EXPECT_THROW(PredictionCache::precompute(hanging, cohort, kRules, 2), Error);
}

TEST(CompareModels, IdenticalPredictionsAndShape) {
    std::vector<int> gold, pred;
    Rng rng(4, "compare", 0);
    for (int level = 3; level <= 5; ++level)
        for (int i = 0; i < 50; ++i) {
            gold.push_back(level);
            pred.push_back(rng.uniform() < 0.5 ? level : static_cast<int>(rng.below(6)));
        }
    stats::BootstrapOptions opts;
    opts.seed = 5;
    const auto c = compare_models("AREDS2", gold, pred, gold, pred, opts);
    EXPECT_EQ(c.bootstrap.test.p_two_sided, 1.0);
    ASSERT_EQ(c.scales.size(), 3u);
    EXPECT_EQ(c.scales.front().level, 3);
    EXPECT_EQ(c.scales.back().level, 5);
    std::vector<int> short_pred(pred.begin(), pred.end() - 1);
    EXPECT_THROW(compare_models("x", gold, short_pred, gold, pred, opts), Error);
}

// Power: a 10-point macro-F1 gap on 180 patients is detected at p < 0.05 in
// at least 90% of 50 seeded replications.
TEST(CompareModelsProperty, PowerForTenPointGap) {
    const auto cohort = stratified_sample(synthesize_manifest(35, 5, kRules), 30, 6);
    int detected = 0;
    double gap_sum = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        auto weak = calibrated_predictor_spec(1000 + static_cast<std::uint64_t>(rep));
        auto strong = weak;
        strong.seed += 5000;
        strong.drusen = {{0.86, 0.12, 0.02}, {0.16, 0.70, 0.14}, {0.02, 0.16, 0.82}};
        strong.pigment = {{0.90, 0.10}, {0.18, 0.82}};
        SimulatedPredictor a(weak), b(strong);
        std::vector<int> gold, pa, pb;
        for (const auto& r : cohort) {
            gold.push_back(r.gold_severity.value());
            pa.push_back(suggest(a, make_request(r), kRules).severity.value());
            pb.push_back(suggest(b, make_request(r), kRules).severity.value());
        }
        stats::BootstrapOptions opts;
        opts.seed = 7000 + static_cast<std::uint64_t>(rep);
        const auto c = compare_models("sim", gold, pa, gold, pb, opts);
        gap_sum += c.bootstrap.full_f1_b - c.bootstrap.full_f1_a;
        if (c.bootstrap.test.p_two_sided < 0.05) ++detected;
    }
    EXPECT_NEAR(gap_sum / 50.0, 0.10, 0.03);
    EXPECT_GE(detected, 45);
}
