#include "helpers/study_fixture.hpp"

#include "readerbench/predictor.hpp"
#include "readerbench/rng.hpp"
#include "readerbench/service.hpp"
#include "readerbench/simulation.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

using namespace rbench;
using rbench::testing::make_study;

namespace {

const auto kRules = SeverityRuleTable::simplified_scale();

struct Run {
    SimulationSummary summary;
    std::vector<GradingEvent> events;
};

Run run(const rbench::testing::StudyFixture& study, std::uint64_t seed) {
    SimulatedPredictor predictor(calibrated_predictor_spec(3));
    auto cache = std::make_shared<PredictionCache>(PredictionCache::precompute(predictor, study.cohort, kRules));
    ManualClock clock(0.0);
    EventLog log;
    GradingService service(study.schedule, study.cohort, kRules, cache, nullptr, clock, log, ServiceOptions{seed});
    SimulationOptions options;
    options.seed = seed;
    Run r;
    r.summary = simulate_study(service, clock, study.cohort, options);
    r.events = log.snapshot();
    return r;
}

PatientGrade random_grade(Rng& rng) { return patient_from_index(static_cast<int>(rng.below(kPatientGradeCount))); }

}  // namespace

TEST(Simulation, CalibratedReaderModelIsValid) {
    const auto model = calibrated_reader_model();
    EXPECT_NO_THROW(validate(model.manual));
    EXPECT_GE(model.trust, 0.0);
    EXPECT_LE(model.trust, 1.0);
}

TEST(Simulation, TimingTruthCellMeans) {
    const TimingTruth t;
    EXPECT_DOUBLE_EQ(t.cell_mean(1, Arm::Manual, 0.0), 39.8);
    EXPECT_DOUBLE_EQ(t.cell_mean(1, Arm::ManualPlusAI, 0.0), 39.8 - 10.3);
    EXPECT_DOUBLE_EQ(t.cell_mean(3, Arm::Manual, 2.0), 39.8 - 13.0 + 2.0);
    EXPECT_DOUBLE_EQ(t.cell_mean(4, Arm::ManualPlusAI, 0.0), 39.8 - 14.0 - 10.3 + 8.6);
    EXPECT_DOUBLE_EQ(t.ai_effect(1), -10.3);
    EXPECT_DOUBLE_EQ(t.ai_effect(2), -10.3 + 7.0);
}

TEST(Simulation, ProfilesAreDeterministicWithDistinctMissingTime) {
    const auto ids = rbench::testing::clinician_ids(24);
    SimulationOptions options;
    options.seed = 11;
    const auto a = draw_profiles(ids, options);
    const auto b = draw_profiles(ids, options);
    ASSERT_EQ(a.size(), 24u);
    std::size_t missing = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].clinician_id, ids[i]);
        EXPECT_EQ(a[i].skill, b[i].skill);
        EXPECT_EQ(a[i].trust, b[i].trust);
        EXPECT_EQ(a[i].intercept, b[i].intercept);
        EXPECT_EQ(a[i].abandoned_round, b[i].abandoned_round);
        EXPECT_GE(a[i].trust, 0.0);
        EXPECT_LE(a[i].trust, 1.0);
        if (a[i].abandoned_round) {
            ++missing;
            EXPECT_GE(*a[i].abandoned_round, 1);
            EXPECT_LE(*a[i].abandoned_round, 4);
        }
    }
    EXPECT_EQ(missing, 5u);
}

// With full trust the submitted grade is the suggestion; with none it is the
// unassisted read drawn from the same stream position.
TEST(Simulation, TrustExtremesProperty) {
    const auto model = calibrated_reader_model();
    Rng gen(99, "trust-property");
    for (int trial = 0; trial < 500; ++trial) {
        ClinicianProfile p;
        p.skill = gen.normal(0.0, 0.1);
        const auto gold = random_grade(gen);
        const auto ai = random_grade(gen);

        p.trust = 1.0;
        Rng r1(trial, "reader");
        EXPECT_EQ(patient_index(simulate_reader(model, p, gold, &ai, r1)), patient_index(ai));

        p.trust = 0.0;
        Rng r2(trial, "reader"), r3(trial, "reader");
        const auto assisted = simulate_reader(model, p, gold, &ai, r2);
        const auto unassisted = simulate_reader(model, p, gold, nullptr, r3);
        EXPECT_EQ(patient_index(assisted), patient_index(unassisted));
        // Both arms consume the same number of draws.
        EXPECT_EQ(r2.uniform(), r3.uniform());
    }
}

TEST(Simulation, FullStudyIsBlindedCompleteAndDeterministic) {
    const auto study = make_study(24);
    const auto a = run(study, 21);
    EXPECT_EQ(a.summary.events, 11520u);
    EXPECT_EQ(a.events.size(), 11520u);
    EXPECT_EQ(a.summary.manual_payloads, 5760u);
    EXPECT_EQ(a.summary.ai_payloads, 5760u);
    EXPECT_TRUE(a.summary.blinding_violations.empty());

    const auto timing = timing_completeness(a.events, &study.schedule);
    const auto eligible = std::count_if(timing.begin(), timing.end(), [](const auto& t) { return t.time_eligible; });
    EXPECT_EQ(eligible, 19);
    const auto untimed =
        std::count_if(a.events.begin(), a.events.end(), [](const auto& e) { return !e.elapsed_seconds; });
    EXPECT_EQ(untimed, 5);

    const auto b = run(study, 21);
    ASSERT_EQ(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        ASSERT_EQ(nlohmann::json(a.events[i]).dump(), nlohmann::json(b.events[i]).dump()) << "event " << i;
    }
    EXPECT_EQ(nlohmann::json(a.summary).dump(), nlohmann::json(b.summary).dump());

    const auto c = run(study, 22);
    bool differs = false;
    for (std::size_t i = 0; i < a.events.size() && !differs; ++i)
        differs = nlohmann::json(a.events[i]).dump() != nlohmann::json(c.events[i]).dump();
    EXPECT_TRUE(differs);
}

TEST(Simulation, AssistedGradesFollowTheSuggestion) {
    const auto study = make_study(24);
    const auto r = run(study, 5);
    SimulatedPredictor predictor(calibrated_predictor_spec(3));
    const auto cache = PredictionCache::precompute(predictor, study.cohort, kRules);
    std::size_t ai_events = 0, ai_agree = 0, manual_events = 0, manual_agree = 0;
    for (const auto& e : r.events) {
        const auto pid = study.schedule.patient_for_alias(e.patient_alias);
        const auto* s = cache.find(pid);
        ASSERT_NE(s, nullptr);
        const bool agree = patient_index(e.submitted) == patient_index(s->prediction.grades());
        if (e.arm == Arm::ManualPlusAI) {
            ++ai_events;
            ai_agree += agree;
        } else {
            ++manual_events;
            manual_agree += agree;
        }
    }
    EXPECT_GT(static_cast<double>(ai_agree) / ai_events, static_cast<double>(manual_agree) / manual_events + 0.1);
}
