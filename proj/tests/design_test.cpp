#include "readerbench/design.hpp"
#include "readerbench/error.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <map>
#include <set>

using namespace rbench;

namespace {

const SeverityRuleTable kRules = SeverityRuleTable::simplified_scale();

std::vector<std::string> clinician_ids(int n) {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back("C" + std::to_string(100 + i));
    return out;
}

std::vector<PatientRecord> full_cohort(std::uint64_t seed = 11) {
    return stratified_sample(synthesize_manifest(60, 5, kRules), 40, seed);
}

Schedule full_schedule(int clinicians, OrderingPolicy ordering = OrderingPolicy::Counterbalanced) {
    const auto cohort = full_cohort();
    const auto batches = partition_batches(cohort, 4, 21);
    ScheduleOptions opts;
    opts.ordering = ordering;
    return apply_washout(build_crossover_schedule(batches, clinician_ids(clinicians), 31, opts), 41);
}

// Brute-force scan: (clinician, patient) -> arms in schedule order.
std::map<std::pair<std::string, std::string>, std::vector<Arm>> coverage_scan(const Schedule& s) {
    std::map<std::pair<std::string, std::string>, std::vector<Arm>> seen;
    for (const auto& r : s.rounds)
        for (const auto& cr : r.assignments)
            for (const auto& item : cr.items)
                for (const auto& alias : item.order)
                    seen[{cr.clinician_id, s.alias_registry.at(alias)}].push_back(item.arm);
    return seen;
}

}  // namespace

TEST(Manifest, ParsesAndDerivesSeverity) {
    const auto recs = parse_manifest(
        "patient_id,drusen_L,pigment_L,late_L,drusen_R,pigment_R,late_R,image_L,image_R\n"
        "p1,2,1,0,2,1,0,a.jpg,b.jpg\n"
        "p2,0,0,0,0,0,1,c.jpg,d.jpg\n",
        kRules);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].gold_severity.value(), 4);
    EXPECT_EQ(recs[1].gold_severity.value(), 5);
    EXPECT_EQ(recs[1].image(Eye::Right), "d.jpg");
}

TEST(Manifest, RejectsBadRows) {
    const std::string header = "patient_id,drusen_L,pigment_L,late_L,drusen_R,pigment_R,late_R,image_L,image_R\n";
    EXPECT_THROW(parse_manifest(header + "p1,3,0,0,0,0,0,a,b\n", kRules), Error);
    EXPECT_THROW(parse_manifest(header + "p1,0,0,0,0,0,0,a,b\np1,0,0,0,0,0,0,c,d\n", kRules), Error);
    EXPECT_THROW(parse_manifest(header + "p1,0,0,0,0,0,0,,b\n", kRules), Error);
    EXPECT_THROW(parse_manifest("patient_id,drusen_L\np1,0\n", kRules), Error);
}

TEST(Manifest, FormatRoundTrip) {
    const auto recs = synthesize_manifest(3, 9, kRules);
    const auto again = parse_manifest(format_manifest(recs), kRules);
    ASSERT_EQ(again.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(again[i].patient_id, recs[i].patient_id);
        EXPECT_EQ(again[i].gold, recs[i].gold);
        EXPECT_EQ(again[i].gold_severity, recs[i].gold_severity);
    }
}

TEST(StratifiedSample, FullScaleCohort) {
    const auto cohort = full_cohort();
    EXPECT_EQ(cohort.size(), 240u);
    for (auto n : level_counts(cohort)) EXPECT_EQ(n, 40u);
}

TEST(StratifiedSample, ForcedSelection) {
    const auto manifest = synthesize_manifest(1, 3, kRules);
    const auto cohort = stratified_sample(manifest, 1, 99);
    ASSERT_EQ(cohort.size(), 6u);
    std::set<std::string> a;
    std::set<std::string> b;
    for (const auto& r : manifest) a.insert(r.patient_id);
    for (const auto& r : cohort) b.insert(r.patient_id);
    EXPECT_EQ(a, b);
}

TEST(StratifiedSample, DeterministicAndSeedSensitive) {
    const auto manifest = synthesize_manifest(60, 5, kRules);
    auto ids = [](const std::vector<PatientRecord>& v) {
        std::vector<std::string> out;
        for (const auto& r : v) out.push_back(r.patient_id);
        return out;
    };
    EXPECT_EQ(ids(stratified_sample(manifest, 40, 7)), ids(stratified_sample(manifest, 40, 7)));
    EXPECT_NE(ids(stratified_sample(manifest, 40, 7)), ids(stratified_sample(manifest, 40, 8)));
    // Manifest order does not matter.
    auto reversed = manifest;
    std::reverse(reversed.begin(), reversed.end());
    EXPECT_EQ(ids(stratified_sample(manifest, 40, 7)), ids(stratified_sample(reversed, 40, 7)));
}

TEST(StratifiedSample, ShortfallNamesLevel) {
    auto manifest = synthesize_manifest(5, 5, kRules);
    manifest.erase(std::remove_if(manifest.begin(), manifest.end(),
                                  [](const PatientRecord& r) {
                                      return r.gold_severity.value() == 3 && r.patient_id != "S3-0001";
                                  }),
                   manifest.end());
    try {
        stratified_sample(manifest, 5, 1);
        FAIL();
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("level 3"), std::string::npos);
        EXPECT_NE(msg.find("short 4"), std::string::npos);
    }
}

TEST(PartitionBatches, FullScaleIsStratified) {
    const auto cohort = full_cohort();
    const auto batches = partition_batches(cohort, 4, 21);
    ASSERT_EQ(batches.size(), 4u);
    std::map<std::string, int> level_of;
    for (const auto& r : cohort) level_of[r.patient_id] = r.gold_severity.value();
    for (const auto& b : batches) {
        EXPECT_EQ(b.members.size(), 60u);
        std::array<int, 6> per_level{};
        for (const auto& m : b.members) ++per_level[level_of.at(m)];
        for (int n : per_level) EXPECT_EQ(n, 10);
    }
    EXPECT_EQ(batches[0].batch_id, "A");
    EXPECT_EQ(batches[3].batch_id, "D");
}

TEST(PartitionBatches, SingleBatchIsIdentity) {
    const auto cohort = full_cohort();
    const auto batches = partition_batches(cohort, 1, 3);
    ASSERT_EQ(batches.size(), 1u);
    std::set<std::string> a(batches[0].members.begin(), batches[0].members.end());
    std::set<std::string> b;
    for (const auto& r : cohort) b.insert(r.patient_id);
    EXPECT_EQ(a, b);
}

TEST(PartitionBatches, ArgumentErrors) {
    const auto cohort = stratified_sample(synthesize_manifest(2, 1, kRules), 2, 1);  // 12 patients
    EXPECT_THROW(partition_batches(cohort, 0, 1), Error);
    EXPECT_THROW(partition_batches(cohort, -2, 1), Error);
    EXPECT_THROW(partition_batches(cohort, 13, 1), Error);
    EXPECT_THROW(partition_batches(cohort, 5, 1), Error);
    PartitionOptions loose;
    loose.allow_remainder = true;
    const auto batches = partition_batches(cohort, 5, 1, loose);
    std::size_t lo = 99;
    std::size_t hi = 0;
    for (const auto& b : batches) {
        lo = std::min(lo, b.members.size());
        hi = std::max(hi, b.members.size());
    }
    EXPECT_LE(hi - lo, 1u);
}

TEST(PartitionBatches, PropertyDisjointCoverAndBalanced) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const std::size_t per_level = 1 + seed % 9;
        const auto cohort = stratified_sample(synthesize_manifest(per_level + 2, seed, kRules), per_level, seed);
        const int k = 1 + static_cast<int>(seed % std::min<std::size_t>(cohort.size(), 7));
        PartitionOptions opts;
        opts.allow_remainder = true;
        opts.stratified = seed % 3 != 0;
        const auto batches = partition_batches(cohort, k, seed, opts);
        std::multiset<std::string> all;
        for (const auto& b : batches) all.insert(b.members.begin(), b.members.end());
        ASSERT_EQ(all.size(), cohort.size());
        for (const auto& r : cohort) ASSERT_EQ(all.count(r.patient_id), 1u);
        std::size_t lo = cohort.size();
        std::size_t hi = 0;
        for (const auto& b : batches) {
            lo = std::min(lo, b.members.size());
            hi = std::max(hi, b.members.size());
        }
        ASSERT_LE(hi - lo, 1u) << "seed " << seed;
    }
}

TEST(CrossoverSchedule, RoundStructureMatchesProtocol) {
    const auto batches = partition_batches(full_cohort(), 4, 21);
    ScheduleOptions opts;
    opts.ordering = OrderingPolicy::Shared;
    const auto s = build_crossover_schedule(batches, clinician_ids(2), 31, opts);
    ASSERT_EQ(s.rounds.size(), 2u);
    const auto& r1 = s.round(1)->assignments[0].items;
    const auto& r2 = s.round(2)->assignments[0].items;
    EXPECT_EQ(r1[0].batch_id, "A");
    EXPECT_EQ(r1[0].arm, Arm::Manual);
    EXPECT_EQ(r1[1].batch_id, "B");
    EXPECT_EQ(r1[1].arm, Arm::ManualPlusAI);
    EXPECT_EQ(r2[0].batch_id, "C");
    EXPECT_EQ(r2[0].arm, Arm::ManualPlusAI);
    EXPECT_EQ(r2[1].batch_id, "D");
    EXPECT_EQ(r2[1].arm, Arm::Manual);
}

TEST(CrossoverSchedule, RequiresFourBatches) {
    const auto cohort = full_cohort();
    EXPECT_THROW(build_crossover_schedule(partition_batches(cohort, 3, 1), clinician_ids(1), 1), Error);
    EXPECT_THROW(build_crossover_schedule(partition_batches(cohort, 4, 1), {}, 1), Error);
}

TEST(CrossoverSchedule, SingleClinician) {
    const auto s = build_crossover_schedule(partition_batches(full_cohort(), 4, 21), {"solo"}, 31);
    for (const auto& r : s.rounds) EXPECT_EQ(r.assignments.size(), 1u);
}

TEST(CrossoverSchedule, EachSampleOnceAfterRoundTwo) {
    const auto s = build_crossover_schedule(partition_batches(full_cohort(), 4, 21), clinician_ids(6), 31);
    const auto seen = coverage_scan(s);
    EXPECT_EQ(seen.size(), 6u * 240u);
    for (const auto& c : s.clinicians) {
        int manual = 0;
        int ai = 0;
        for (const auto& [key, arms] : seen) {
            if (key.first != c) continue;
            ASSERT_EQ(arms.size(), 1u);
            (arms[0] == Arm::Manual ? manual : ai)++;
        }
        EXPECT_EQ(manual, 120);
        EXPECT_EQ(ai, 120);
    }
    EXPECT_TRUE(verify_schedule(s).ok());
}

TEST(CrossoverSchedule, AliasesAreOpaque) {
    const auto s = build_crossover_schedule(partition_batches(full_cohort(), 4, 21), clinician_ids(1), 31);
    for (const auto& [alias, patient] : s.alias_registry) {
        EXPECT_EQ(alias.find(patient), std::string::npos);
        EXPECT_EQ(alias.size(), 9u);
    }
}

TEST(CrossoverSchedule, CounterbalancedStartsAlternate) {
    const auto s = build_crossover_schedule(partition_batches(full_cohort(), 4, 21), clinician_ids(4), 31);
    const auto& r1 = *s.round(1);
    EXPECT_EQ(r1.assignments[0].items[0].arm, Arm::Manual);
    EXPECT_EQ(r1.assignments[1].items[0].arm, Arm::ManualPlusAI);
    EXPECT_EQ(r1.assignments[2].items[0].arm, Arm::Manual);
    EXPECT_EQ(r1.assignments[3].items[0].arm, Arm::ManualPlusAI);
}

TEST(Washout, SuccessorBatchUnderOppositeArm) {
    const auto s = full_schedule(1, OrderingPolicy::Shared);
    ASSERT_TRUE(s.washout);
    EXPECT_EQ(s.washout->batch_map.at("A"), "E");
    const auto& r1 = s.round(1)->assignments[0].items;
    EXPECT_EQ(r1[0].batch_id, "A");
    EXPECT_EQ(r1[0].arm, Arm::Manual);
    bool found = false;
    for (int rn : {3, 4}) {
        for (const auto& item : s.round(rn)->assignments[0].items) {
            if (item.batch_id == "E") {
                EXPECT_EQ(item.arm, Arm::ManualPlusAI);
                found = true;
            }
        }
    }
    EXPECT_TRUE(found);
    // Round 3 starts with the arm round 1 did not.
    EXPECT_EQ(s.round(3)->assignments[0].items[0].arm, Arm::ManualPlusAI);
}

TEST(Washout, AliasMapIsBijective) {
    const auto s = full_schedule(2);
    std::map<std::string, std::string> inverse;
    for (const auto& [from, to] : s.washout->alias_map) {
        EXPECT_NE(from, to);
        EXPECT_TRUE(inverse.emplace(to, from).second);
    }
    for (const auto& [from, to] : s.washout->alias_map) EXPECT_EQ(inverse.at(to), from);
    EXPECT_EQ(s.washout->alias_map.size(), 240u);
}

TEST(Washout, OrderIsReshuffled) {
    const auto s = full_schedule(1, OrderingPolicy::Shared);
    const Batch* a = s.batch("A");
    const Batch* e = s.batch("E");
    std::vector<std::string> mapped;
    for (const auto& m : a->members) mapped.push_back(s.washout->alias_map.at(m));
    EXPECT_NE(mapped, e->members);
}

TEST(Washout, ExactlyTwiceCoverageByScan) {
    for (auto ordering : {OrderingPolicy::Shared, OrderingPolicy::Counterbalanced, OrderingPolicy::Randomized}) {
        const auto s = full_schedule(5, ordering);
        const auto seen = coverage_scan(s);
        EXPECT_EQ(seen.size(), 5u * 240u);
        for (const auto& [key, arms] : seen) {
            ASSERT_EQ(arms.size(), 2u);
            EXPECT_NE(arms[0], arms[1]);
        }
        EXPECT_TRUE(verify_schedule(s).ok());
    }
}

TEST(Washout, AppliedTwiceIsProtocolError) {
    const auto s = full_schedule(1);
    EXPECT_THROW(apply_washout(s, 1), Error);
}

TEST(Washout, Deterministic) {
    EXPECT_EQ(nlohmann::json(full_schedule(3)).dump(), nlohmann::json(full_schedule(3)).dump());
}

TEST(VerifySchedule, DuplicatePatientIsNamed) {
    auto s = full_schedule(2);
    const std::string alias = s.batch("A")->members.front();
    const std::string patient = s.alias_registry.at(alias);
    for (auto& b : s.batches) {
        if (b.batch_id == "B") b.members.push_back(alias);
    }
    const auto report = verify_schedule(s);
    EXPECT_FALSE(report.ok());
    const auto* check = report.find("batch_disjointness");
    ASSERT_NE(check, nullptr);
    EXPECT_FALSE(check->passed);
    bool named = false;
    for (const auto& o : check->offenders) named |= o.find(patient) != std::string::npos;
    EXPECT_TRUE(named);
}

TEST(VerifySchedule, ArmSwapFailureDetected) {
    auto s = full_schedule(2);
    for (auto& r : s.rounds) {
        if (r.round_no != 3) continue;
        for (auto& item : r.assignments[0].items) item.arm = opposite(item.arm);
    }
    const auto report = verify_schedule(s);
    EXPECT_FALSE(report.find("arm_swap")->passed);
    EXPECT_FALSE(report.find("round3_reversal")->passed);
    EXPECT_TRUE(report.find("batch_disjointness")->passed);
}

TEST(VerifySchedule, CohortMismatchDetected) {
    const auto s = full_schedule(1);
    std::vector<std::string> ids;
    for (const auto& [alias, patient] : s.alias_registry) ids.push_back(patient);
    ids.push_back("ghost");
    EXPECT_FALSE(verify_schedule(s, &ids).find("cohort_coverage")->passed);
}

TEST(Workload, ProtocolArithmetic) {
    const auto w = schedule_workload(full_schedule(24));
    EXPECT_EQ(w.patients, 240u);
    EXPECT_EQ(w.images, 480u);
    EXPECT_EQ(w.image_gradings_per_clinician, 960u);
    EXPECT_EQ(w.feature_gradings_per_clinician, 2880u);
}

TEST(ScheduleJson, RoundTrip) {
    const auto s = full_schedule(3, OrderingPolicy::Randomized);
    const nlohmann::json j = s;
    const Schedule back = j.get<Schedule>();
    EXPECT_EQ(nlohmann::json(back).dump(), j.dump());
    EXPECT_TRUE(verify_schedule(back).ok());
    EXPECT_THROW(nlohmann::json({{"seed", 1}}).get<Schedule>(), Error);
}
