#include "readerbench/error.hpp"
#include "readerbench/rng.hpp"
#include "readerbench/stats/bootstrap.hpp"

#include <gtest/gtest.h>

#include <set>
#include <vector>

using namespace rbench;
using namespace rbench::stats;

namespace {

const std::vector<Label> kSix = {0, 1, 2, 3, 4, 5};

std::vector<Label> balanced_gold(std::size_t per_level) {
    std::vector<Label> g;
    for (Label l = 0; l < 6; ++l) g.insert(g.end(), per_level, l);
    return g;
}

std::vector<Label> noisy(const std::vector<Label>& gold, double accuracy, Rng& rng) {
    std::vector<Label> p(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
        p[i] = rng.uniform() < accuracy ? gold[i] : static_cast<Label>(rng.below(6));
    }
    return p;
}

}  // namespace

TEST(Percentile, LinearInterpolation) {
    std::vector<double> v(10);
    for (int i = 0; i < 10; ++i) v[static_cast<std::size_t>(i)] = 10.0 - i;  // unsorted input
    EXPECT_DOUBLE_EQ(percentile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(percentile(v, 1.0), 10.0);
    EXPECT_NEAR(percentile(v, 0.025), 1.225, 1e-12);
    EXPECT_NEAR(percentile(v, 0.975), 9.775, 1e-12);
    EXPECT_NEAR(percentile(v, 0.5), 5.5, 1e-12);
    const auto ci = percentile_interval(v);
    EXPECT_LE(ci.low, ci.high);
}

TEST(Bootstrap, IdenticalPredictionsGivePOne) {
    Rng rng(1, "bootstrap-test", 0);
    const auto gold = balanced_gold(40);
    const auto pred = noisy(gold, 0.5, rng);
    BootstrapOptions opts;
    opts.seed = 7;
    const auto r = bootstrap_compare(gold, pred, pred, kSix, opts);
    EXPECT_EQ(r.f1_a, r.f1_b);
    EXPECT_EQ(r.test.p_two_sided, 1.0);
    EXPECT_EQ(r.iterations, 100u);
    EXPECT_EQ(r.sample_size, 60u);
}

TEST(Bootstrap, SubsamplesAreSharedAndWithoutReplacement) {
    Rng rng(2, "bootstrap-test", 0);
    const auto gold = balanced_gold(40);
    const auto a = noisy(gold, 0.4, rng);
    const auto b = noisy(gold, 0.6, rng);
    BootstrapOptions opts;
    opts.seed = 99;
    const auto r = bootstrap_compare(gold, a, b, kSix, opts);
    ASSERT_EQ(r.subsamples.size(), 100u);
    for (std::size_t it = 0; it < r.subsamples.size(); ++it) {
        const auto& idx = r.subsamples[it];
        ASSERT_EQ(idx.size(), 60u);
        EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 60u);
        std::vector<Label> g, pa, pb;
        for (auto i : idx) {
            ASSERT_LT(i, gold.size());
            g.push_back(gold[i]);
            pa.push_back(a[i]);
            pb.push_back(b[i]);
        }
        EXPECT_DOUBLE_EQ(r.f1_a[it], macro_f1(g, pa, kSix));
        EXPECT_DOUBLE_EQ(r.f1_b[it], macro_f1(g, pb, kSix));
    }
    EXPECT_DOUBLE_EQ(r.full_f1_a, macro_f1(gold, a, kSix));
    EXPECT_LE(r.ci_a.low, r.ci_a.high);
    EXPECT_LE(r.ci_b.low, r.ci_b.high);
    EXPECT_LT(r.test.p_two_sided, 0.001);
}

TEST(Bootstrap, DeterministicAcrossRunsAndThreadCounts) {
    Rng rng(3, "bootstrap-test", 0);
    const auto gold = balanced_gold(30);
    const auto a = noisy(gold, 0.4, rng);
    const auto b = noisy(gold, 0.45, rng);
    BootstrapOptions opts;
    opts.seed = 1234;
    const auto r1 = bootstrap_compare(gold, a, b, kSix, opts);
    const auto r2 = bootstrap_compare(gold, a, b, kSix, opts);
    opts.threads = 4;
    const auto r3 = bootstrap_compare(gold, a, b, kSix, opts);
    for (const auto* r : {&r2, &r3}) {
        EXPECT_EQ(r1.f1_a, r->f1_a);
        EXPECT_EQ(r1.f1_b, r->f1_b);
        EXPECT_EQ(r1.subsamples, r->subsamples);
        EXPECT_EQ(r1.test.p_two_sided, r->test.p_two_sided);
    }
    opts.seed = 1235;
    EXPECT_NE(bootstrap_compare(gold, a, b, kSix, opts).subsamples, r1.subsamples);
}

TEST(Bootstrap, ArgumentErrors) {
    const auto gold = balanced_gold(5);
    BootstrapOptions opts;
    opts.sample_size = 31;
    EXPECT_THROW(bootstrap_compare(gold, gold, gold, kSix, opts), Error);
    opts.sample_size = 10;
    std::vector<Label> short_pred(gold.begin(), gold.end() - 1);
    EXPECT_THROW(bootstrap_compare(gold, short_pred, gold, kSix, opts), Error);
    auto other_gold = gold;
    other_gold[0] = 5;
    EXPECT_THROW(bootstrap_compare(gold, gold, other_gold, gold, kSix, opts), Error);
}

// Size check: model B is model A with predictions permuted inside each gold
// class, so both share one confusion matrix on the 240 patients. The test
// should reject at 5% in at most 10% of 100 seeded replications.
TEST(BootstrapProperty, SizeUnderIdenticalConfusion) {
    const auto gold = balanced_gold(40);
    int rejections = 0;
    for (int rep = 0; rep < 100; ++rep) {
        Rng rng(31, "bootstrap-size", static_cast<std::uint64_t>(rep));
        const auto a = noisy(gold, 0.45, rng);
        auto b = a;
        for (std::size_t level = 0; level < 6; ++level) {
            std::span<Label> block(b.data() + level * 40, 40);
            rng.shuffle(block);
        }
        BootstrapOptions opts;
        opts.seed = 5000 + static_cast<std::uint64_t>(rep);
        const auto r = bootstrap_compare(gold, a, b, kSix, opts);
        ASSERT_DOUBLE_EQ(r.full_f1_a, r.full_f1_b);
        if (r.test.p_two_sided < 0.05) ++rejections;
    }
    EXPECT_LE(rejections, 10);
}
