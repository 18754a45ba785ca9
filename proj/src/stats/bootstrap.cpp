#include "readerbench/stats/bootstrap.hpp"

#include "readerbench/error.hpp"
#include "readerbench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

namespace rbench::stats {

double percentile(std::span<const double> values, double q) {
    if (values.empty()) fail(ErrorKind::Argument, "percentile of an empty sample");
    if (q < 0.0 || q > 1.0) fail(ErrorKind::Argument, "percentile level outside [0,1]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Interval percentile_interval(std::span<const double> values, double level) {
    const double tail = (1.0 - level) / 2.0;
    return {percentile(values, tail), percentile(values, 1.0 - tail)};
}

namespace {

std::vector<std::size_t> draw_subsample(std::size_t population, std::size_t k, std::uint64_t seed, std::size_t iteration) {
    Rng rng(seed, "bootstrap", iteration);
    std::vector<std::size_t> idx(population);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(population - i)]);
    idx.resize(k);
    return idx;
}

}  // namespace

BootstrapResult bootstrap_compare(std::span<const Label> gold, std::span<const Label> pred_a,
                                  std::span<const Label> pred_b, std::span<const Label> classes,
                                  const BootstrapOptions& options) {
    const std::size_t n = gold.size();
    if (pred_a.size() != n || pred_b.size() != n) fail(ErrorKind::Argument, "prediction vectors not aligned with gold");
    if (options.sample_size == 0 || options.sample_size > n) {
        fail(ErrorKind::Argument, "sample size " + std::to_string(options.sample_size) + " exceeds population " +
                                      std::to_string(n));
    }
    if (options.iterations == 0) fail(ErrorKind::Argument, "bootstrap needs at least one iteration");

    BootstrapResult out;
    out.iterations = options.iterations;
    out.sample_size = options.sample_size;
    out.seed = options.seed;
    out.f1_a.assign(options.iterations, 0.0);
    out.f1_b.assign(options.iterations, 0.0);
    out.subsamples.assign(options.iterations, {});

    auto run = [&](std::size_t it) {
        auto idx = draw_subsample(n, options.sample_size, options.seed, it);
        std::vector<Label> g(idx.size()), a(idx.size()), b(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            g[i] = gold[idx[i]];
            a[i] = pred_a[idx[i]];
            b[i] = pred_b[idx[i]];
        }
        out.f1_a[it] = macro_f1(g, a, classes);
        out.f1_b[it] = macro_f1(g, b, classes);
        out.subsamples[it] = std::move(idx);
    };

    unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, options.iterations));
    if (threads <= 1) {
        for (std::size_t it = 0; it < options.iterations; ++it) run(it);
    } else {
        // Each worker owns a strided set of iterations; every slot is written once.
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t it = t; it < options.iterations; it += threads) run(it);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    out.full_f1_a = macro_f1(gold, pred_a, classes);
    out.full_f1_b = macro_f1(gold, pred_b, classes);
    const double iters = static_cast<double>(options.iterations);
    out.mean_f1_a = std::accumulate(out.f1_a.begin(), out.f1_a.end(), 0.0) / iters;
    out.mean_f1_b = std::accumulate(out.f1_b.begin(), out.f1_b.end(), 0.0) / iters;
    out.ci_a = percentile_interval(out.f1_a);
    out.ci_b = percentile_interval(out.f1_b);
    out.test = wilcoxon_rank_sum(out.f1_a, out.f1_b);
    return out;
}

BootstrapResult bootstrap_compare(std::span<const Label> gold_a, std::span<const Label> pred_a,
                                  std::span<const Label> gold_b, std::span<const Label> pred_b,
                                  std::span<const Label> classes, const BootstrapOptions& options) {
    if (gold_a.size() != gold_b.size() || !std::equal(gold_a.begin(), gold_a.end(), gold_b.begin())) {
        fail(ErrorKind::Argument, "gold vectors for the two models are not aligned on the same patients");
    }
    return bootstrap_compare(gold_a, pred_a, pred_b, classes, options);
}

}  // namespace rbench::stats
