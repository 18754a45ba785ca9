#include "readerbench/stats/wilcoxon.hpp"

#include "readerbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace rbench::stats {

std::string_view to_string(WilcoxonMethod method) {
    return method == WilcoxonMethod::Exact ? "exact" : "normal-approximation";
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::vector<double> midranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

namespace {

// Number of m-subsets of {1..n} with each possible rank sum, by the standard
// recurrence over the largest element.
std::vector<double> rank_sum_counts(std::size_t n, std::size_t m) {
    const std::size_t max_sum = n * (n + 1) / 2;
    // ways[k][s]: k-subsets of the ranks seen so far summing to s.
    std::vector<std::vector<double>> ways(m + 1, std::vector<double>(max_sum + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r) {
        for (std::size_t k = std::min(r, m); k >= 1; --k) {
            for (std::size_t s = max_sum; s >= r; --s) ways[k][s] += ways[k - 1][s - r];
        }
    }
    return ways[m];
}

}  // namespace

WilcoxonResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y, WilcoxonOptions options) {
    if (x.empty() || y.empty()) fail(ErrorKind::Argument, "wilcoxon_rank_sum needs two nonempty samples");

    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto ranks = midranks(pooled);

    WilcoxonResult out;
    out.n_x = x.size();
    out.n_y = y.size();
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    const double n = nx + ny;
    out.statistic = std::accumulate(ranks.begin(), ranks.begin() + static_cast<long>(x.size()), 0.0);

    // Tie term: sum over tie groups of (t^3 - t).
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const bool has_ties = tie_term > 0.0;

    if (!has_ties && pooled.size() <= options.exact_max_total) {
        out.method = WilcoxonMethod::Exact;
        const auto counts = rank_sum_counts(pooled.size(), x.size());
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        const auto w = static_cast<std::size_t>(std::llround(out.statistic));
        double lower = 0.0;
        double upper = 0.0;
        for (std::size_t s = 0; s < counts.size(); ++s) {
            if (s <= w) lower += counts[s];
            if (s >= w) upper += counts[s];
        }
        out.p_two_sided = std::min(1.0, 2.0 * std::min(lower, upper) / total);
        return out;
    }

    out.method = WilcoxonMethod::NormalApproximation;
    out.tie_correction_applied = has_ties;
    const double mean = nx * (n + 1.0) / 2.0;
    const double variance = nx * ny / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (!(variance > 0.0)) {
        // Every observation ties: no evidence of a location difference.
        out.z = 0.0;
        out.p_two_sided = 1.0;
        return out;
    }
    const double sd = std::sqrt(variance);
    const double deviation = std::abs(out.statistic - mean) - options.continuity_correction;
    const double z = deviation / sd;
    out.z = (out.statistic >= mean ? 1.0 : -1.0) * std::max(0.0, z);
    out.p_two_sided = std::min(1.0, 2.0 * normal_sf(z));
    return out;
}

}  // namespace rbench::stats
