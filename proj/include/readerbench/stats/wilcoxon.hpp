#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rbench::stats {

enum class WilcoxonMethod { Exact, NormalApproximation };

std::string_view to_string(WilcoxonMethod method);

struct WilcoxonResult {
    double statistic = 0.0;  // rank sum of the first sample (midranks)
    std::size_t n_x = 0;
    std::size_t n_y = 0;
    WilcoxonMethod method = WilcoxonMethod::Exact;
    std::optional<double> z;  // normal approximation only
    double p_two_sided = 1.0;
    bool tie_correction_applied = false;
};

struct WilcoxonOptions {
    // Exact enumeration when n_x + n_y is at most this and there are no ties.
    std::size_t exact_max_total = 20;
    double continuity_correction = 0.5;
};

// Two-sided Wilcoxon rank-sum (Mann-Whitney) test. Samples where every value
// ties (no spread at all) return p = 1.
WilcoxonResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y, WilcoxonOptions options = {});

// Midranks of the pooled sample (1-based).
std::vector<double> midranks(std::span<const double> values);

double normal_sf(double z);

}  // namespace rbench::stats
