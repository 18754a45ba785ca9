#pragma once

// Multi-class confusion matrices and one-vs-rest metrics.

#include <cstdint>
#include <span>
#include <vector>

namespace rbench::stats {

using Label = int;

struct ConfusionMatrix {
    std::vector<Label> classes;                    // ordered label set
    std::vector<std::vector<std::int64_t>> counts;  // rows = gold, columns = predicted

    std::int64_t total() const;
    std::int64_t gold_support(std::size_t class_index) const;
    std::int64_t predicted_count(std::size_t class_index) const;
};

ConfusionMatrix confusion(std::span<const Label> gold, std::span<const Label> pred, std::span<const Label> classes);

struct ClassMetrics {
    Label label = 0;
    std::int64_t support = 0;
    double precision = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double f1 = 0.0;
};

struct MetricsSummary {
    std::vector<ClassMetrics> per_class;
    // Macro averages over classes with nonzero gold support.
    double macro_f1 = 0.0;
    double macro_precision = 0.0;
    double macro_sensitivity = 0.0;
    double macro_specificity = 0.0;

    const ClassMetrics* find(Label label) const;
};

// Zero-denominator ratios are reported as 0.
MetricsSummary per_class_metrics(const ConfusionMatrix& cm);

double macro_f1(std::span<const Label> gold, std::span<const Label> pred, std::span<const Label> classes);

}  // namespace rbench::stats
