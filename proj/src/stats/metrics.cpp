#include "readerbench/stats/metrics.hpp"

#include "readerbench/error.hpp"

#include <algorithm>
#include <string>

namespace rbench::stats {

std::int64_t ConfusionMatrix::total() const {
    std::int64_t n = 0;
    for (const auto& row : counts)
        for (auto c : row) n += c;
    return n;
}

std::int64_t ConfusionMatrix::gold_support(std::size_t k) const {
    std::int64_t n = 0;
    for (auto c : counts[k]) n += c;
    return n;
}

std::int64_t ConfusionMatrix::predicted_count(std::size_t k) const {
    std::int64_t n = 0;
    for (const auto& row : counts) n += row[k];
    return n;
}

ConfusionMatrix confusion(std::span<const Label> gold, std::span<const Label> pred, std::span<const Label> classes) {
    if (gold.size() != pred.size()) {
        fail(ErrorKind::Argument, "gold/pred length mismatch: " + std::to_string(gold.size()) + " vs " +
                                      std::to_string(pred.size()));
    }
    ConfusionMatrix cm;
    cm.classes.assign(classes.begin(), classes.end());
    const std::size_t k = cm.classes.size();
    cm.counts.assign(k, std::vector<std::int64_t>(k, 0));
    auto index_of = [&](Label label) {
        const auto it = std::find(cm.classes.begin(), cm.classes.end(), label);
        if (it == cm.classes.end()) fail(ErrorKind::Argument, "label " + std::to_string(label) + " not in class set");
        return static_cast<std::size_t>(it - cm.classes.begin());
    };
    for (std::size_t i = 0; i < gold.size(); ++i) ++cm.counts[index_of(gold[i])][index_of(pred[i])];
    return cm;
}

const ClassMetrics* MetricsSummary::find(Label label) const {
    for (const auto& m : per_class) {
        if (m.label == label) return &m;
    }
    return nullptr;
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

MetricsSummary per_class_metrics(const ConfusionMatrix& cm) {
    const std::int64_t n = cm.total();
    if (cm.classes.empty() || n == 0) fail(ErrorKind::Argument, "empty confusion matrix");
    MetricsSummary out;
    int supported = 0;
    for (std::size_t k = 0; k < cm.classes.size(); ++k) {
        const double tp = static_cast<double>(cm.counts[k][k]);
        const double gold = static_cast<double>(cm.gold_support(k));
        const double predicted = static_cast<double>(cm.predicted_count(k));
        const double fp = predicted - tp;
        const double fn = gold - tp;
        const double tn = static_cast<double>(n) - tp - fp - fn;

        ClassMetrics m;
        m.label = cm.classes[k];
        m.support = cm.gold_support(k);
        m.precision = ratio(tp, predicted);
        m.sensitivity = ratio(tp, gold);
        m.specificity = ratio(tn, tn + fp);
        m.f1 = ratio(2.0 * m.precision * m.sensitivity, m.precision + m.sensitivity);
        out.per_class.push_back(m);

        if (m.support > 0) {
            ++supported;
            out.macro_f1 += m.f1;
            out.macro_precision += m.precision;
            out.macro_sensitivity += m.sensitivity;
            out.macro_specificity += m.specificity;
        }
    }
    out.macro_f1 /= supported;
    out.macro_precision /= supported;
    out.macro_sensitivity /= supported;
    out.macro_specificity /= supported;
    return out;
}

double macro_f1(std::span<const Label> gold, std::span<const Label> pred, std::span<const Label> classes) {
    return per_class_metrics(confusion(gold, pred, classes)).macro_f1;
}

}  // namespace rbench::stats
