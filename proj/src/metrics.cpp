#include "geh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace geh::metrics {
namespace {

struct ClassCounts {
    std::int64_t pos = 0;
    std::int64_t neg = 0;
};

ClassCounts count_classes(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) {
        throw Error(ErrorKind::WidthMismatch, std::to_string(labels.size()) + " labels vs " +
                                                  std::to_string(scores.size()) + " scores");
    }
    ClassCounts c;
    for (int y : labels) (y ? c.pos : c.neg)++;
    return c;
}

/// Double-double accumulator for sums of integer ratios; the result rounds to
/// the exact rational whenever numerators and denominators stay below 2^53.
struct CompensatedSum {
    double hi = 0.0;
    double lo = 0.0;

    void add_ratio(double num, double den) {
        const double q = num / den;
        const double q_err = std::fma(-q, den, num) / den;
        const double s = hi + q;
        const double bb = s - hi;
        const double err = (hi - (s - bb)) + (q - bb);
        lo += err + q_err;
        hi = s;
    }

    double value() const { return hi + lo; }
};

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return descending ? scores[a] > scores[b] : scores[a] < scores[b];
    });
    return order;
}

/// Cumulative (tp, fp) after each group of equal scores, in sweep order.
struct Step {
    double threshold;
    std::int64_t tp;
    std::int64_t fp;
};

std::vector<Step> sweep(std::span<const int> labels, std::span<const double> scores, bool descending) {
    const auto order = order_by_score(scores, descending);
    std::vector<Step> steps;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] ? tp : fp)++;
            ++i;
        }
        steps.push_back({s, tp, fp});
    }
    return steps;
}

}  // namespace

std::string_view to_string(Orientation o) noexcept {
    return o == Orientation::HighIsPositive ? "positive_if_score_ge_threshold" : "positive_if_score_le_threshold";
}

double Confusion::sensitivity() const noexcept {
    return tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
}

double Confusion::specificity() const noexcept {
    return tn + fp > 0 ? static_cast<double>(tn) / static_cast<double>(tn + fp) : 0.0;
}

RocCurve roc_auc(std::span<const int> labels, std::span<const double> scores) {
    const auto counts = count_classes(labels, scores);
    if (counts.pos == 0 || counts.neg == 0) throw Error(ErrorKind::SingleClass, "ROC needs both classes");
    const double P = static_cast<double>(counts.pos);
    const double N = static_cast<double>(counts.neg);

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::int64_t prev_tp = 0;
    std::int64_t prev_fp = 0;
    double doubled_area = 0.0;  // in units of (tp x fp) cells
    for (const auto& step : sweep(labels, scores, true)) {
        doubled_area += static_cast<double>(step.fp - prev_fp) * static_cast<double>(step.tp + prev_tp);
        curve.points.push_back({step.threshold, static_cast<double>(step.fp) / N, static_cast<double>(step.tp) / P});
        prev_tp = step.tp;
        prev_fp = step.fp;
    }
    curve.auc = doubled_area / (2.0 * P * N);
    return curve;
}

PrCurve pr_aucpr(std::span<const int> labels, std::span<const double> scores) {
    const auto counts = count_classes(labels, scores);
    if (counts.pos == 0) throw Error(ErrorKind::NoPositives, "precision-recall needs a positive label");
    const double P = static_cast<double>(counts.pos);

    PrCurve curve;
    CompensatedSum ap;
    std::int64_t prev_tp = 0;
    for (const auto& step : sweep(labels, scores, true)) {
        const double precision = static_cast<double>(step.tp) / static_cast<double>(step.tp + step.fp);
        ap.add_ratio(static_cast<double>(step.tp - prev_tp) * static_cast<double>(step.tp),
                     static_cast<double>(step.tp + step.fp) * P);
        curve.points.push_back({step.threshold, static_cast<double>(step.tp) / P, precision});
        prev_tp = step.tp;
    }
    curve.average_precision = ap.value();
    return curve;
}

bool predicts_positive(double score, double threshold, Orientation o) noexcept {
    return o == Orientation::HighIsPositive ? score >= threshold : score <= threshold;
}

Confusion confusion_at(std::span<const int> labels, std::span<const double> scores, double threshold,
                       Orientation o) {
    count_classes(labels, scores);
    Confusion c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool predicted = predicts_positive(scores[i], threshold, o);
        if (labels[i]) {
            (predicted ? c.tp : c.fn)++;
        } else {
            (predicted ? c.fp : c.tn)++;
        }
    }
    return c;
}

ThresholdChoice choose_threshold(std::span<const int> labels, std::span<const double> scores,
                                 double min_sensitivity) {
    if (!(min_sensitivity > 0.0 && min_sensitivity <= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "min_sensitivity must be in (0, 1]");
    }
    const auto counts = count_classes(labels, scores);
    if (counts.pos == 0 || counts.neg == 0) throw Error(ErrorKind::SingleClass, "threshold needs both classes");

    const auto orientation =
        roc_auc(labels, scores).auc >= 0.5 ? Orientation::HighIsPositive : Orientation::LowIsPositive;
    // Smallest true-positive count meeting the floor; the epsilon absorbs
    // representation error in min_sensitivity * P (0.9 * 30 etc.).
    const auto required = static_cast<std::int64_t>(
        std::ceil(min_sensitivity * static_cast<double>(counts.pos) - 1e-9));

    bool found = false;
    ThresholdChoice best;
    // Sweep from the conservative end: the first cut predicts the fewest positives.
    for (const auto& step : sweep(labels, scores, orientation == Orientation::HighIsPositive)) {
        if (step.tp < required) continue;
        Confusion c{step.tp, step.fp, counts.neg - step.fp, counts.pos - step.tp};
        const bool better = !found || c.specificity() > best.specificity ||
                            (c.specificity() == best.specificity && c.sensitivity() > best.sensitivity);
        if (better) {
            found = true;
            best = {step.threshold, orientation, c.sensitivity(), c.specificity(), c};
        }
    }
    return best;
}

double f2(const Confusion& c) {
    if (c.tp + c.fn <= 0) throw Error(ErrorKind::NoPositives, "F2 needs at least one positive");
    if (c.tp == 0) return 0.0;
    const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    return 5.0 * precision * recall / (4.0 * precision + recall);
}

}  // namespace geh::metrics
