#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "geh/error.hpp"

namespace geh::metrics {

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // starts at (0, 0), ends at (1, 1)
    double auc = 0.0;
};

/// ROC over descending unique scores; tied scores move as one step, so the
/// trapezoidal AUC equals the concordance probability with half credit for ties.
RocCurve roc_auc(std::span<const int> labels, std::span<const double> scores);

struct PrPoint {
    double threshold = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

struct PrCurve {
    std::vector<PrPoint> points;  // one per unique score, recall non-decreasing
    double average_precision = 0.0;
};

/// Average precision: sum over thresholds of (recall step) x precision.
PrCurve pr_aucpr(std::span<const int> labels, std::span<const double> scores);

struct Confusion {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    double sensitivity() const noexcept;
    double specificity() const noexcept;
};

enum class Orientation { HighIsPositive, LowIsPositive };
std::string_view to_string(Orientation o) noexcept;

bool predicts_positive(double score, double threshold, Orientation o) noexcept;
Confusion confusion_at(std::span<const int> labels, std::span<const double> scores, double threshold,
                       Orientation o);

struct ThresholdChoice {
    double threshold = 0.0;
    Orientation orientation = Orientation::HighIsPositive;
    double sensitivity = 0.0;
    double specificity = 0.0;
    Confusion confusion;
};

/// Orientation follows AUC >= 0.5. Among cut points with sensitivity >=
/// min_sensitivity, keeps the one with the best specificity (then the best
/// sensitivity). The threshold is an observed score and is inclusive.
ThresholdChoice choose_threshold(std::span<const int> labels, std::span<const double> scores,
                                 double min_sensitivity = 0.90);

/// F-beta with beta = 2; zero when there are no true positives.
double f2(const Confusion& c);

}  // namespace geh::metrics
