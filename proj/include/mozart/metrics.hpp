#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mozart/matrix.hpp"

namespace mozart {

struct ConfusionMatrix {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    double threshold = 0.5;

    std::size_t total() const { return tp + tn + fp + fn; }
};

struct MetricSet {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline constexpr double kDefaultThreshold = 0.5;

// Predict positive iff probability >= threshold; the boundary counts positive.
ConfusionMatrix confusion(const std::vector<int>& labels, const std::vector<double>& probabilities,
                          double threshold = kDefaultThreshold);
// Column-vector convenience overload.
ConfusionMatrix confusion(const Matrix& labels, const Matrix& probabilities,
                          double threshold = kDefaultThreshold);

// Accuracy, precision, recall, F1. Degenerate denominators yield 0:
// precision with TP+FP=0, recall with TP+FN=0, F1 with P+R=0.
MetricSet compute_metrics(const ConfusionMatrix& cm);

// Percentage with two decimals, rounded half-up, e.g. 0.991631 -> "99.16".
std::string format_percent(double ratio);

// Metric-by-model table: rows accuracy/precision/recall/f1, one column per
// entry, percentages formatted as above. CSV with LF line endings.
std::string comparison_report(const std::vector<std::pair<std::string, MetricSet>>& entries);

}  // namespace mozart
