#include "mozart/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace mozart {

ConfusionMatrix confusion(const std::vector<int>& labels,
                          const std::vector<double>& probabilities, double threshold) {
    if (labels.size() != probabilities.size())
        throw std::invalid_argument("confusion: labels/probabilities length mismatch");
    if (labels.empty()) throw std::invalid_argument("confusion: empty input");

    ConfusionMatrix cm;
    cm.threshold = threshold;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("confusion: labels must be 0 or 1");
        bool predicted = probabilities[i] >= threshold;
        bool actual = labels[i] == 1;
        if (predicted && actual)
            ++cm.tp;
        else if (predicted && !actual)
            ++cm.fp;
        else if (!predicted && actual)
            ++cm.fn;
        else
            ++cm.tn;
    }
    return cm;
}

ConfusionMatrix confusion(const Matrix& labels, const Matrix& probabilities, double threshold) {
    if (labels.cols != 1 || probabilities.cols != 1)
        throw std::invalid_argument("confusion: expected n x 1 columns");
    std::vector<int> y(labels.rows);
    std::vector<double> p(probabilities.rows);
    for (std::size_t i = 0; i < labels.rows; ++i) y[i] = static_cast<int>(labels(i, 0));
    for (std::size_t i = 0; i < probabilities.rows; ++i) p[i] = probabilities(i, 0);
    return confusion(y, p, threshold);
}

MetricSet compute_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw std::invalid_argument("compute_metrics: empty confusion matrix");
    MetricSet m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    m.precision = cm.tp + cm.fp > 0
                      ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp)
                      : 0.0;
    m.recall = cm.tp + cm.fn > 0
                   ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn)
                   : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

std::string format_percent(double ratio) {
    // Half-up on the percent value at two decimals.
    double cents = std::floor(ratio * 10000.0 + 0.5);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", cents / 100.0);
    return buf;
}

std::string comparison_report(const std::vector<std::pair<std::string, MetricSet>>& entries) {
    if (entries.empty()) throw std::invalid_argument("comparison_report: no entries");

    std::ostringstream out;
    out << "metric";
    for (const auto& [name, _] : entries) out << ',' << name;
    out << '\n';

    auto row = [&](const char* label, auto pick) {
        out << label;
        for (const auto& [_, m] : entries) out << ',' << format_percent(pick(m));
        out << '\n';
    };
    row("accuracy", [](const MetricSet& m) { return m.accuracy; });
    row("precision", [](const MetricSet& m) { return m.precision; });
    row("recall", [](const MetricSet& m) { return m.recall; });
    row("f1", [](const MetricSet& m) { return m.f1; });
    return out.str();
}

}  // namespace mozart
