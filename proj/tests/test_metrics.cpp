#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mozart/metrics.hpp"
#include "mozart/rng.hpp"

using namespace mozart;

namespace {

// Independent per-sample tally, kept deliberately naive.
MetricSet brute_force_metrics(const std::vector<int>& labels, const std::vector<double>& probs,
                              double threshold) {
    double tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        int pred = probs[i] >= threshold ? 1 : 0;
        if (pred == 1 && labels[i] == 1) tp += 1;
        if (pred == 1 && labels[i] == 0) fp += 1;
        if (pred == 0 && labels[i] == 1) fn += 1;
        if (pred == 0 && labels[i] == 0) tn += 1;
    }
    MetricSet m;
    m.accuracy = (tp + tn) / (tp + tn + fp + fn);
    m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

}  // namespace

TEST_CASE("confusion counts") {
    SUBCASE("clean separation") {
        auto cm = confusion(std::vector<int>{1, 0}, std::vector<double>{0.9, 0.1}, 0.5);
        CHECK(cm.tp == 1);
        CHECK(cm.tn == 1);
        CHECK(cm.fp == 0);
        CHECK(cm.fn == 0);
    }
    SUBCASE("boundary counts positive") {
        auto cm = confusion(std::vector<int>{1, 0}, std::vector<double>{0.5, 0.5}, 0.5);
        CHECK(cm.tp == 1);
        CHECK(cm.fp == 1);
        CHECK(cm.tn == 0);
        CHECK(cm.fn == 0);
    }
    SUBCASE("length mismatch rejected") {
        CHECK_THROWS_AS(confusion({1}, {0.5, 0.5}, 0.5), std::invalid_argument);
    }
}

TEST_CASE("metrics match a brute-force tally on random inputs") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng.index(1000);
        std::vector<int> labels(n);
        std::vector<double> probs(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.bernoulli(0.5) ? 1 : 0;
            probs[i] = rng.uniform();
        }
        double threshold = rng.uniform(0.1, 0.9);
        auto cm = confusion(labels, probs, threshold);
        auto m = compute_metrics(cm);
        auto oracle = brute_force_metrics(labels, probs, threshold);
        CHECK(std::abs(m.accuracy - oracle.accuracy) < 1e-12);
        CHECK(std::abs(m.precision - oracle.precision) < 1e-12);
        CHECK(std::abs(m.recall - oracle.recall) < 1e-12);
        CHECK(std::abs(m.f1 - oracle.f1) < 1e-12);
    }
}

TEST_CASE("threshold monotonicity") {
    Rng rng(5);
    std::vector<int> labels(500);
    std::vector<double> probs(500);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = rng.bernoulli(0.4) ? 1 : 0;
        probs[i] = rng.uniform();
    }
    auto prev = confusion(labels, probs, 0.05);
    for (double t = 0.1; t < 1.0; t += 0.05) {
        auto cm = confusion(labels, probs, t);
        CHECK(cm.tp <= prev.tp);
        CHECK(cm.tn >= prev.tn);
        prev = cm;
    }
}

TEST_CASE("metric ranges and harmonic-mean bounds") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionMatrix cm;
        cm.tp = rng.index(50);
        cm.tn = rng.index(50);
        cm.fp = rng.index(50);
        cm.fn = rng.index(50);
        if (cm.total() == 0) cm.tn = 1;
        auto m = compute_metrics(cm);
        for (double v : {m.accuracy, m.precision, m.recall, m.f1}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        if (m.precision > 0.0 && m.recall > 0.0) {
            CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-15);
            CHECK(m.f1 >= std::min(m.precision, m.recall) - 1e-15);
        }
    }
}

TEST_CASE("degenerate denominators yield zero") {
    ConfusionMatrix cm;
    cm.tn = 10;  // no positives anywhere
    auto m = compute_metrics(cm);
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
}

TEST_CASE("perfect classifier") {
    ConfusionMatrix cm;
    cm.tp = 5;
    cm.tn = 5;
    auto m = compute_metrics(cm);
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
}

TEST_CASE("reference precision/recall pairs reproduce the F1 column") {
    auto f1 = [](double p, double r) { return 2.0 * p * r / (p + r); };
    CHECK(format_percent(f1(1.0000, 0.9834)) == "99.16");
    CHECK(format_percent(f1(0.9695, 0.9978)) == "98.34");
    CHECK(format_percent(f1(0.9196, 0.9947)) == "95.57");
    CHECK(format_percent(f1(0.9949, 0.9765)) == "98.56");
    CHECK(format_percent(f1(0.9972, 0.9861)) == "99.16");
}

TEST_CASE("comparison report layout") {
    MetricSet a{0.9847, 0.9695, 0.9978, 0.9834};
    MetricSet b{0.9917, 1.0000, 0.9834, 0.9916};
    SUBCASE("two columns") {
        auto table = comparison_report({{"Inception", a}, {"MOZART1", b}});
        CHECK(table ==
              "metric,Inception,MOZART1\n"
              "accuracy,98.47,99.17\n"
              "precision,96.95,100.00\n"
              "recall,99.78,98.34\n"
              "f1,98.34,99.16\n");
    }
    SUBCASE("single column") {
        auto table = comparison_report({{"only", a}});
        CHECK(table.find("metric,only\n") == 0);
    }
    SUBCASE("degenerate model reports 0.00") {
        MetricSet zero{0.5, 0.0, 0.0, 0.0};
        auto table = comparison_report({{"z", zero}});
        CHECK(table.find("f1,0.00\n") != std::string::npos);
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(comparison_report({}), std::invalid_argument);
    }
}
