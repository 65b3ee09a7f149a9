#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include "mozart/datapipe.hpp"
#include "mozart/errors.hpp"
#include "mozart/metrics.hpp"
#include "mozart/rng.hpp"

using namespace mozart;

namespace {

std::vector<SampleRecord> balanced_registry(std::size_t per_class) {
    std::vector<SampleRecord> records;
    for (std::size_t i = 0; i < per_class; ++i)
        records.push_back({"pos" + std::to_string(i), 1, {}});
    for (std::size_t i = 0; i < per_class; ++i)
        records.push_back({"neg" + std::to_string(i), 0, {}});
    return records;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

double column_accuracy(const PredictionTable& t, std::size_t col) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        correct += (t.probabilities(i, col) >= 0.5 ? 1 : 0) == t.labels[i];
    return static_cast<double>(correct) / static_cast<double>(t.size());
}

}  // namespace

TEST_CASE("stratified split arithmetic") {
    SUBCASE("balanced 7232-sample registry") {
        auto split = stratified_split(balanced_registry(3616), {0.7, 0.2, 0.1}, 1);
        CHECK(split.train.size() == 5062);
        CHECK(split.validation.size() == 1446);
        CHECK(split.test.size() == 724);
    }
    SUBCASE("ten samples, one class") {
        std::vector<SampleRecord> records;
        for (int i = 0; i < 10; ++i) records.push_back({"s" + std::to_string(i), 1, {}});
        auto split = stratified_split(records, {0.7, 0.2, 0.1}, 0);
        CHECK(split.train.size() == 7);
        CHECK(split.validation.size() == 2);
        CHECK(split.test.size() == 1);
    }
    SUBCASE("seed changes membership, not sizes") {
        auto a = stratified_split(balanced_registry(50), {0.7, 0.2, 0.1}, 1);
        auto b = stratified_split(balanced_registry(50), {0.7, 0.2, 0.1}, 2);
        CHECK(a.train.size() == b.train.size());
        CHECK(a.train != b.train);
        auto c = stratified_split(balanced_registry(50), {0.7, 0.2, 0.1}, 1);
        CHECK(a.train == c.train);
    }
    SUBCASE("invalid inputs") {
        CHECK_THROWS_AS(stratified_split(balanced_registry(50), {0.7, 0.2, 0.2}, 0),
                        std::invalid_argument);
        std::vector<SampleRecord> tiny{{"a", 0, {}}, {"b", 1, {}}, {"c", 1, {}}, {"d", 1, {}}};
        CHECK_THROWS_AS(stratified_split(tiny, {0.7, 0.2, 0.1}, 0), std::invalid_argument);
    }
}

TEST_CASE("split partition property over random registries") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t pos = 3 + rng.index(200), neg = 3 + rng.index(200);
        std::vector<SampleRecord> records;
        for (std::size_t i = 0; i < pos; ++i) records.push_back({"p" + std::to_string(i), 1, {}});
        for (std::size_t i = 0; i < neg; ++i) records.push_back({"n" + std::to_string(i), 0, {}});
        auto split = stratified_split(records, {0.7, 0.2, 0.1}, rng.next_u64());

        std::set<std::string> all;
        all.insert(split.train.begin(), split.train.end());
        all.insert(split.validation.begin(), split.validation.end());
        all.insert(split.test.begin(), split.test.end());
        CHECK(all.size() == records.size());
        CHECK(split.train.size() + split.validation.size() + split.test.size() == records.size());

        // Per-class skew <= 1 sample from the exact ratio.
        for (int label : {0, 1}) {
            double n = label ? pos : neg;
            auto count = [&](const std::vector<std::string>& ids) {
                return std::count_if(ids.begin(), ids.end(), [&](const std::string& id) {
                    return id[0] == (label ? 'p' : 'n');
                });
            };
            CHECK(std::abs(count(split.train) - 0.7 * n) <= 1.0);
            CHECK(std::abs(count(split.validation) - 0.2 * n) <= 1.0);
            CHECK(std::abs(count(split.test) - 0.1 * n) <= 1.0);
        }
    }
}

TEST_CASE("validation subdivision") {
    SUBCASE("1446 balanced validation samples") {
        auto records = balanced_registry(723);
        auto sub = subdivide_validation(records, 3);
        CHECK(sub.meta_train.size() == 1156);
        CHECK(sub.meta_val.size() == 290);
    }
    SUBCASE("ten samples") {
        auto sub = subdivide_validation(balanced_registry(5), 0);
        CHECK(sub.meta_train.size() == 8);
        CHECK(sub.meta_val.size() == 2);
    }
    SUBCASE("union recovers the input") {
        auto records = balanced_registry(20);
        auto sub = subdivide_validation(records, 9);
        std::set<std::string> all(sub.meta_train.begin(), sub.meta_train.end());
        all.insert(sub.meta_val.begin(), sub.meta_val.end());
        CHECK(all.size() == records.size());
    }
    SUBCASE("too few samples") {
        std::vector<SampleRecord> tiny{{"a", 0, {}}, {"b", 1, {}}};
        CHECK_THROWS_AS(subdivide_validation(tiny, 0), std::invalid_argument);
    }
}

TEST_CASE("prediction file round trip and validation") {
    SynthConfig cfg;
    cfg.n_samples = 724;
    cfg.target_accuracies = {0.9, 0.92, 0.95};
    cfg.correlation = 0.3;
    cfg.seed = 11;
    auto table = synth_base_learners(cfg);

    auto path = temp_path("mozart_preds_test.csv");
    save_predictions(table, path);

    SUBCASE("load recovers the table exactly") {
        auto loaded = load_predictions(path);
        CHECK(loaded.ids == table.ids);
        CHECK(loaded.labels == table.labels);
        CHECK(loaded.model_names == table.model_names);
        CHECK(loaded.probabilities == table.probabilities);
        CHECK(loaded.probabilities.cols == 3);
        CHECK(loaded.size() == 724);
        // write -> load -> write is byte identical
        CHECK(predictions_to_csv(loaded) == predictions_to_csv(table));
    }
    SUBCASE("out-of-range probability names row and column") {
        std::ofstream out(path);
        out << "id,label,m1\nrow1,1,1.3\n";
        out.close();
        try {
            load_predictions(path);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            std::string msg = e.what();
            CHECK(msg.find("row1") != std::string::npos);
            CHECK(msg.find("m1") != std::string::npos);
        }
    }
    SUBCASE("empty file is a parse error") {
        std::ofstream(path).close();
        CHECK_THROWS_AS(load_predictions(path), ParseError);
    }
    SUBCASE("duplicate id rejected") {
        std::ofstream out(path);
        out << "id,label,m1\na,1,0.5\na,0,0.4\n";
        out.close();
        CHECK_THROWS_AS(load_predictions(path), ValidationError);
    }
    SUBCASE("malformed row carries line number") {
        std::ofstream out(path);
        out << "id,label,m1\na,1,0.5\nb,1\n";
        out.close();
        try {
            load_predictions(path);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("split manifest round trip") {
    auto split = stratified_split(balanced_registry(40), {0.7, 0.2, 0.1}, 5);
    auto path = temp_path("mozart_split_test.json");
    save_split_manifest(split, path);
    auto loaded = load_split_manifest(path);
    CHECK(loaded.train == split.train);
    CHECK(loaded.validation == split.validation);
    CHECK(loaded.test == split.test);
    CHECK(loaded.seed == split.seed);
    std::remove(path.c_str());
}

TEST_CASE("synthetic generator") {
    SUBCASE("pure noise gives coin-flip accuracy") {
        SynthConfig cfg;
        cfg.n_samples = 10000;
        cfg.noise_scales = {50.0, 50.0, 50.0};
        cfg.correlation = 0.0;
        cfg.seed = 2;
        auto t = synth_base_learners(cfg);
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(column_accuracy(t, j) == doctest::Approx(0.5).epsilon(0.06));
    }
    SUBCASE("full correlation with equal scales duplicates columns") {
        SynthConfig cfg;
        cfg.n_samples = 200;
        cfg.noise_scales = {0.5, 0.5, 0.5};
        cfg.correlation = 1.0;
        cfg.seed = 3;
        auto t = synth_base_learners(cfg);
        for (std::size_t i = 0; i < t.size(); ++i) {
            CHECK(t.probabilities(i, 0) == t.probabilities(i, 1));
            CHECK(t.probabilities(i, 1) == t.probabilities(i, 2));
        }
    }
    SUBCASE("accuracy degrades monotonically with noise scale") {
        double prev = 1.1;
        for (double sigma : {0.2, 0.5, 1.0, 2.0, 4.0}) {
            SynthConfig cfg;
            cfg.n_samples = 20000;
            cfg.noise_scales = {sigma};
            cfg.seed = 4;
            auto t = synth_base_learners(cfg);
            double acc = column_accuracy(t, 0);
            CHECK(acc < prev);
            prev = acc;
        }
    }
    SUBCASE("target accuracies are hit") {
        SynthConfig cfg;
        cfg.n_samples = 50000;
        cfg.target_accuracies = {0.95};
        cfg.seed = 6;
        auto t = synth_base_learners(cfg);
        CHECK(column_accuracy(t, 0) == doctest::Approx(0.95).epsilon(0.01));
    }
    SUBCASE("deterministic in seed") {
        SynthConfig cfg;
        cfg.n_samples = 100;
        cfg.noise_scales = {0.5, 1.0};
        cfg.seed = 8;
        auto a = synth_base_learners(cfg);
        auto b = synth_base_learners(cfg);
        CHECK(a.probabilities == b.probabilities);
        CHECK(a.labels == b.labels);
    }
    SUBCASE("config validation") {
        SynthConfig cfg;
        cfg.n_samples = 10;
        CHECK_THROWS_AS(synth_base_learners(cfg), std::invalid_argument);  // no scales
        cfg.noise_scales = {1.0};
        cfg.correlation = 1.5;
        CHECK_THROWS_AS(synth_base_learners(cfg), std::invalid_argument);
    }
}

TEST_CASE("probit inverts the normal cdf") {
    for (double p : {0.6, 0.9, 0.95, 0.975, 0.99}) {
        CHECK(normal_cdf(probit(p)) == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK(probit(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
}
