#include "mozart/stacker.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "mozart/errors.hpp"
#include "mozart/textio.hpp"

namespace mozart {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open file for writing: " + path);
    out << content;
}

json metricset_to_json(const MetricSet& m) {
    return json{{"accuracy", m.accuracy},
                {"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1}};
}

MetricSet metricset_from_json(const json& j) {
    return {j.at("accuracy").get<double>(), j.at("precision").get<double>(),
            j.at("recall").get<double>(), j.at("f1").get<double>()};
}

}  // namespace

ExperimentPreset mozart1_preset() {
    ExperimentPreset p;
    p.name = "MOZART1";
    p.learning_rate = 1e-5;
    p.epochs = 500;
    return p;
}

ExperimentPreset mozart2_preset() {
    ExperimentPreset p;
    p.name = "MOZART2";
    p.learning_rate = 1e-4;
    p.epochs = 300;
    return p;
}

ExperimentPreset preset_by_name(const std::string& name) {
    if (name == "MOZART1") return mozart1_preset();
    if (name == "MOZART2") return mozart2_preset();
    throw std::invalid_argument("unknown preset '" + name + "' (expected MOZART1 or MOZART2)");
}

MetaDataset assemble_meta_dataset(const PredictionTable& preds, const SplitAssignment& split,
                                  std::uint64_t seed) {
    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < preds.size(); ++i) row_of.emplace(preds.ids[i], i);

    std::vector<std::string> missing;
    auto require = [&](const std::vector<std::string>& ids) {
        for (const auto& id : ids)
            if (!row_of.count(id)) missing.push_back(id);
    };
    require(split.validation);
    require(split.test);
    if (!missing.empty()) {
        std::string msg = "assemble_meta_dataset: missing predictions for ids:";
        for (const auto& id : missing) msg += " " + id;
        throw ValidationError(msg);
    }

    std::vector<SampleRecord> val_records;
    val_records.reserve(split.validation.size());
    for (const auto& id : split.validation)
        val_records.push_back({id, preds.labels[row_of.at(id)], {}});
    auto sub = subdivide_validation(val_records, seed);

    auto build = [&](const std::vector<std::string>& ids) {
        Dataset d;
        d.features = Matrix(ids.size(), preds.model_names.size());
        d.labels = Matrix(ids.size(), 1);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            std::size_t r = row_of.at(ids[i]);
            for (std::size_t j = 0; j < preds.model_names.size(); ++j)
                d.features(i, j) = preds.probabilities(r, j);
            d.labels(i, 0) = preds.labels[r];
        }
        return d;
    };

    MetaDataset md;
    md.meta_train = build(sub.meta_train);
    md.meta_val = build(sub.meta_val);
    md.test = build(split.test);
    md.meta_train_ids = std::move(sub.meta_train);
    md.meta_val_ids = std::move(sub.meta_val);
    md.test_ids = split.test;
    md.model_names = preds.model_names;

    // Test-set hygiene: no id that feeds a gradient update may appear in test.
    std::unordered_set<std::string> test_ids(md.test_ids.begin(), md.test_ids.end());
    for (const auto& id : md.meta_train_ids)
        if (test_ids.count(id))
            throw ValidationError("assemble_meta_dataset: test id leaked into meta-train: " + id);
    return md;
}

StackRun run_mozart(const ExperimentPreset& preset, const PredictionTable& preds,
                    const SplitAssignment& split) {
    MetaDataset md = assemble_meta_dataset(preds, split, preset.subdivide_seed);

    NetworkState net = make_meta_network(md.model_names.size(), preset.net_seed);
    TrainConfig cfg;
    cfg.epochs = preset.epochs;
    cfg.batch_size = preset.batch_size;
    cfg.initial_lr = preset.learning_rate;
    cfg.shuffle_seed = preset.shuffle_seed;
    cfg.plateau = preset.plateau;

    TrainResult result;
    try {
        result = train(net, md.meta_train, md.meta_val, cfg);
    } catch (const TrainingDiverged& e) {
        throw TrainingDiverged(preset.name + ": " + e.what(), e.epoch());
    }

    auto eval = [&](const Dataset& set) {
        return compute_metrics(confusion(set.labels, predict(result.best, set.features)));
    };

    StackRun run;
    run.preset = preset;
    run.split = split;
    run.meta_train_metrics = eval(md.meta_train);
    run.meta_val_metrics = eval(md.meta_val);
    run.test_metrics = eval(md.test);

    // Base models evaluated on the identical test set by thresholding their
    // probability columns directly.
    for (std::size_t j = 0; j < md.model_names.size(); ++j) {
        Matrix col(md.test.size(), 1);
        for (std::size_t i = 0; i < md.test.size(); ++i) col(i, 0) = md.test.features(i, j);
        run.base_test_metrics.emplace_back(md.model_names[j],
                                           compute_metrics(confusion(md.test.labels, col)));
    }

    run.best_net = std::move(result.best);
    run.history = std::move(result.history);
    return run;
}

std::string compare_runs(const std::vector<StackRun>& runs) {
    if (runs.empty()) throw std::invalid_argument("compare_runs: no runs");
    std::vector<std::pair<std::string, MetricSet>> entries = runs.front().base_test_metrics;
    for (const auto& run : runs) entries.emplace_back(run.preset.name, run.test_metrics);
    return comparison_report(entries);
}

void save_run(const StackRun& run, const std::string& dir,
              const std::vector<std::string>& input_files) {
    fs::create_directories(dir);
    save_network(run.best_net, dir + "/weights.json");
    save_split_manifest(run.split, dir + "/split_manifest.json");
    write_file(dir + "/history.csv", history_to_table(run.history));
    write_file(dir + "/metrics.csv", compare_runs({run}));

    json base = json::array();
    for (const auto& [name, m] : run.base_test_metrics)
        base.push_back(json{{"model", name}, {"metrics", metricset_to_json(m)}});
    json metrics{{"preset", run.preset.name},
                 {"meta_train", metricset_to_json(run.meta_train_metrics)},
                 {"meta_val", metricset_to_json(run.meta_val_metrics)},
                 {"test", metricset_to_json(run.test_metrics)},
                 {"base_test", base}};
    write_file(dir + "/metrics.json", metrics.dump(2) + "\n");

    json inputs = json::array();
    for (const auto& path : input_files)
        inputs.push_back(json{{"path", path}, {"fnv1a64", file_digest(path)}});
    json manifest{{"preset",
                   {{"name", run.preset.name},
                    {"learning_rate", run.preset.learning_rate},
                    {"epochs", run.preset.epochs},
                    {"batch_size", run.preset.batch_size},
                    {"net_seed", run.preset.net_seed},
                    {"shuffle_seed", run.preset.shuffle_seed},
                    {"subdivide_seed", run.preset.subdivide_seed}}},
                  {"inputs", inputs}};
    write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

StoredRun load_run(const std::string& dir) {
    json metrics;
    try {
        metrics = json::parse(read_file(dir + "/metrics.json"));
    } catch (const json::parse_error& e) {
        throw ValidationError("load_run: corrupt metrics.json in " + dir + ": " + e.what());
    }
    StoredRun run;
    try {
        run.preset_name = metrics.at("preset").get<std::string>();
        run.test_metrics = metricset_from_json(metrics.at("test"));
        for (const auto& b : metrics.at("base_test"))
            run.base_test_metrics.emplace_back(b.at("model").get<std::string>(),
                                               metricset_from_json(b.at("metrics")));
    } catch (const json::exception& e) {
        throw ValidationError("load_run: corrupt metrics.json in " + dir + ": " + e.what());
    }
    run.history_csv = read_file(dir + "/history.csv");
    return run;
}

std::string fnv1a_digest(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const std::string& path) { return fnv1a_digest(read_file(path)); }

}  // namespace mozart
