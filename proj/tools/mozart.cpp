// Command-line surface for the stacking pipeline: split, simulate, train, report.
//
// Exit codes: 0 success, 2 user/input error, 3 numerical failure.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mozart/datapipe.hpp"
#include "mozart/errors.hpp"
#include "mozart/metrics.hpp"
#include "mozart/stacker.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mozart::ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mozart::ValidationError("cannot open file for writing: " + path);
    out << content;
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw mozart::ValidationError(path + ": " + e.what());
    }
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw mozart::ValidationError(where + ": unknown key '" + key + "'");
}

mozart::SynthConfig parse_synth_config(const json& j) {
    reject_unknown_keys(j,
                        {"n_samples", "class_balance", "noise_scales", "target_accuracies",
                         "correlation", "logistic_scale", "seed", "model_names"},
                        "synth config");
    mozart::SynthConfig cfg;
    cfg.n_samples = j.at("n_samples").get<std::size_t>();
    if (j.contains("class_balance")) cfg.class_balance = j["class_balance"].get<double>();
    if (j.contains("noise_scales")) cfg.noise_scales = j["noise_scales"].get<std::vector<double>>();
    if (j.contains("target_accuracies"))
        cfg.target_accuracies = j["target_accuracies"].get<std::vector<double>>();
    if (j.contains("correlation")) cfg.correlation = j["correlation"].get<double>();
    if (j.contains("logistic_scale")) cfg.logistic_scale = j["logistic_scale"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("model_names"))
        cfg.model_names = j["model_names"].get<std::vector<std::string>>();
    return cfg;
}

mozart::ExperimentPreset parse_preset(const json& j) {
    reject_unknown_keys(j,
                        {"name", "learning_rate", "epochs", "batch_size", "net_seed",
                         "shuffle_seed", "subdivide_seed"},
                        "preset");
    std::string name = j.at("name").get<std::string>();
    mozart::ExperimentPreset preset;
    if (name == "custom") {
        preset.name = "custom";
    } else {
        preset = mozart::preset_by_name(name);
    }
    if (j.contains("learning_rate")) preset.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("epochs")) preset.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("batch_size")) preset.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("net_seed")) preset.net_seed = j["net_seed"].get<std::uint64_t>();
    if (j.contains("shuffle_seed")) preset.shuffle_seed = j["shuffle_seed"].get<std::uint64_t>();
    if (j.contains("subdivide_seed"))
        preset.subdivide_seed = j["subdivide_seed"].get<std::uint64_t>();
    return preset;
}

void print_split_counts(const mozart::SplitAssignment& split,
                        const std::vector<mozart::SampleRecord>& records) {
    std::map<std::string, int> label_of;
    for (const auto& r : records) label_of[r.id] = r.label;
    auto describe = [&](const char* name, const std::vector<std::string>& ids) {
        std::map<int, std::size_t> counts;
        for (const auto& id : ids) ++counts[label_of.at(id)];
        std::cout << name << ": " << ids.size() << " (";
        bool first = true;
        for (const auto& [label, n] : counts) {
            if (!first) std::cout << ", ";
            std::cout << "class " << label << ": " << n;
            first = false;
        }
        std::cout << ")\n";
    };
    describe("train", split.train);
    describe("validation", split.validation);
    describe("test", split.test);
}

mozart::PredictionTable label_accuracy_report(const mozart::SynthConfig& cfg) {
    auto table = mozart::synth_base_learners(cfg);
    for (std::size_t j = 0; j < table.model_names.size(); ++j) {
        mozart::Matrix col(table.size(), 1);
        for (std::size_t i = 0; i < table.size(); ++i) col(i, 0) = table.probabilities(i, j);
        auto m = mozart::compute_metrics(
            mozart::confusion(mozart::Matrix::column(
                                  std::vector<double>(table.labels.begin(), table.labels.end())),
                              col));
        std::cout << table.model_names[j] << " accuracy: " << mozart::format_percent(m.accuracy)
                  << "%\n";
    }
    return table;
}

int cmd_split(const std::string& registry_path, const std::string& ratios_str, std::uint64_t seed,
              const std::string& out_path) {
    std::array<double, 3> ratios{};
    char comma1 = 0, comma2 = 0;
    std::istringstream rs(ratios_str);
    if (!(rs >> ratios[0] >> comma1 >> ratios[1] >> comma2 >> ratios[2]) || comma1 != ',' ||
        comma2 != ',')
        throw mozart::ValidationError("ratios must look like 0.7,0.2,0.1");

    auto records = mozart::load_registry(registry_path);
    auto split = mozart::stratified_split(records, ratios, seed);
    mozart::save_split_manifest(split, out_path);
    print_split_counts(split, records);
    std::cout << "manifest written to " << out_path << "\n";
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_path) {
    auto cfg = parse_synth_config(parse_json_file(config_path));
    if (seed) cfg.seed = *seed;
    auto table = label_accuracy_report(cfg);
    mozart::save_predictions(table, out_path);
    std::cout << "predictions written to " << out_path << "\n";
    return kExitOk;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::string> out_override) {
    json cfg = parse_json_file(config_path);
    reject_unknown_keys(cfg, {"dataset", "split", "preset", "output_dir"}, "run config");

    std::string out_dir = out_override ? *out_override : cfg.at("output_dir").get<std::string>();
    fs::create_directories(out_dir);
    std::vector<std::string> input_files{config_path};

    // Dataset: exactly one of a prediction file or a synthetic generator.
    const json& ds = cfg.at("dataset");
    reject_unknown_keys(ds, {"predictions", "synth"}, "dataset");
    if (ds.contains("predictions") == ds.contains("synth"))
        throw mozart::ValidationError("dataset: exactly one of 'predictions' or 'synth'");
    mozart::PredictionTable preds;
    if (ds.contains("predictions")) {
        std::string path = ds["predictions"].get<std::string>();
        preds = mozart::load_predictions(path);
        input_files.push_back(path);
    } else {
        auto synth = parse_synth_config(ds["synth"]);
        if (seed) synth.seed = *seed;
        preds = mozart::synth_base_learners(synth);
        mozart::save_predictions(preds, out_dir + "/predictions.csv");
    }

    // Split: an existing manifest, or ratios computed over the prediction table.
    const json& sp = cfg.at("split");
    reject_unknown_keys(sp, {"manifest", "ratios", "seed"}, "split");
    mozart::SplitAssignment split;
    if (sp.contains("manifest")) {
        std::string path = sp["manifest"].get<std::string>();
        split = mozart::load_split_manifest(path);
        input_files.push_back(path);
    } else {
        std::array<double, 3> ratios{0.7, 0.2, 0.1};
        if (sp.contains("ratios")) {
            auto r = sp["ratios"].get<std::vector<double>>();
            if (r.size() != 3) throw mozart::ValidationError("split: ratios must have 3 entries");
            std::copy(r.begin(), r.end(), ratios.begin());
        }
        std::uint64_t split_seed = sp.contains("seed") ? sp["seed"].get<std::uint64_t>() : 0;
        if (seed) split_seed = *seed;
        std::vector<mozart::SampleRecord> records;
        for (std::size_t i = 0; i < preds.size(); ++i)
            records.push_back({preds.ids[i], preds.labels[i], {}});
        split = mozart::stratified_split(records, ratios, split_seed);
    }

    auto preset = parse_preset(cfg.at("preset"));
    if (seed) {
        preset.net_seed = *seed;
        preset.shuffle_seed = *seed;
        preset.subdivide_seed = *seed;
    }

    auto run = mozart::run_mozart(preset, preds, split);
    mozart::save_run(run, out_dir, input_files);

    std::cout << "run written to " << out_dir << "\n" << mozart::compare_runs({run});
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<mozart::StoredRun> runs;
    for (const auto& dir : run_dirs) runs.push_back(mozart::load_run(dir));

    std::vector<std::pair<std::string, mozart::MetricSet>> entries =
        runs.front().base_test_metrics;
    for (const auto& run : runs) entries.emplace_back(run.preset_name, run.test_metrics);
    std::string table = mozart::comparison_report(entries);
    write_file(out_dir + "/comparison.csv", table);

    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::string base = fs::path(run_dirs[i]).filename().string();
        if (base.empty()) base = "run" + std::to_string(i);
        write_file(out_dir + "/" + base + "_history.csv", runs[i].history_csv);
    }
    std::cout << table;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MOZART stacked-ensemble pipeline"};
    app.require_subcommand(1);

    std::string registry_path, ratios_str = "0.7,0.2,0.1", config_path, out_path;
    std::uint64_t split_seed = 0;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    std::vector<std::string> run_dirs;

    auto* split = app.add_subcommand("split", "Stratified train/validation/test split");
    split->add_option("--registry", registry_path, "CSV registry `id,label[,path]`")->required();
    split->add_option("--ratios", ratios_str, "train,val,test ratios (default 0.7,0.2,0.1)");
    split->add_option("--seed", split_seed, "shuffle seed");
    split->add_option("--out", out_path, "manifest output path")->required();

    auto* simulate = app.add_subcommand("simulate", "Generate synthetic base-model predictions");
    simulate->add_option("--config", config_path, "synth config JSON")->required();
    simulate->add_option("--seed", seed_override, "seed override");
    simulate->add_option("--out", out_path, "prediction file output path")->required();

    auto* train = app.add_subcommand("train", "Train a MOZART meta-network");
    train->add_option("--config", config_path, "run config JSON")->required();
    train->add_option("--seed", seed_override, "seed override for all stages");
    train->add_option("--out", out_override, "output directory override");

    auto* report = app.add_subcommand("report", "Comparison table and curve data from runs");
    report->add_option("dirs", run_dirs, "run directories")->required();
    report->add_option("--out", out_path, "output directory")->default_val(".");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (split->parsed()) return cmd_split(registry_path, ratios_str, split_seed, out_path);
        if (simulate->parsed()) return cmd_simulate(config_path, seed_override, out_path);
        if (train->parsed()) return cmd_train(config_path, seed_override, out_override);
        if (report->parsed()) return cmd_report(run_dirs, out_path);
    } catch (const mozart::TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
