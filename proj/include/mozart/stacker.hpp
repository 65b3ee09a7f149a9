#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mozart/datapipe.hpp"
#include "mozart/metrics.hpp"
#include "mozart/network.hpp"
#include "mozart/optimizer.hpp"

namespace mozart {

// The two standard configurations differ only in learning rate and epochs.
struct ExperimentPreset {
    std::string name;
    double learning_rate = 1e-4;
    std::size_t epochs = 300;
    std::size_t batch_size = 32;
    std::uint64_t net_seed = 42;
    std::uint64_t shuffle_seed = 42;
    std::uint64_t subdivide_seed = 42;
    PlateauConfig plateau;
};

ExperimentPreset mozart1_preset();  // lr 1e-5, 500 epochs
ExperimentPreset mozart2_preset();  // lr 1e-4, 300 epochs
// Named preset lookup: "MOZART1" or "MOZART2".
ExperimentPreset preset_by_name(const std::string& name);

struct MetaDataset {
    Dataset meta_train, meta_val, test;
    std::vector<std::string> meta_train_ids, meta_val_ids, test_ids;
    std::vector<std::string> model_names;
};

// Builds the meta-learner's feature/label sets: base-model probability vectors
// over the 80/20 subdivision of the validation split, with the untouched test
// split reserved for the final evaluation.
MetaDataset assemble_meta_dataset(const PredictionTable& preds, const SplitAssignment& split,
                                  std::uint64_t seed);

struct StackRun {
    ExperimentPreset preset;
    SplitAssignment split;
    NetworkState best_net;
    TrainHistory history;
    MetricSet meta_train_metrics, meta_val_metrics, test_metrics;
    std::vector<std::pair<std::string, MetricSet>> base_test_metrics;
};

StackRun run_mozart(const ExperimentPreset& preset, const PredictionTable& preds,
                    const SplitAssignment& split);

// 4-metric x N-model comparison: base models first (from the first run), then
// one column per run.
std::string compare_runs(const std::vector<StackRun>& runs);

// Run directory layout: manifest.json, split_manifest.json, weights.json,
// history.csv, metrics.json, metrics.csv.
void save_run(const StackRun& run, const std::string& dir,
              const std::vector<std::string>& input_files = {});

struct StoredRun {
    std::string preset_name;
    MetricSet test_metrics;
    std::vector<std::pair<std::string, MetricSet>> base_test_metrics;
    std::string history_csv;
};

StoredRun load_run(const std::string& dir);

// FNV-1a 64-bit hex digest; used for provenance records and rerun comparison.
std::string fnv1a_digest(const std::string& bytes);
std::string file_digest(const std::string& path);

}  // namespace mozart
