#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mozart/matrix.hpp"

namespace mozart {

struct SampleRecord {
    std::string id;
    int label = 0;  // 0 = negative/normal, 1 = positive
    std::string source_path;
};

struct SplitAssignment {
    std::vector<std::string> train, validation, test;
    std::uint64_t seed = 0;
    std::array<double, 3> ratios{0.7, 0.2, 0.1};
};

// Per-sample probabilities from the base models; the meta-learner's dataset.
struct PredictionTable {
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<std::string> model_names;
    Matrix probabilities;  // n x model count, each entry in [0, 1]

    std::size_t size() const { return ids.size(); }
};

// Synthetic correlated base learners: a shared latent score (weight sqrt(rho))
// plus per-model private noise (weight sqrt(1-rho)), pushed through a logistic
// link. Gives the stacking experiments a known generative model with a
// closed-form Bayes-optimal combiner.
struct SynthConfig {
    std::size_t n_samples = 0;
    double class_balance = 0.5;
    std::vector<double> noise_scales;        // one per model; exclusive with target_accuracies
    std::vector<double> target_accuracies;   // converted via noise_scale_for_accuracy
    double correlation = 0.0;                // rho in [0, 1]
    double logistic_scale = 2.0;             // slope of the probability link
    std::uint64_t seed = 0;
    std::vector<std::string> model_names;    // defaults to model1, model2, ...
};

// Per-class seeded shuffle, then floor(r_train*n) / floor(r_val*n) / remainder.
SplitAssignment stratified_split(const std::vector<SampleRecord>& records,
                                 std::array<double, 3> ratios, std::uint64_t seed);

struct ValidationSubdivision {
    std::vector<std::string> meta_train, meta_val;  // 80 / 20 of the validation set
};

ValidationSubdivision subdivide_validation(const std::vector<SampleRecord>& val_records,
                                           std::uint64_t seed);

// Registry file: CSV `id,label[,path]`, one row per sample. A prediction file
// also parses as a registry (extra columns are ignored as the optional path).
std::vector<SampleRecord> load_registry(const std::string& path);

// Prediction file: CSV `id,label,<model1>,...`, probabilities as decimal
// floats, UTF-8, LF line endings. Fully validated on load.
PredictionTable load_predictions(const std::string& path);
void save_predictions(const PredictionTable& table, const std::string& path);
std::string predictions_to_csv(const PredictionTable& table);

// Split manifest: JSON document with seed, ratios, and the three id lists.
void save_split_manifest(const SplitAssignment& split, const std::string& path);
SplitAssignment load_split_manifest(const std::string& path);

PredictionTable synth_base_learners(const SynthConfig& cfg);

// Noise scale giving a marginal accuracy of `accuracy` at threshold 0.5 under
// the synthetic model: sigma = 1 / probit(accuracy).
double noise_scale_for_accuracy(double accuracy);

// Standard normal CDF and its inverse (bisection on the CDF).
double normal_cdf(double x);
double probit(double p);

}  // namespace mozart
