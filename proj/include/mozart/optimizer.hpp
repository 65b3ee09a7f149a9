#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mozart/matrix.hpp"
#include "mozart/network.hpp"

namespace mozart {

struct AdamConfig {
    double alpha = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam moments, one pair of arrays per learnable parameter block, in
// NetworkState::param_views() order.
struct AdamState {
    AdamConfig cfg;
    std::uint64_t t = 0;
    std::vector<Matrix> m, v;

    static AdamState init(const NetworkState& net, AdamConfig cfg = {});
};

// One bias-corrected Adam update in place.
void adam_step(AdamState& state, std::vector<Matrix*>& params, const Gradients& grads);

struct PlateauConfig {
    std::size_t patience = 5;
    double factor = 0.2;
    double min_lr = 1e-7;
    double min_delta = 0.0;
};

struct PlateauState {
    PlateauConfig cfg;
    double current_lr = 0.0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t wait = 0;
};

// Reduce-on-plateau: a strict improvement (by more than min_delta) resets the
// wait counter; once the loss has failed to improve for patience+1 epochs the
// rate is multiplied by factor, floored at min_lr.
void plateau_update(PlateauState& state, double epoch_val_loss);

struct CheckpointState {
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    NetworkState best_weights;
};

// Snapshot replaced iff val_loss strictly improves; ties keep the earlier epoch.
void checkpoint_update(CheckpointState& state, std::size_t epoch, double val_loss,
                       const NetworkState& net);

struct TrainConfig {
    std::size_t epochs = 300;
    std::size_t batch_size = 32;
    double initial_lr = 1e-4;
    std::uint64_t shuffle_seed = 0;
    PlateauConfig plateau;
    AdamConfig adam;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double lr = 0.0;
    double train_loss = 0.0, val_loss = 0.0;
    double train_acc = 0.0, val_acc = 0.0;
    double train_prec = 0.0, val_prec = 0.0;
    double train_rec = 0.0, val_rec = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

struct Dataset {
    Matrix features;  // n x d
    Matrix labels;    // n x 1, values in {0, 1}

    std::size_t size() const { return features.rows; }
};

struct TrainResult {
    NetworkState best;  // the checkpointed weights, never the last epoch's
    TrainHistory history;
};

// Mini-batch Adam on BCE with per-epoch seeded shuffling, full inference-mode
// metric re-passes, plateau scheduling, and best-loss checkpointing.
TrainResult train(const NetworkState& initial, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config);

// CSV: epoch,lr,train_loss,val_loss,train_acc,val_acc,train_prec,val_prec,train_rec,val_rec
std::string history_to_table(const TrainHistory& history);

}  // namespace mozart
