#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mozart/matrix.hpp"
#include "mozart/rng.hpp"

namespace mozart {

enum class LayerKind { Dense, ReLU, Sigmoid, Dropout, BatchNorm };

struct LayerSpec {
    LayerKind kind;
    std::size_t units = 0;  // Dense only
    double rate = 0.0;      // Dropout only

    bool operator==(const LayerSpec&) const = default;
};

struct DenseParams {
    Matrix weight;  // in_dim x units
    Matrix bias;    // 1 x units

    bool operator==(const DenseParams&) const = default;
};

struct BatchNormParams {
    Matrix gamma, beta;                  // 1 x features, learnable
    Matrix running_mean, running_var;    // 1 x features, tracked

    bool operator==(const BatchNormParams&) const = default;
};

// Epsilon inside the batch-norm denominator and the running-stat momentum.
inline constexpr double kBnEpsilon = 1e-3;
inline constexpr double kBnMomentumDefault = 0.99;

// Architecture plus all learnable parameters and batch-norm statistics.
// Dense/BatchNorm parameter blocks are stored in spec order.
struct NetworkState {
    std::size_t input_dim = 0;
    std::vector<LayerSpec> spec;
    std::vector<DenseParams> dense;
    std::vector<BatchNormParams> bnorm;
    double bn_momentum = kBnMomentumDefault;
    std::uint64_t rng_seed = 0;

    std::size_t output_dim() const;

    // Learnable parameters in a fixed order: per layer, Dense -> {weight, bias},
    // BatchNorm -> {gamma, beta}. Gradients and Adam moments mirror this order.
    std::vector<Matrix*> param_views();
    std::vector<const Matrix*> param_views() const;
    std::size_t param_count() const;

    bool operator==(const NetworkState& o) const = default;
};

// Builds a network with Glorot-uniform weights, zero biases, gamma=1, beta=0.
NetworkState make_network(std::size_t input_dim, std::vector<LayerSpec> spec, std::uint64_t seed);

// The shallow stacking network: Dense 64 / ReLU / Dropout 0.1 / Dense 32 /
// ReLU / Dropout 0.1 / Dense 1 / Sigmoid.
NetworkState make_meta_network(std::size_t input_dim, std::uint64_t seed);

// The per-backbone classification head: Dense 1024 / BatchNorm / Dropout 0.4 /
// Dense 1 / Sigmoid.
NetworkState make_head_network(std::size_t feature_dim, std::uint64_t seed);

enum class PassMode { Train, Inference };

struct ForwardTrace {
    PassMode mode = PassMode::Inference;
    std::vector<Matrix> inputs;         // one per layer; inputs[0] is the batch
    std::vector<Matrix> dropout_masks;  // per Dropout layer, already scaled by 1/(1-rate)
    std::vector<Matrix> bn_mean, bn_var, bn_xhat;  // per BatchNorm layer
    Matrix output;
};

// Runs the batch through the network. Train mode applies inverted dropout
// (drawing masks from rng unless frozen_masks is given) and batch statistics,
// updating the running stats in place. Inference mode never mutates net.
ForwardTrace forward_pass(NetworkState& net, const Matrix& batch, PassMode mode,
                          Rng* rng = nullptr,
                          const std::vector<Matrix>* frozen_masks = nullptr);

// Inference-mode forward on a const network; a pure function of (net, batch).
Matrix predict(const NetworkState& net, const Matrix& batch);

struct BceResult {
    double loss;
    Matrix grad;  // dloss/dprediction, n x 1
};

// Mean binary cross-entropy with predictions clamped to [1e-7, 1-1e-7].
BceResult bce_loss(const Matrix& predictions, const Matrix& labels);

struct Gradients {
    std::vector<Matrix> values;  // aligned with NetworkState::param_views()
};

Gradients backward_pass(const NetworkState& net, const ForwardTrace& trace,
                        const Matrix& loss_grad);

// Max relative error between analytic gradients and central finite differences
// of the BCE loss, over every learnable scalar: |analytic - numeric| divided by
// max(|analytic|, |numeric|, 1e-6). Dropout masks are frozen from mask_seed
// when mode is Train. Scalars whose +/-epsilon perturbation flips a ReLU
// activation are skipped (the loss is not differentiable across the kink).
double finite_diff_check(const NetworkState& net, const Matrix& batch,
                         const Matrix& labels, double epsilon,
                         PassMode mode = PassMode::Inference,
                         std::uint64_t mask_seed = 0);

// Weight-file round trip. JSON with a format-version field; values survive
// save -> load -> save byte-identically.
std::string network_to_json(const NetworkState& net);
NetworkState network_from_json(const std::string& text);
void save_network(const NetworkState& net, const std::string& path);
NetworkState load_network(const std::string& path);

}  // namespace mozart
