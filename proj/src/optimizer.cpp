#include "mozart/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mozart/errors.hpp"
#include "mozart/metrics.hpp"
#include "mozart/rng.hpp"
#include "mozart/textio.hpp"

namespace mozart {

AdamState AdamState::init(const NetworkState& net, AdamConfig cfg) {
    if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0 ||
        cfg.epsilon <= 0.0)
        throw std::invalid_argument("AdamState: betas must be in [0,1), epsilon > 0");
    AdamState s;
    s.cfg = cfg;
    for (const Matrix* p : net.param_views()) {
        s.m.emplace_back(p->rows, p->cols);
        s.v.emplace_back(p->rows, p->cols);
    }
    return s;
}

void adam_step(AdamState& state, std::vector<Matrix*>& params, const Gradients& grads) {
    if (params.size() != state.m.size() || grads.values.size() != state.m.size())
        throw std::invalid_argument("adam_step: parameter/gradient/moment count mismatch");

    ++state.t;
    double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.t));

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Matrix& theta = *params[pi];
        const Matrix& g = grads.values[pi];
        if (!theta.same_shape(g) || !theta.same_shape(state.m[pi]))
            throw std::invalid_argument("adam_step: shape mismatch");
        if (!g.all_finite()) throw TrainingDiverged("adam_step: non-finite gradient", state.t);

        for (std::size_t k = 0; k < theta.size(); ++k) {
            double gk = g.data[k];
            double& m = state.m[pi].data[k];
            double& v = state.v[pi].data[k];
            m = state.cfg.beta1 * m + (1.0 - state.cfg.beta1) * gk;
            v = state.cfg.beta2 * v + (1.0 - state.cfg.beta2) * gk * gk;
            double mhat = m / bc1;
            double vhat = v / bc2;
            theta.data[k] -= state.cfg.alpha * mhat / (std::sqrt(vhat) + state.cfg.epsilon);
        }
    }
}

void plateau_update(PlateauState& state, double epoch_val_loss) {
    if (!std::isfinite(epoch_val_loss))
        throw std::invalid_argument("plateau_update: non-finite validation loss");

    if (epoch_val_loss < state.best_loss - state.cfg.min_delta) {
        state.best_loss = epoch_val_loss;
        state.wait = 0;
        return;
    }
    ++state.wait;
    if (state.wait > state.cfg.patience) {
        state.current_lr = std::max(state.current_lr * state.cfg.factor, state.cfg.min_lr);
        state.wait = 0;
    }
}

void checkpoint_update(CheckpointState& state, std::size_t epoch, double val_loss,
                       const NetworkState& net) {
    if (!std::isfinite(val_loss))
        throw std::invalid_argument("checkpoint_update: non-finite validation loss");
    if (val_loss < state.best_val_loss) {
        state.best_val_loss = val_loss;
        state.best_epoch = epoch;
        state.best_weights = net;
    }
}

namespace {

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& idx, std::size_t begin,
                 std::size_t end) {
    Matrix out(end - begin, m.cols);
    for (std::size_t r = begin; r < end; ++r)
        for (std::size_t j = 0; j < m.cols; ++j) out(r - begin, j) = m(idx[r], j);
    return out;
}

struct EvalResult {
    double loss;
    MetricSet metrics;
};

EvalResult evaluate(const NetworkState& net, const Dataset& set) {
    Matrix p = predict(net, set.features);
    EvalResult r;
    r.loss = bce_loss(p, set.labels).loss;
    r.metrics = compute_metrics(confusion(set.labels, p));
    return r;
}

}  // namespace

TrainResult train(const NetworkState& initial, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config) {
    if (train_set.size() == 0 || val_set.size() == 0)
        throw std::invalid_argument("train: empty dataset");
    if (train_set.features.cols != initial.input_dim)
        throw ShapeError("train: feature width != network input dim");
    if (config.epochs == 0 || config.batch_size == 0)
        throw std::invalid_argument("train: epochs and batch_size must be >= 1");

    NetworkState net = initial;
    AdamConfig adam_cfg = config.adam;
    adam_cfg.alpha = config.initial_lr;
    AdamState adam = AdamState::init(net, adam_cfg);

    PlateauState plateau{config.plateau, config.initial_lr};
    CheckpointState checkpoint;
    TrainHistory history;
    Rng rng(config.shuffle_seed);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        adam.cfg.alpha = plateau.current_lr;
        rng.shuffle(order);

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::size_t stop = std::min(start + config.batch_size, order.size());
            Matrix xb = take_rows(train_set.features, order, start, stop);
            Matrix yb = take_rows(train_set.labels, order, start, stop);

            auto trace = forward_pass(net, xb, PassMode::Train, &rng);
            auto bce = bce_loss(trace.output, yb);
            if (!std::isfinite(bce.loss)) throw TrainingDiverged("train: non-finite loss", epoch);

            auto grads = backward_pass(net, trace, bce.grad);
            auto params = net.param_views();
            adam_step(adam, params, grads);
        }

        // Epoch metrics come from a full inference-mode re-pass so train and
        // validation numbers are directly comparable.
        EvalResult tr = evaluate(net, train_set);
        EvalResult va = evaluate(net, val_set);
        if (!std::isfinite(tr.loss) || !std::isfinite(va.loss))
            throw TrainingDiverged("train: non-finite epoch loss", epoch);

        history.epochs.push_back({epoch, plateau.current_lr, tr.loss, va.loss,
                                  tr.metrics.accuracy, va.metrics.accuracy, tr.metrics.precision,
                                  va.metrics.precision, tr.metrics.recall, va.metrics.recall});

        checkpoint_update(checkpoint, epoch, va.loss, net);
        plateau_update(plateau, va.loss);
    }

    return {std::move(checkpoint.best_weights), std::move(history)};
}

std::string history_to_table(const TrainHistory& history) {
    std::ostringstream out;
    out << "epoch,lr,train_loss,val_loss,train_acc,val_acc,train_prec,val_prec,"
           "train_rec,val_rec\n";
    for (const auto& e : history.epochs) {
        out << e.epoch << ',' << double_to_string(e.lr) << ',' << double_to_string(e.train_loss)
            << ',' << double_to_string(e.val_loss) << ',' << double_to_string(e.train_acc) << ','
            << double_to_string(e.val_acc) << ',' << double_to_string(e.train_prec) << ','
            << double_to_string(e.val_prec) << ',' << double_to_string(e.train_rec) << ','
            << double_to_string(e.val_rec) << '\n';
    }
    return out.str();
}

}  // namespace mozart
