#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mozart/errors.hpp"
#include "mozart/network.hpp"
#include "mozart/optimizer.hpp"
#include "mozart/rng.hpp"

using namespace mozart;

namespace {

// One-parameter "network" stand-in for the optimizer tests.
NetworkState single_param_net(double w) {
    auto net = make_network(1, {{LayerKind::Dense, 1}}, 0);
    net.dense[0].weight(0, 0) = w;
    return net;
}

}  // namespace

TEST_CASE("adam zero gradient leaves parameters untouched") {
    auto net = make_meta_network(2, 3);
    auto before = net;
    auto adam = AdamState::init(net);
    Gradients zero;
    for (const Matrix* p : net.param_views()) zero.values.emplace_back(p->rows, p->cols);
    auto params = net.param_views();
    adam_step(adam, params, zero);
    CHECK(adam.t == 1);
    CHECK(net == before);
}

TEST_CASE("adam first step hand evaluation") {
    auto net = single_param_net(1.0);
    AdamConfig cfg;  // alpha 1e-4, defaults
    auto adam = AdamState::init(net, cfg);
    Gradients g;
    for (const Matrix* p : net.param_views()) g.values.emplace_back(p->rows, p->cols);
    g.values[0](0, 0) = 1.0;

    auto params = net.param_views();
    adam_step(adam, params, g);
    // m=0.1/0.1=1 after bias correction, v likewise, so step = alpha/(1+eps)
    double expected = 1.0 - 1e-4 * (1.0 / (1.0 + 1e-8));
    CHECK(net.dense[0].weight(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(net.dense[0].weight(0, 0) == doctest::Approx(0.9999).epsilon(1e-6));
}

TEST_CASE("adam purity: identical tensors, identical updates") {
    auto net = make_network(2, {{LayerKind::Dense, 2}}, 5);
    net.dense[0].weight = Matrix::from_rows({{0.3, 0.3}, {-0.2, -0.2}});
    auto adam = AdamState::init(net);
    Gradients g;
    g.values.emplace_back(Matrix::from_rows({{0.7, 0.7}, {0.1, 0.1}}));
    g.values.emplace_back(Matrix(1, 2, 0.5));
    auto params = net.param_views();
    adam_step(adam, params, g);
    CHECK(net.dense[0].weight(0, 0) == net.dense[0].weight(0, 1));
    CHECK(net.dense[0].weight(1, 0) == net.dense[0].weight(1, 1));
}

TEST_CASE("adam update magnitude stays bounded") {
    Rng rng(17);
    auto net = make_meta_network(3, 9);
    AdamConfig cfg;
    cfg.alpha = 1e-3;
    auto adam = AdamState::init(net, cfg);
    for (int step = 0; step < 50; ++step) {
        auto params = net.param_views();
        auto before = net;
        Gradients g;
        for (const Matrix* p : params) {
            Matrix gm(p->rows, p->cols);
            for (double& v : gm.data) v = rng.normal();
            g.values.push_back(std::move(gm));
        }
        adam_step(adam, params, g);
        auto after_views = net.param_views();
        auto before_views = before.param_views();
        for (std::size_t pi = 0; pi < after_views.size(); ++pi)
            for (std::size_t k = 0; k < after_views[pi]->size(); ++k)
                CHECK(std::abs(after_views[pi]->data[k] - before_views[pi]->data[k]) <=
                      3.0 * cfg.alpha);
    }
}

TEST_CASE("adam rejects non-finite gradients") {
    auto net = single_param_net(1.0);
    auto adam = AdamState::init(net);
    Gradients g;
    g.values.emplace_back(Matrix(1, 1, std::nan("")));
    g.values.emplace_back(Matrix(1, 1, 0.0));
    auto params = net.param_views();
    CHECK_THROWS_AS(adam_step(adam, params, g), TrainingDiverged);
}

TEST_CASE("plateau scheduler") {
    SUBCASE("monotone improvement never reduces") {
        PlateauState s{{}, 1e-4};
        for (double loss : {0.5, 0.4, 0.3}) plateau_update(s, loss);
        CHECK(s.current_lr == 1e-4);
    }
    SUBCASE("six stalls trigger the 1e-4 -> 2e-5 drop") {
        PlateauState s{{}, 1e-4};
        plateau_update(s, 0.5);
        for (int i = 0; i < 5; ++i) {
            plateau_update(s, 0.6);
            CHECK(s.current_lr == 1e-4);
        }
        plateau_update(s, 0.6);
        CHECK(s.current_lr == doctest::Approx(2e-5).epsilon(1e-12));
    }
    SUBCASE("second trigger compounds: 1e-4 -> 2e-5 -> 4e-6") {
        PlateauState s{{}, 1e-4};
        s.cfg.min_lr = 1e-6;
        plateau_update(s, 0.5);
        for (int i = 0; i < 12; ++i) plateau_update(s, 0.6);
        CHECK(s.current_lr == doctest::Approx(4e-6).epsilon(1e-12));
    }
    SUBCASE("floor at min_lr, rate never increases") {
        PlateauState s{{}, 1e-4};
        s.cfg.min_lr = 1e-6;
        double prev = s.current_lr;
        plateau_update(s, 0.5);
        for (int i = 0; i < 100; ++i) {
            plateau_update(s, 0.6);
            CHECK(s.current_lr <= prev);
            CHECK(s.current_lr >= s.cfg.min_lr);
            prev = s.current_lr;
        }
        CHECK(s.current_lr == 1e-6);
    }
}

TEST_CASE("checkpoint keeps the best and earliest") {
    auto net = single_param_net(1.0);
    SUBCASE("argmin of the loss sequence") {
        CheckpointState s;
        double losses[] = {0.3, 0.2, 0.25};
        for (std::size_t e = 0; e < 3; ++e) checkpoint_update(s, e + 1, losses[e], net);
        CHECK(s.best_epoch == 2);
        CHECK(s.best_val_loss == 0.2);
    }
    SUBCASE("tie keeps the earlier epoch") {
        CheckpointState s;
        checkpoint_update(s, 1, 0.2, net);
        checkpoint_update(s, 2, 0.2, net);
        CHECK(s.best_epoch == 1);
    }
    SUBCASE("snapshot matches the best epoch's weights") {
        CheckpointState s;
        auto worse = single_param_net(5.0);
        checkpoint_update(s, 1, 0.4, worse);
        checkpoint_update(s, 2, 0.1, net);
        checkpoint_update(s, 3, 0.3, worse);
        CHECK(s.best_weights == net);
    }
}

TEST_CASE("training solves a separable problem") {
    // 0 hidden layers: a single logistic unit.
    auto net = make_network(1, {{LayerKind::Dense, 1}, {LayerKind::Sigmoid}}, 3);
    Dataset data{Matrix::from_rows({{-1.0}, {1.0}}), Matrix::from_rows({{0.0}, {1.0}})};
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 2;
    cfg.initial_lr = 0.05;
    auto result = train(net, data, data, cfg);
    CHECK(result.history.epochs.size() == 200);
    CHECK(result.history.epochs.back().train_acc == 1.0);
}

TEST_CASE("training is deterministic in (seed, config, data)") {
    Rng rng(41);
    Dataset tr, va;
    tr.features = Matrix(40, 3);
    tr.labels = Matrix(40, 1);
    for (double& v : tr.features.data) v = rng.uniform();
    for (std::size_t i = 0; i < 40; ++i) tr.labels(i, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    va = tr;

    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.batch_size = 8;
    cfg.initial_lr = 1e-3;
    cfg.shuffle_seed = 5;

    auto net = make_meta_network(3, 10);
    auto a = train(net, tr, va, cfg);
    auto b = train(net, tr, va, cfg);
    CHECK(network_to_json(a.best) == network_to_json(b.best));
    CHECK(history_to_table(a.history) == history_to_table(b.history));

    // learning rate is non-increasing across the run
    for (std::size_t e = 1; e < a.history.epochs.size(); ++e)
        CHECK(a.history.epochs[e].lr <= a.history.epochs[e - 1].lr);
}

TEST_CASE("training returns checkpointed weights whose loss is reproducible") {
    Rng rng(42);
    Dataset tr, va;
    tr.features = Matrix(60, 2);
    tr.labels = Matrix(60, 1);
    for (std::size_t i = 0; i < 60; ++i) {
        double cls = rng.bernoulli(0.5) ? 1.0 : 0.0;
        tr.features(i, 0) = rng.normal() + (cls > 0.5 ? 0.8 : -0.8);
        tr.features(i, 1) = rng.normal();
        tr.labels(i, 0) = cls;
    }
    va.features = tr.features;
    va.labels = tr.labels;

    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.initial_lr = 5e-3;
    auto net = make_meta_network(2, 6);
    auto result = train(net, tr, va, cfg);

    double best = result.history.epochs[0].val_loss;
    for (const auto& e : result.history.epochs) best = std::min(best, e.val_loss);
    double reeval = bce_loss(predict(result.best, va.features), va.labels).loss;
    CHECK(std::abs(reeval - best) < 1e-12);
}

TEST_CASE("history table format") {
    TrainHistory h;
    h.epochs.push_back({1, 1e-4, 0.5, 0.6, 0.9, 0.8, 0.91, 0.81, 0.92, 0.82});
    auto table = history_to_table(h);
    CHECK(table.rfind("epoch,lr,train_loss,val_loss,train_acc,val_acc,train_prec,"
                      "val_prec,train_rec,val_rec\n",
                      0) == 0);
    CHECK(table.find("1,1e-04,0.5,0.6,0.9,0.8,0.91,0.81,0.92,0.82\n") != std::string::npos);
}
