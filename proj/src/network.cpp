#include "mozart/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mozart/errors.hpp"

namespace mozart {

namespace {

using nlohmann::json;

Matrix colsum(const Matrix& m) {
    Matrix s(1, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) s(0, j) += m(i, j);
    return s;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Output dimension of layer `kind` given its input width.
std::size_t layer_out_dim(const LayerSpec& layer, std::size_t in_dim) {
    return layer.kind == LayerKind::Dense ? layer.units : in_dim;
}

const Matrix& layer_output(const ForwardTrace& trace, std::size_t layer_idx) {
    return layer_idx + 1 < trace.inputs.size() ? trace.inputs[layer_idx + 1] : trace.output;
}

}  // namespace

std::size_t NetworkState::output_dim() const {
    std::size_t dim = input_dim;
    for (const auto& layer : spec) dim = layer_out_dim(layer, dim);
    return dim;
}

std::vector<Matrix*> NetworkState::param_views() {
    std::vector<Matrix*> out;
    std::size_t di = 0, bi = 0;
    for (const auto& layer : spec) {
        if (layer.kind == LayerKind::Dense) {
            out.push_back(&dense[di].weight);
            out.push_back(&dense[di].bias);
            ++di;
        } else if (layer.kind == LayerKind::BatchNorm) {
            out.push_back(&bnorm[bi].gamma);
            out.push_back(&bnorm[bi].beta);
            ++bi;
        }
    }
    return out;
}

std::vector<const Matrix*> NetworkState::param_views() const {
    auto mut = const_cast<NetworkState*>(this)->param_views();
    return {mut.begin(), mut.end()};
}

std::size_t NetworkState::param_count() const {
    std::size_t n = 0;
    for (const Matrix* p : param_views()) n += p->size();
    return n;
}

NetworkState make_network(std::size_t input_dim, std::vector<LayerSpec> spec, std::uint64_t seed) {
    if (input_dim == 0) throw std::invalid_argument("make_network: input_dim must be >= 1");
    NetworkState net;
    net.input_dim = input_dim;
    net.spec = std::move(spec);
    net.rng_seed = seed;

    Rng rng(seed);
    std::size_t dim = input_dim;
    for (const auto& layer : net.spec) {
        switch (layer.kind) {
            case LayerKind::Dense: {
                if (layer.units == 0) throw std::invalid_argument("Dense layer needs units >= 1");
                DenseParams p;
                p.weight = Matrix(dim, layer.units);
                p.bias = Matrix(1, layer.units);
                double limit = std::sqrt(6.0 / static_cast<double>(dim + layer.units));
                for (double& w : p.weight.data) w = rng.uniform(-limit, limit);
                net.dense.push_back(std::move(p));
                dim = layer.units;
                break;
            }
            case LayerKind::BatchNorm: {
                BatchNormParams p;
                p.gamma = Matrix(1, dim, 1.0);
                p.beta = Matrix(1, dim, 0.0);
                p.running_mean = Matrix(1, dim, 0.0);
                p.running_var = Matrix(1, dim, 1.0);
                net.bnorm.push_back(std::move(p));
                break;
            }
            case LayerKind::Dropout:
                if (layer.rate < 0.0 || layer.rate >= 1.0)
                    throw std::invalid_argument("Dropout rate must be in [0, 1)");
                break;
            case LayerKind::ReLU:
            case LayerKind::Sigmoid:
                break;
        }
    }
    return net;
}

NetworkState make_meta_network(std::size_t input_dim, std::uint64_t seed) {
    return make_network(input_dim,
                        {{LayerKind::Dense, 64},
                         {LayerKind::ReLU},
                         {LayerKind::Dropout, 0, 0.1},
                         {LayerKind::Dense, 32},
                         {LayerKind::ReLU},
                         {LayerKind::Dropout, 0, 0.1},
                         {LayerKind::Dense, 1},
                         {LayerKind::Sigmoid}},
                        seed);
}

NetworkState make_head_network(std::size_t feature_dim, std::uint64_t seed) {
    return make_network(feature_dim,
                        {{LayerKind::Dense, 1024},
                         {LayerKind::BatchNorm},
                         {LayerKind::Dropout, 0, 0.4},
                         {LayerKind::Dense, 1},
                         {LayerKind::Sigmoid}},
                        seed);
}

ForwardTrace forward_pass(NetworkState& net, const Matrix& batch, PassMode mode, Rng* rng,
                          const std::vector<Matrix>* frozen_masks) {
    if (batch.cols != net.input_dim) throw ShapeError("forward_pass: batch width != input dim");
    if (!batch.all_finite()) throw std::invalid_argument("forward_pass: non-finite input");

    ForwardTrace trace;
    trace.mode = mode;
    Matrix x = batch;
    std::size_t di = 0, bi = 0, mi = 0;

    for (const auto& layer : net.spec) {
        trace.inputs.push_back(x);
        switch (layer.kind) {
            case LayerKind::Dense: {
                const auto& p = net.dense[di++];
                Matrix y = matmul(x, p.weight);
                for (std::size_t i = 0; i < y.rows; ++i)
                    for (std::size_t j = 0; j < y.cols; ++j) y(i, j) += p.bias(0, j);
                x = std::move(y);
                break;
            }
            case LayerKind::ReLU:
                for (double& v : x.data) v = v > 0.0 ? v : 0.0;
                break;
            case LayerKind::Sigmoid:
                for (double& v : x.data) v = sigmoid(v);
                break;
            case LayerKind::Dropout: {
                Matrix mask(x.rows, x.cols, 1.0);
                if (mode == PassMode::Train && layer.rate > 0.0) {
                    if (frozen_masks) {
                        mask = (*frozen_masks)[mi];
                        if (!mask.same_shape(x))
                            throw std::invalid_argument("forward_pass: frozen mask shape mismatch");
                    } else {
                        if (!rng)
                            throw std::invalid_argument(
                                "forward_pass: train-mode dropout needs an rng stream");
                        double keep_scale = 1.0 / (1.0 - layer.rate);
                        for (double& v : mask.data)
                            v = rng->uniform() < layer.rate ? 0.0 : keep_scale;
                    }
                    for (std::size_t k = 0; k < x.size(); ++k) x.data[k] *= mask.data[k];
                }
                trace.dropout_masks.push_back(std::move(mask));
                ++mi;
                break;
            }
            case LayerKind::BatchNorm: {
                auto& p = net.bnorm[bi++];
                std::size_t n = x.rows, f = x.cols;
                Matrix mean(1, f), var(1, f);
                if (mode == PassMode::Train) {
                    for (std::size_t j = 0; j < f; ++j) {
                        double mu = 0.0;
                        for (std::size_t i = 0; i < n; ++i) mu += x(i, j);
                        mu /= static_cast<double>(n);
                        double v = 0.0;
                        for (std::size_t i = 0; i < n; ++i) {
                            double d = x(i, j) - mu;
                            v += d * d;
                        }
                        v /= static_cast<double>(n);
                        mean(0, j) = mu;
                        var(0, j) = v;
                        p.running_mean(0, j) =
                            net.bn_momentum * p.running_mean(0, j) + (1.0 - net.bn_momentum) * mu;
                        p.running_var(0, j) =
                            net.bn_momentum * p.running_var(0, j) + (1.0 - net.bn_momentum) * v;
                    }
                } else {
                    mean = p.running_mean;
                    var = p.running_var;
                }
                Matrix xhat(n, f);
                for (std::size_t j = 0; j < f; ++j) {
                    double inv_std = 1.0 / std::sqrt(var(0, j) + kBnEpsilon);
                    for (std::size_t i = 0; i < n; ++i) {
                        xhat(i, j) = (x(i, j) - mean(0, j)) * inv_std;
                        x(i, j) = p.gamma(0, j) * xhat(i, j) + p.beta(0, j);
                    }
                }
                trace.bn_mean.push_back(std::move(mean));
                trace.bn_var.push_back(std::move(var));
                trace.bn_xhat.push_back(std::move(xhat));
                break;
            }
        }
    }
    trace.output = std::move(x);
    return trace;
}

Matrix predict(const NetworkState& net, const Matrix& batch) {
    // Inference mode never touches running stats, so the cast is safe.
    auto& mut = const_cast<NetworkState&>(net);
    return forward_pass(mut, batch, PassMode::Inference).output;
}

BceResult bce_loss(const Matrix& predictions, const Matrix& labels) {
    if (!predictions.same_shape(labels) || predictions.cols != 1)
        throw ShapeError("bce_loss: predictions/labels must both be n x 1");
    if (predictions.rows == 0) throw std::invalid_argument("bce_loss: empty batch");

    constexpr double kClamp = 1e-7;
    std::size_t n = predictions.rows;
    BceResult r{0.0, Matrix(n, 1)};
    for (std::size_t i = 0; i < n; ++i) {
        double y = labels(i, 0);
        if (y != 0.0 && y != 1.0)
            throw std::invalid_argument("bce_loss: labels must be 0 or 1");
        double p = std::clamp(predictions(i, 0), kClamp, 1.0 - kClamp);
        r.loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        r.grad(i, 0) = (p - y) / (p * (1.0 - p) * static_cast<double>(n));
    }
    r.loss /= static_cast<double>(n);
    return r;
}

Gradients backward_pass(const NetworkState& net, const ForwardTrace& trace,
                        const Matrix& loss_grad) {
    if (trace.inputs.size() != net.spec.size())
        throw std::invalid_argument("backward_pass: trace does not match network");
    if (!loss_grad.same_shape(trace.output))
        throw ShapeError("backward_pass: loss gradient shape mismatch");

    Gradients grads;
    grads.values.resize(net.param_views().size());

    // Per-layer parameter slot offsets in param_views order.
    std::vector<std::size_t> slot(net.spec.size(), 0);
    std::size_t next = 0;
    for (std::size_t i = 0; i < net.spec.size(); ++i) {
        slot[i] = next;
        if (net.spec[i].kind == LayerKind::Dense || net.spec[i].kind == LayerKind::BatchNorm)
            next += 2;
    }

    std::size_t di = net.dense.size(), bi = net.bnorm.size(), mi = trace.dropout_masks.size();
    Matrix g = loss_grad;

    for (std::size_t li = net.spec.size(); li-- > 0;) {
        const auto& layer = net.spec[li];
        const Matrix& x = trace.inputs[li];
        switch (layer.kind) {
            case LayerKind::Dense: {
                const auto& p = net.dense[--di];
                grads.values[slot[li]] = matmul_at(x, g);
                grads.values[slot[li] + 1] = colsum(g);
                g = matmul_bt(g, p.weight);
                break;
            }
            case LayerKind::ReLU:
                for (std::size_t k = 0; k < g.size(); ++k)
                    if (x.data[k] <= 0.0) g.data[k] = 0.0;
                break;
            case LayerKind::Sigmoid: {
                const Matrix& y = layer_output(trace, li);
                for (std::size_t k = 0; k < g.size(); ++k)
                    g.data[k] *= y.data[k] * (1.0 - y.data[k]);
                break;
            }
            case LayerKind::Dropout: {
                const Matrix& mask = trace.dropout_masks[--mi];
                if (trace.mode == PassMode::Train && layer.rate > 0.0)
                    for (std::size_t k = 0; k < g.size(); ++k) g.data[k] *= mask.data[k];
                break;
            }
            case LayerKind::BatchNorm: {
                const auto& p = net.bnorm[--bi];
                const Matrix& xhat = trace.bn_xhat[bi];
                const Matrix& var = trace.bn_var[bi];
                std::size_t n = g.rows, f = g.cols;

                Matrix dgamma(1, f), dbeta(1, f);
                for (std::size_t j = 0; j < f; ++j)
                    for (std::size_t i = 0; i < n; ++i) {
                        dgamma(0, j) += g(i, j) * xhat(i, j);
                        dbeta(0, j) += g(i, j);
                    }
                grads.values[slot[li]] = dgamma;
                grads.values[slot[li] + 1] = dbeta;

                Matrix dx(n, f);
                for (std::size_t j = 0; j < f; ++j) {
                    double inv_std = 1.0 / std::sqrt(var(0, j) + kBnEpsilon);
                    double gam = p.gamma(0, j);
                    if (trace.mode == PassMode::Train) {
                        // Batch statistics depend on x, hence the coupling terms.
                        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                        for (std::size_t i = 0; i < n; ++i) {
                            double dxh = g(i, j) * gam;
                            sum_dxhat += dxh;
                            sum_dxhat_xhat += dxh * xhat(i, j);
                        }
                        double nn = static_cast<double>(n);
                        for (std::size_t i = 0; i < n; ++i) {
                            double dxh = g(i, j) * gam;
                            dx(i, j) = inv_std / nn *
                                       (nn * dxh - sum_dxhat - xhat(i, j) * sum_dxhat_xhat);
                        }
                    } else {
                        for (std::size_t i = 0; i < n; ++i) dx(i, j) = g(i, j) * gam * inv_std;
                    }
                }
                g = std::move(dx);
                break;
            }
        }
    }
    return grads;
}

namespace {

// Loss-only forward used by the finite-difference oracle: no trace storage, no
// running-stat updates, dropout always from frozen masks. Also records the
// sign pattern at every ReLU input so kink crossings can be detected.
double light_loss(const NetworkState& net, const Matrix& batch, const Matrix& labels,
                  PassMode mode, const std::vector<Matrix>& masks,
                  std::vector<bool>* relu_pattern) {
    if (relu_pattern) relu_pattern->clear();
    Matrix x = batch;
    std::size_t di = 0, bi = 0, mi = 0;
    for (const auto& layer : net.spec) {
        switch (layer.kind) {
            case LayerKind::Dense: {
                const auto& p = net.dense[di++];
                Matrix y = matmul(x, p.weight);
                for (std::size_t i = 0; i < y.rows; ++i)
                    for (std::size_t j = 0; j < y.cols; ++j) y(i, j) += p.bias(0, j);
                x = std::move(y);
                break;
            }
            case LayerKind::ReLU:
                for (double& v : x.data) {
                    if (relu_pattern) relu_pattern->push_back(v > 0.0);
                    v = v > 0.0 ? v : 0.0;
                }
                break;
            case LayerKind::Sigmoid:
                for (double& v : x.data) v = sigmoid(v);
                break;
            case LayerKind::Dropout:
                if (mode == PassMode::Train && layer.rate > 0.0)
                    for (std::size_t k = 0; k < x.size(); ++k) x.data[k] *= masks[mi].data[k];
                ++mi;
                break;
            case LayerKind::BatchNorm: {
                const auto& p = net.bnorm[bi++];
                std::size_t n = x.rows, f = x.cols;
                for (std::size_t j = 0; j < f; ++j) {
                    double mu, var;
                    if (mode == PassMode::Train) {
                        mu = 0.0;
                        for (std::size_t i = 0; i < n; ++i) mu += x(i, j);
                        mu /= static_cast<double>(n);
                        var = 0.0;
                        for (std::size_t i = 0; i < n; ++i) {
                            double d = x(i, j) - mu;
                            var += d * d;
                        }
                        var /= static_cast<double>(n);
                    } else {
                        mu = p.running_mean(0, j);
                        var = p.running_var(0, j);
                    }
                    double inv_std = 1.0 / std::sqrt(var + kBnEpsilon);
                    for (std::size_t i = 0; i < n; ++i)
                        x(i, j) = p.gamma(0, j) * ((x(i, j) - mu) * inv_std) + p.beta(0, j);
                }
                break;
            }
        }
    }
    return bce_loss(x, labels).loss;
}

}  // namespace

double finite_diff_check(const NetworkState& net, const Matrix& batch, const Matrix& labels,
                         double epsilon, PassMode mode, std::uint64_t mask_seed) {
    if (epsilon <= 0.0) throw std::invalid_argument("finite_diff_check: epsilon must be > 0");

    NetworkState work = net;

    // Freeze dropout masks so the loss is a deterministic function of theta.
    std::vector<Matrix> masks;
    const std::vector<Matrix>* frozen = nullptr;
    if (mode == PassMode::Train) {
        Rng mask_rng(mask_seed);
        NetworkState scratch = net;
        masks = forward_pass(scratch, batch, PassMode::Train, &mask_rng).dropout_masks;
        frozen = &masks;
    }

    auto trace = forward_pass(work, batch, mode, nullptr, frozen);
    auto bce = bce_loss(trace.output, labels);
    auto analytic = backward_pass(work, trace, bce.grad);

    double max_rel = 0.0;
    std::vector<bool> pat_plus, pat_minus;
    auto params = work.param_views();
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        for (std::size_t k = 0; k < params[pi]->size(); ++k) {
            double saved = params[pi]->data[k];
            params[pi]->data[k] = saved + epsilon;
            double lp = light_loss(work, batch, labels, mode, masks, &pat_plus);
            params[pi]->data[k] = saved - epsilon;
            double lm = light_loss(work, batch, labels, mode, masks, &pat_minus);
            params[pi]->data[k] = saved;

            // A ReLU activation flipping between theta-eps and theta+eps means
            // the loss is not differentiable on that interval; the central
            // difference is meaningless there, so the scalar is skipped.
            if (pat_plus != pat_minus) continue;

            double numeric = (lp - lm) / (2.0 * epsilon);
            double a = analytic.values[pi].data[k];
            // Denominator floored at 1e-6: parameters the loss provably cannot
            // see (e.g. a Dense bias feeding train-mode BatchNorm) leave both
            // sides at pure roundoff, which must not read as 100% error.
            double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

// --- serialization ---------------------------------------------------------

namespace {

constexpr int kFormatVersion = 1;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols)
        throw ValidationError("weight file: matrix data length mismatch");
    return m;
}

std::string kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Dense: return "dense";
        case LayerKind::ReLU: return "relu";
        case LayerKind::Sigmoid: return "sigmoid";
        case LayerKind::Dropout: return "dropout";
        case LayerKind::BatchNorm: return "batchnorm";
    }
    return "?";
}

LayerKind kind_from_name(const std::string& s) {
    if (s == "dense") return LayerKind::Dense;
    if (s == "relu") return LayerKind::ReLU;
    if (s == "sigmoid") return LayerKind::Sigmoid;
    if (s == "dropout") return LayerKind::Dropout;
    if (s == "batchnorm") return LayerKind::BatchNorm;
    throw ValidationError("weight file: unknown layer kind '" + s + "'");
}

}  // namespace

std::string network_to_json(const NetworkState& net) {
    json layers = json::array();
    std::size_t di = 0, bi = 0;
    for (const auto& layer : net.spec) {
        json l{{"kind", kind_name(layer.kind)}};
        if (layer.kind == LayerKind::Dense) {
            l["units"] = layer.units;
            l["weight"] = matrix_to_json(net.dense[di].weight);
            l["bias"] = matrix_to_json(net.dense[di].bias);
            ++di;
        } else if (layer.kind == LayerKind::Dropout) {
            l["rate"] = layer.rate;
        } else if (layer.kind == LayerKind::BatchNorm) {
            l["gamma"] = matrix_to_json(net.bnorm[bi].gamma);
            l["beta"] = matrix_to_json(net.bnorm[bi].beta);
            l["running_mean"] = matrix_to_json(net.bnorm[bi].running_mean);
            l["running_var"] = matrix_to_json(net.bnorm[bi].running_var);
            ++bi;
        }
        layers.push_back(std::move(l));
    }
    json doc{{"format_version", kFormatVersion},
             {"input_dim", net.input_dim},
             {"bn_momentum", net.bn_momentum},
             {"rng_seed", net.rng_seed},
             {"layers", layers}};
    return doc.dump(2) + "\n";
}

NetworkState network_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("weight file: ") + e.what(), 1);
    }
    if (doc.at("format_version").get<int>() != kFormatVersion)
        throw ValidationError("weight file: unsupported format version");

    NetworkState net;
    net.input_dim = doc.at("input_dim").get<std::size_t>();
    net.bn_momentum = doc.at("bn_momentum").get<double>();
    net.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    for (const auto& l : doc.at("layers")) {
        LayerSpec spec{kind_from_name(l.at("kind").get<std::string>())};
        if (spec.kind == LayerKind::Dense) {
            spec.units = l.at("units").get<std::size_t>();
            net.dense.push_back({matrix_from_json(l.at("weight")), matrix_from_json(l.at("bias"))});
        } else if (spec.kind == LayerKind::Dropout) {
            spec.rate = l.at("rate").get<double>();
        } else if (spec.kind == LayerKind::BatchNorm) {
            net.bnorm.push_back({matrix_from_json(l.at("gamma")), matrix_from_json(l.at("beta")),
                                 matrix_from_json(l.at("running_mean")),
                                 matrix_from_json(l.at("running_var"))});
        }
        net.spec.push_back(spec);
    }
    return net;
}

void save_network(const NetworkState& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open weight file for writing: " + path);
    out << network_to_json(net);
}

NetworkState load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open weight file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return network_from_json(ss.str());
}

}  // namespace mozart
