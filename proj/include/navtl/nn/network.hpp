#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "navtl/core/error.hpp"
#include "navtl/nn/kernels.hpp"
#include "navtl/nn/network_spec.hpp"
#include "navtl/nn/tensor.hpp"

namespace navtl::nn {

struct OptimizerConfig {
    enum class Kind { adam, sgd };
    Kind kind = Kind::adam;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

/// Weight matrix (rows x cols) and bias (cols) of one layer. Both are empty
/// for layers without parameters.
struct LayerParams {
    Tensor weight;
    Tensor bias;

    bool empty() const noexcept { return weight.empty(); }
};

/// Activations kept from a forward pass for backpropagation.
struct ForwardCache {
    std::size_t batch = 0;
    std::vector<Tensor> inputs;                     // input activation of each layer
    std::vector<std::vector<float>> cols;           // im2col matrices (conv layers)
    std::vector<std::vector<std::uint32_t>> argmax; // maxpool winners
    Tensor value;                                   // value stream output (dueling)
    Tensor advantage;                               // advantage stream output (dueling)
};

struct Gradients {
    std::vector<LayerParams> layers;  // empty entries for non-trainable / parameterless layers
    Tensor input;                     // d loss / d input, when requested
};

struct TrainStepResult {
    float loss = 0.0f;
    std::vector<float> td_errors;  // target - prediction, per sample
};

/// Huber loss with delta = 1.
inline float huber(float x) {
    const float a = std::fabs(x);
    return a <= 1.0f ? 0.5f * x * x : a - 0.5f;
}
inline float huber_grad(float x) { return std::clamp(x, -1.0f, 1.0f); }

/// Behaviour or target Q-network: weights for a NetworkSpec, per-layer
/// freeze flags, and Adam moment buffers for the trainable layers.
class Network {
public:
    explicit Network(NetworkSpec spec, std::uint64_t seed = 0, OptimizerConfig opt = {})
        : spec_(std::move(spec)), layout_(analyze(spec_)), opt_(opt) {
        params_.resize(spec_.layers.size());
        std::mt19937_64 rng(seed);
        for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
            const auto& l = spec_.layers[i];
            if (!l.has_weights()) continue;
            const auto& li = layout_.info[i];
            auto& p = params_[i];
            p.weight = Tensor({li.weight_rows, li.weight_cols});
            p.bias = Tensor({li.weight_cols});
            // He-uniform for conv, Xavier-uniform for dense; zero bias.
            const double limit = l.kind == LayerKind::conv2d
                                     ? std::sqrt(6.0 / double(li.weight_rows))
                                     : std::sqrt(6.0 / double(li.weight_rows + li.weight_cols));
            std::uniform_real_distribution<float> dist(float(-limit), float(limit));
            for (auto& w : p.weight.values()) w = dist(rng);
        }
        reset_optimizer();
    }

    const NetworkSpec& spec() const noexcept { return spec_; }
    const SpecLayout& layout() const noexcept { return layout_; }
    std::size_t action_count() const noexcept { return layout_.action_count; }
    Shape3 input_shape() const noexcept { return spec_.input; }
    std::uint64_t digest() const { return spec_digest(spec_); }

    std::vector<LayerParams>& params() noexcept { return params_; }
    const std::vector<LayerParams>& params() const noexcept { return params_; }

    TrainType train_type() const noexcept { return train_type_; }

    /// Re-marks layers trainable according to `tt` and clears optimizer state.
    void set_train_type(TrainType tt) {
        apply_train_type(spec_, tt);
        train_type_ = tt;
        reset_optimizer();
    }

    void set_optimizer(OptimizerConfig opt) {
        opt_ = opt;
        reset_optimizer();
    }

    /// Copies every weight bit-for-bit from a network built from the same spec.
    void copy_weights_from(const Network& other) {
        if (other.digest() != digest()) throw ShapeError("cannot copy weights between different network specs");
        for (std::size_t i = 0; i < params_.size(); ++i) params_[i] = other.params_[i];
    }

    // ------------------------------------------------------------------ forward

    Tensor forward(const Tensor& batch) const {
        ForwardCache cache;
        return run_forward(batch, cache, false);
    }

    Tensor forward(const Tensor& batch, ForwardCache& cache) const { return run_forward(batch, cache, true); }

    /// Q-values for a single observation laid out as H x W x C.
    std::vector<float> q_values(std::span<const float> observation) const {
        const Shape3 in = spec_.input;
        if (observation.size() != in.size())
            throw ShapeError("observation has " + std::to_string(observation.size()) + " values, network expects " +
                             std::to_string(in.size()));
        Tensor x({1, in.h, in.w, in.c}, std::vector<float>(observation.begin(), observation.end()));
        return forward(x).values();
    }

    // ----------------------------------------------------------------- backward

    /// Backpropagates d loss / d Q. Parameter gradients are produced for
    /// trainable layers only; propagation stops below the lowest trainable
    /// layer unless `input_grad` is requested.
    Gradients backward(const ForwardCache& cache, const Tensor& dq, bool input_grad = false) const {
        const std::size_t B = cache.batch;
        const std::size_t A = layout_.action_count;
        if (dq.size() != B * A) throw ShapeError("dQ shape does not match the forward batch");
        Gradients g;
        g.layers.resize(params_.size());

        if (!layout_.dueling) {
            Tensor d = dq;
            g.input = backprop_range(cache, 0, layout_.trunk_end, std::move(d), g, input_grad);
            return g;
        }

        Tensor dv({B, 1}), da({B, A});
        kernels::dueling_backward(dq.span(), B, A, dv.span(), da.span());
        const std::size_t half = layout_.info[layout_.split_index].out.c;
        const bool below = input_grad || trunk_has_trainable();
        Tensor dhv = backprop_range(cache, layout_.value_begin, layout_.value_end, std::move(dv), g, below);
        Tensor dha = backprop_range(cache, layout_.adv_begin, layout_.adv_end, std::move(da), g, below);
        if (!below) return g;
        Tensor dsplit({B, 2 * half});
        kernels::split_backward(dhv.span(), dha.span(), B, half, dsplit.span());
        g.input = backprop_range(cache, 0, layout_.trunk_end, std::move(dsplit), g, input_grad);
        return g;
    }

    /// One optimizer step on the importance-weighted Huber TD loss
    ///   L = (1/B) * sum_k w_k * huber(y_k - Q(s_k, a_k)).
    /// Frozen layers are left untouched. Throws DivergenceError (with the
    /// optimizer step count) on a non-finite loss, before any weight changes.
    TrainStepResult train_step(const Tensor& batch, std::span<const float> targets, std::span<const std::size_t> actions,
                               std::span<const float> is_weights, float lr) {
        ForwardCache cache;
        Tensor q = forward(batch, cache);
        const std::size_t B = cache.batch;
        const std::size_t A = layout_.action_count;
        if (targets.size() != B || actions.size() != B || is_weights.size() != B)
            throw ShapeError("targets, actions and is_weights must have one entry per sample");
        if (!(lr >= 0.0f)) throw ConfigError("learning rate must be non-negative");

        TrainStepResult res;
        res.td_errors.resize(B);
        Tensor dq({B, A});
        double loss = 0.0;
        for (std::size_t k = 0; k < B; ++k) {
            if (actions[k] >= A) throw ShapeError("action index out of range");
            const float td = targets[k] - q[k * A + actions[k]];
            res.td_errors[k] = td;
            loss += double(is_weights[k]) * double(huber(td));
            dq[k * A + actions[k]] = -is_weights[k] * huber_grad(td) / float(B);
        }
        res.loss = float(loss / double(B));
        if (!std::isfinite(res.loss)) throw DivergenceError(steps_, "non-finite training loss");

        Gradients g = backward(cache, dq);
        apply_gradients(g, lr);
        return res;
    }

    void apply_gradients(const Gradients& g, float lr) {
        ++steps_;
        const float b1 = opt_.beta1, b2 = opt_.beta2;
        const float c1 = 1.0f - std::pow(b1, float(steps_));
        const float c2 = 1.0f - std::pow(b2, float(steps_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (!spec_.layers[i].trainable || params_[i].empty() || g.layers[i].empty()) continue;
            auto update = [&](Tensor& w, const Tensor& dw, std::vector<float>& m, std::vector<float>& v) {
                if (opt_.kind == OptimizerConfig::Kind::sgd) {
                    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * dw[k];
                    return;
                }
                for (std::size_t k = 0; k < w.size(); ++k) {
                    m[k] = b1 * m[k] + (1.0f - b1) * dw[k];
                    v[k] = b2 * v[k] + (1.0f - b2) * dw[k] * dw[k];
                    w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + opt_.eps);
                }
            };
            update(params_[i].weight, g.layers[i].weight, moments_[i].mw, moments_[i].vw);
            update(params_[i].bias, g.layers[i].bias, moments_[i].mb, moments_[i].vb);
        }
    }

    std::uint64_t optimizer_steps() const noexcept { return steps_; }

private:
    struct Moments {
        std::vector<float> mw, vw, mb, vb;
    };

    void reset_optimizer() {
        steps_ = 0;
        moments_.assign(params_.size(), {});
        if (opt_.kind != OptimizerConfig::Kind::adam) return;
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (!spec_.layers[i].trainable || params_[i].empty()) continue;
            moments_[i].mw.assign(params_[i].weight.size(), 0.0f);
            moments_[i].vw.assign(params_[i].weight.size(), 0.0f);
            moments_[i].mb.assign(params_[i].bias.size(), 0.0f);
            moments_[i].vb.assign(params_[i].bias.size(), 0.0f);
        }
    }

    bool trainable_weighted(std::size_t i) const {
        return spec_.layers[i].has_weights() && spec_.layers[i].trainable;
    }

    bool trunk_has_trainable() const {
        for (std::size_t i = 0; i < layout_.trunk_end; ++i)
            if (trainable_weighted(i)) return true;
        return false;
    }

    kernels::ConvGeom geom(std::size_t i) const {
        const auto& l = spec_.layers[i];
        return {layout_.info[i].in, layout_.info[i].out, l.kernel, l.stride, l.padding};
    }

    Tensor apply_layer(std::size_t i, const Tensor& x, std::size_t B, ForwardCache& cache, bool keep) const {
        const auto& l = spec_.layers[i];
        const auto& li = layout_.info[i];
        Tensor y({B, li.out.h, li.out.w, li.out.c});
        switch (l.kind) {
            case LayerKind::conv2d: {
                std::vector<float> scratch;
                std::vector<float>& cols = keep ? cache.cols[i] : scratch;
                kernels::conv2d_forward(x.span(), B, geom(i), params_[i].weight.span(), params_[i].bias.span(),
                                        y.span(), cols);
                break;
            }
            case LayerKind::maxpool2d: {
                std::vector<std::uint32_t> scratch;
                kernels::maxpool_forward(x.span(), B, geom(i), y.span(), keep ? cache.argmax[i] : scratch);
                break;
            }
            case LayerKind::relu:
                kernels::relu_forward(x.span(), y.span());
                break;
            case LayerKind::flatten:
                std::copy(x.values().begin(), x.values().end(), y.values().begin());
                break;
            case LayerKind::dense:
                kernels::dense_forward(x.span(), B, l.fan_in, l.fan_out, params_[i].weight.span(),
                                       params_[i].bias.span(), y.span());
                break;
            default:
                throw ShapeError("layer " + l.name + " cannot be applied sequentially");
        }
        return y;
    }

    Tensor run_range(std::size_t begin, std::size_t end, Tensor x, std::size_t B, ForwardCache& cache,
                     bool keep) const {
        for (std::size_t i = begin; i < end; ++i) {
            Tensor y = apply_layer(i, x, B, cache, keep);
            if (keep) cache.inputs[i] = std::move(x);
            x = std::move(y);
        }
        return x;
    }

    Tensor run_forward(const Tensor& batch, ForwardCache& cache, bool keep) const {
        const Shape3 in = spec_.input;
        if (batch.rank() != 4 || batch.dim(1) != in.h || batch.dim(2) != in.w || batch.dim(3) != in.c)
            throw ShapeError("input batch " + shape_str(batch.shape()) + " does not match network input (B," +
                             std::to_string(in.h) + "," + std::to_string(in.w) + "," + std::to_string(in.c) + ")");
        const std::size_t B = batch.dim(0);
        cache.batch = B;
        if (keep) {
            cache.inputs.assign(spec_.layers.size(), {});
            cache.cols.assign(spec_.layers.size(), {});
            cache.argmax.assign(spec_.layers.size(), {});
        }
        Tensor x = run_range(0, layout_.trunk_end, batch, B, cache, keep);
        if (!layout_.dueling) {
            x.reshape({B, layout_.action_count});
            return x;
        }
        const std::size_t half = layout_.info[layout_.split_index].out.c;
        Tensor hv({B, 1, 1, half}), ha({B, 1, 1, half});
        kernels::split_forward(x.span(), B, half, hv.span(), ha.span());
        if (keep) cache.inputs[layout_.split_index] = std::move(x);
        Tensor v = run_range(layout_.value_begin, layout_.value_end, std::move(hv), B, cache, keep);
        Tensor a = run_range(layout_.adv_begin, layout_.adv_end, std::move(ha), B, cache, keep);
        const std::size_t A = layout_.action_count;
        Tensor q({B, A});
        kernels::dueling_forward(v.span(), a.span(), B, A, q.span());
        if (keep) {
            cache.value = std::move(v);
            cache.advantage = std::move(a);
        }
        return q;
    }

    /// Walks layers [begin, end) backwards. `need_dx_at_begin` asks for the
    /// gradient with respect to the range's input; returns it (or empty).
    Tensor backprop_range(const ForwardCache& cache, std::size_t begin, std::size_t end, Tensor dy, Gradients& g,
                          bool need_dx_at_begin) const {
        const std::size_t B = cache.batch;
        // lowest layer in the range that still needs a gradient
        std::size_t lowest = end;
        for (std::size_t i = begin; i < end; ++i)
            if (trainable_weighted(i)) {
                lowest = i;
                break;
            }
        if (need_dx_at_begin) lowest = begin;
        for (std::size_t i = end; i-- > begin;) {
            if (i < lowest) return {};
            const auto& l = spec_.layers[i];
            const auto& li = layout_.info[i];
            const Tensor& x = cache.inputs[i];
            const bool want_dx = i > lowest || (i == lowest && need_dx_at_begin);
            Tensor dx;
            if (want_dx) dx = Tensor({B, li.in.h, li.in.w, li.in.c});
            switch (l.kind) {
                case LayerKind::conv2d:
                case LayerKind::dense: {
                    std::span<float> dw, db;
                    if (l.trainable) {
                        g.layers[i].weight = Tensor(params_[i].weight.shape());
                        g.layers[i].bias = Tensor(params_[i].bias.shape());
                        dw = g.layers[i].weight.span();
                        db = g.layers[i].bias.span();
                    }
                    if (l.kind == LayerKind::conv2d)
                        kernels::conv2d_backward(cache.cols[i], B, geom(i), params_[i].weight.span(), dy.span(), dw,
                                                 db, dx.span());
                    else
                        kernels::dense_backward(x.span(), B, l.fan_in, l.fan_out, params_[i].weight.span(), dy.span(),
                                                dw, db, dx.span());
                    break;
                }
                case LayerKind::maxpool2d:
                    if (want_dx) kernels::maxpool_backward(dy.span(), cache.argmax[i], dx.span());
                    break;
                case LayerKind::relu:
                    if (want_dx) kernels::relu_backward(x.span(), dy.span(), dx.span());
                    break;
                case LayerKind::flatten:
                    if (want_dx) std::copy(dy.values().begin(), dy.values().end(), dx.values().begin());
                    break;
                default:
                    throw ShapeError("unexpected layer in backward pass");
            }
            if (!want_dx) return {};
            dy = std::move(dx);
        }
        return dy;
    }

    NetworkSpec spec_;
    SpecLayout layout_;
    OptimizerConfig opt_;
    TrainType train_type_ = TrainType::e2e();
    std::vector<LayerParams> params_;
    std::vector<Moments> moments_;
    std::uint64_t steps_ = 0;
};

/// Makes `target` a bit-identical copy of `behaviour`'s weights.
inline void sync_target(const Network& behaviour, Network& target) { target.copy_weights_from(behaviour); }

/// Returns a fresh target network holding a copy of `behaviour`'s weights.
inline Network sync_target(const Network& behaviour) { return behaviour; }

inline bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           (a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

}  // namespace navtl::nn
