#pragma once

// Shared helpers for the test suites: random tensors and an independent
// straightforward network evaluator used as a forward-pass oracle.

#include <cmath>
#include <random>
#include <vector>

#include "navtl/nn/network.hpp"

namespace navtl::testing {

inline nn::Tensor random_tensor(nn::Shape shape, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
    nn::Tensor t(std::move(shape));
    std::uniform_real_distribution<float> d(lo, hi);
    for (auto& v : t.values()) v = d(rng);
    return t;
}

inline void randomize(nn::Network& net, std::mt19937_64& rng, float scale = 0.5f) {
    std::uniform_real_distribution<float> d(-scale, scale);
    for (auto& p : net.params()) {
        for (auto& v : p.weight.values()) v = d(rng);
        for (auto& v : p.bias.values()) v = d(rng);
    }
}

/// Direct per-sample evaluation in double precision with nested loops; shares
/// only the weight layout convention with the library.
class OracleForward {
public:
    explicit OracleForward(const nn::Network& net) : net_(net), layout_(net.layout()) {}

    std::vector<double> operator()(const float* sample) const {
        const auto& spec = net_.spec();
        std::vector<double> x(sample, sample + spec.input.size());
        if (!layout_.dueling) return run(0, layout_.trunk_end, std::move(x));
        x = run(0, layout_.trunk_end, std::move(x));
        const std::size_t half = x.size() / 2;
        std::vector<double> hv(x.begin(), x.begin() + long(half)), ha(x.begin() + long(half), x.end());
        auto v = run(layout_.value_begin, layout_.value_end, hv);
        auto a = run(layout_.adv_begin, layout_.adv_end, ha);
        double mean = 0;
        for (double e : a) mean += e;
        mean /= double(a.size());
        std::vector<double> q(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) q[k] = v[0] + a[k] - mean;
        return q;
    }

private:
    std::vector<double> run(std::size_t begin, std::size_t end, std::vector<double> x) const {
        const auto& spec = net_.spec();
        for (std::size_t i = begin; i < end; ++i) {
            const auto& l = spec.layers[i];
            const auto& li = layout_.info[i];
            const auto& W = net_.params()[i].weight;
            const auto& b = net_.params()[i].bias;
            std::vector<double> y(li.out.size(), 0.0);
            switch (l.kind) {
                case nn::LayerKind::conv2d:
                    for (std::size_t oy = 0; oy < li.out.h; ++oy)
                        for (std::size_t ox = 0; ox < li.out.w; ++ox)
                            for (std::size_t oc = 0; oc < li.out.c; ++oc) {
                                double acc = b[oc];
                                for (std::size_t ky = 0; ky < l.kernel; ++ky)
                                    for (std::size_t kx = 0; kx < l.kernel; ++kx) {
                                        long iy = long(oy * l.stride + ky) - long(l.padding);
                                        long ix = long(ox * l.stride + kx) - long(l.padding);
                                        if (iy < 0 || ix < 0 || iy >= long(li.in.h) || ix >= long(li.in.w)) continue;
                                        for (std::size_t ic = 0; ic < li.in.c; ++ic) {
                                            double xv = x[(std::size_t(iy) * li.in.w + std::size_t(ix)) * li.in.c + ic];
                                            double wv = W[((ky * l.kernel + kx) * li.in.c + ic) * li.out.c + oc];
                                            acc += xv * wv;
                                        }
                                    }
                                y[(oy * li.out.w + ox) * li.out.c + oc] = acc;
                            }
                    break;
                case nn::LayerKind::maxpool2d:
                    for (std::size_t oy = 0; oy < li.out.h; ++oy)
                        for (std::size_t ox = 0; ox < li.out.w; ++ox)
                            for (std::size_t c = 0; c < li.in.c; ++c) {
                                double best = -1e300;
                                for (std::size_t ky = 0; ky < l.kernel; ++ky)
                                    for (std::size_t kx = 0; kx < l.kernel; ++kx)
                                        best = std::max(best, x[((oy * l.stride + ky) * li.in.w + ox * l.stride + kx) *
                                                                    li.in.c +
                                                                c]);
                                y[(oy * li.out.w + ox) * li.out.c + c] = best;
                            }
                    break;
                case nn::LayerKind::relu:
                    for (std::size_t k = 0; k < y.size(); ++k) y[k] = std::max(0.0, x[k]);
                    break;
                case nn::LayerKind::flatten:
                    y = x;
                    break;
                case nn::LayerKind::dense:
                    for (std::size_t o = 0; o < l.fan_out; ++o) {
                        double acc = b[o];
                        for (std::size_t k = 0; k < l.fan_in; ++k) acc += x[k] * W[k * l.fan_out + o];
                        y[o] = acc;
                    }
                    break;
                default:
                    break;
            }
            x = std::move(y);
        }
        return x;
    }

    const nn::Network& net_;
    const nn::SpecLayout& layout_;
};

}  // namespace navtl::testing
