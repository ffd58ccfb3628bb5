#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "navtl/nn/network_spec.hpp"

namespace navtl::nn {

// MAC convention used for every cost figure in this library: one
// multiply-accumulate counts as one FLOP, forward pass only.
//   conv2d : out_h * out_w * out_c * (k * k * in_c)     (bias adds not counted)
//   dense  : (fan_in + 1) * fan_out                      (bias counted as one MAC per output)
//   relu, maxpool, flatten, split, aggregate : 0
// Under this convention a dense layer's FLOPs equal its weight count.

inline std::uint64_t layer_flops(const LayerSpec& l, const LayerInfo& info) {
    switch (l.kind) {
        case LayerKind::conv2d:
            return static_cast<std::uint64_t>(info.out.h) * info.out.w * info.out.c *
                   (static_cast<std::uint64_t>(l.kernel) * l.kernel * info.in.c);
        case LayerKind::dense:
            return static_cast<std::uint64_t>(l.fan_in + 1) * l.fan_out;
        default:
            return 0;
    }
}

inline std::uint64_t count_trainable_weights(const NetworkSpec& spec, TrainType tt) {
    SpecLayout layout = analyze(spec);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].has_weights() && layer_trainable(layout.info[i], spec.layers[i], tt))
            total += layout.info[i].weight_count;
    return total;
}

inline std::uint64_t count_total_weights(const NetworkSpec& spec) {
    return count_trainable_weights(spec, TrainType::e2e());
}

struct LayerFlops {
    std::string name;
    LayerKind kind;
    std::uint64_t weights = 0;
    std::uint64_t flops = 0;
    bool trainable = false;
};

struct FlopReport {
    std::vector<LayerFlops> layers;
    std::uint64_t trainable_flops = 0;
    std::uint64_t total_flops = 0;
    std::uint64_t conv_flops = 0;

    double ratio() const { return total_flops ? double(trainable_flops) / double(total_flops) : 0.0; }
};

inline FlopReport count_flops(const NetworkSpec& spec, TrainType tt) {
    SpecLayout layout = analyze(spec);
    FlopReport r;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        LayerFlops lf{l.name, l.kind, layout.info[i].weight_count, layer_flops(l, layout.info[i]),
                      l.has_weights() && layer_trainable(layout.info[i], l, tt)};
        r.total_flops += lf.flops;
        if (l.kind == LayerKind::conv2d) r.conv_flops += lf.flops;
        if (lf.trainable) r.trainable_flops += lf.flops;
        r.layers.push_back(std::move(lf));
    }
    return r;
}

/// Percentage truncated (not rounded) to two decimals, the way the published
/// cost table presents its shares, e.g. 1062938 / 48858522 -> 2.17.
inline double truncated_percent(std::uint64_t part, std::uint64_t whole) {
    if (whole == 0) return 0.0;
    // integer arithmetic avoids 15.06 turning into 15.0599999
    std::uint64_t basis_points = part * 10000 / whole;
    return static_cast<double>(basis_points) / 100.0;
}

}  // namespace navtl::nn
