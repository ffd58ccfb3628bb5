#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "navtl/action/action_space.hpp"
#include "navtl/core/error.hpp"
#include "navtl/nn/network.hpp"
#include "navtl/rl/return_log.hpp"
#include "navtl/rl/trainer.hpp"

namespace navtl::eval {

/// N x N grid, row j (vertical bin), column i (horizontal bin).
struct QHeatmap {
    std::size_t n = 0;
    std::vector<float> q;         // raw network output, action-index order
    std::vector<double> cells;    // normalized, row-major

    double at(std::size_t i, std::size_t j) const { return cells[j * n + i]; }

    std::string to_csv() const {
        std::string out;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                if (i) out += ',';
                out += rl::format_number(at(i, j));
            }
            out += '\n';
        }
        return out;
    }
};

/// Min-max normalized Q over the action grid; a constant Q maps to all zeros.
inline QHeatmap q_heatmap(std::span<const float> q, const action::ActionSpaceSpec& actions) {
    if (q.size() != actions.action_count())
        throw ShapeError("Q has " + std::to_string(q.size()) + " entries, action space has " +
                         std::to_string(actions.action_count()));
    QHeatmap h;
    h.n = actions.n;
    h.q.assign(q.begin(), q.end());
    h.cells.assign(q.size(), 0.0);
    const auto [lo, hi] = std::minmax_element(q.begin(), q.end());
    const double span = double(*hi) - double(*lo);
    if (span <= 0.0) return h;
    for (std::size_t a = 0; a < q.size(); ++a) {
        const auto [i, j] = action::index_to_bin(actions, a);
        h.cells[j * h.n + i] = (double(q[a]) - double(*lo)) / span;
    }
    return h;
}

inline QHeatmap export_q_heatmap(const nn::Network& net, const std::vector<std::uint8_t>& levels,
                                 const action::ActionSpaceSpec& actions) {
    const auto in = net.input_shape();
    if (levels.size() != in.size())
        throw ShapeError("observation has " + std::to_string(levels.size()) + " values, network expects " +
                         std::to_string(in.size()));
    std::vector<float> x(levels.size());
    rl::levels_to_floats(levels, x.data());
    return q_heatmap(net.q_values(x), actions);
}

}  // namespace navtl::eval
