#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "navtl/core/error.hpp"
#include "navtl/nn/network.hpp"

namespace navtl::rl {

/// Linear epsilon decay from `start` to `end` over `anneal_steps`, then flat.
struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.1;
    std::uint64_t anneal_steps = 75'000;

    double at(std::uint64_t step) const {
        if (anneal_steps == 0 || step >= anneal_steps) return end;
        return start + (end - start) * double(step) / double(anneal_steps);
    }
};

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const float> q) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[best]) best = a;
    return best;
}

/// Uniform random action with probability eps, otherwise argmax. Always draws the
/// coin, and the uniform index only when exploring.
template <class Rng>
std::size_t epsilon_greedy(std::span<const float> q, double eps, Rng& rng) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < eps) {
        std::uniform_int_distribution<std::size_t> pick(0, q.size() - 1);
        return pick(rng);
    }
    return argmax(q);
}

/// Double-DQN targets: y = r for terminal rows, else
/// y = r + gamma * Q_target(s', argmax_a Q_behaviour(s', a)).
inline std::vector<float> ddqn_target(const nn::Network& behaviour, const nn::Network& target,
                                      const nn::Tensor& next_obs, std::span<const float> rewards,
                                      std::span<const std::uint8_t> terminal, double gamma) {
    const std::size_t B = rewards.size();
    if (terminal.size() != B || next_obs.dim(0) != B) throw ShapeError("ddqn_target batch sizes disagree");
    const nn::Tensor qb = behaviour.forward(next_obs);
    const nn::Tensor qt = target.forward(next_obs);
    const std::size_t A = behaviour.action_count();
    std::vector<float> y(B);
    for (std::size_t k = 0; k < B; ++k) {
        if (terminal[k]) {
            y[k] = rewards[k];
            continue;
        }
        const std::size_t a = argmax(std::span<const float>(qb.data() + k * A, A));
        y[k] = float(double(rewards[k]) + gamma * double(qt[k * A + a]));
    }
    return y;
}

}  // namespace navtl::rl
