#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "navtl/action/action_space.hpp"
#include "navtl/core/error.hpp"
#include "navtl/core/hash.hpp"
#include "navtl/env/floorplan.hpp"
#include "navtl/env/raycast.hpp"
#include "navtl/nn/checkpoint.hpp"
#include "navtl/nn/network.hpp"
#include "navtl/rl/dqn.hpp"
#include "navtl/rl/trainer.hpp"

namespace navtl::eval {

struct EvalConfig {
    std::size_t n_spawns = 10;
    double cap_m = 2000.0;
    std::uint64_t seed = 1;
    double d_crash = env::kDefaultCrashDistance;
    double jitter_m = 0.5;                       // spawn position jitter around a spawn point
    double jitter_yaw = env::deg2rad(30.0);
};

struct EvalReport {
    std::string env_name;
    std::string checkpoint_id;
    double cap_m = 0.0;
    std::uint64_t seed = 0;
    std::vector<env::AgentPose> spawns;
    std::vector<double> distances;
    double msf = 0.0;
};

inline std::string hex_digest(std::uint64_t d) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, d >>= 4) s[std::size_t(i)] = digits[d & 0xf];
    return s;
}

/// Content id of a network's parameters, identical to the digest of its checkpoint file.
inline std::string checkpoint_id(const nn::Network& net) {
    const auto bytes = nn::serialize_checkpoint(net);
    Fnv1a64 h;
    h.update(bytes.data(), bytes.size());
    return hex_digest(h.digest());
}

/// Seeded evaluation starts: spawn points jittered in position and yaw, kept only
/// where clearance is at least twice the crash distance. Depends on (plan, n, seed) only.
inline std::vector<env::AgentPose> spawn_poses(const env::FloorPlan& plan, std::size_t n, std::uint64_t seed,
                                               const EvalConfig& cfg = {}) {
    require(n >= 1, "n_spawns must be at least 1");
    if (plan.spawn_points.empty()) throw ConfigError("floor plan '" + plan.name + "' has no spawn points");
    std::mt19937_64 rng(derive_seed(seed, "spawns/" + plan.name));
    std::uniform_int_distribution<std::size_t> pick(0, plan.spawn_points.size() - 1);
    std::uniform_real_distribution<double> off(-1.0, 1.0);
    std::vector<env::AgentPose> out;
    out.reserve(n);
    while (out.size() < n) {
        const env::AgentPose base = plan.spawn_points[pick(rng)];
        env::AgentPose p = base;
        for (int attempt = 0; attempt < 100; ++attempt) {
            env::AgentPose c = base;
            c.x += cfg.jitter_m * off(rng);
            c.y += cfg.jitter_m * off(rng);
            c.yaw += cfg.jitter_yaw * off(rng);
            if (env::clearance(plan, c.position()) >= 2.0 * cfg.d_crash) {
                p = c;
                break;
            }
        }
        out.push_back(p);
    }
    return out;
}

/// Flies `policy` from one start until the first collision or cap_m metres.
template <class Policy>
double fly(const env::FloorPlan& plan, const env::Camera& cam, const action::ActionSpaceSpec& actions,
           env::AgentPose pose, Policy&& policy, double cap_m, std::uint64_t noise_seed, double d_crash) {
    std::mt19937_64 rng(noise_seed);
    double travelled = 0.0;
    while (travelled < cap_m) {
        const auto obs = env::render(plan, pose, cam);
        const std::size_t a = policy(obs.levels);
        const auto [i, j] = action::index_to_bin(actions, a);
        const auto ex = action::execute(actions, pose, i, j, rng);
        env::AgentPose turned = pose;
        turned.yaw = ex.yaw;
        const auto mv = env::sweep_move(plan, turned, ex.displacement, d_crash);
        travelled += mv.distance;
        pose = mv.pose;
        if (mv.collided) break;
        if (mv.distance <= 0.0) break;  // cannot progress, counts as stuck
    }
    return std::min(travelled, cap_m);
}

template <class Policy>
EvalReport evaluate_policy(const env::FloorPlan& plan, const env::Camera& cam, const action::ActionSpaceSpec& actions,
                           Policy&& policy, const EvalConfig& cfg, std::string id = "") {
    require(cfg.cap_m >= 0.0, "cap_m must be non-negative");
    EvalReport rep;
    rep.env_name = plan.name;
    rep.checkpoint_id = std::move(id);
    rep.cap_m = cfg.cap_m;
    rep.seed = cfg.seed;
    rep.spawns = spawn_poses(plan, cfg.n_spawns, cfg.seed, cfg);
    double sum = 0.0;
    for (std::size_t k = 0; k < rep.spawns.size(); ++k) {
        env::check_free_pose(plan, rep.spawns[k]);
        const double d = fly(plan, cam, actions, rep.spawns[k], policy, cfg.cap_m,
                             derive_seed(cfg.seed, "noise/" + std::to_string(k)), cfg.d_crash);
        rep.distances.push_back(d);
        sum += d;
    }
    rep.msf = sum / double(rep.distances.size());
    return rep;
}

/// Camera matching a network's input resolution.
inline env::Camera camera_for(const nn::Network& net, env::Camera base = {}) {
    const auto in = net.input_shape();
    if (in.c != 3) throw ShapeError("network input must have 3 channels, got " + std::to_string(in.c));
    base.height = in.h;
    base.width = in.w;
    return base;
}

/// Greedy (epsilon = 0) flights; action noise stays on.
inline EvalReport evaluate_msf(const env::FloorPlan& plan, const nn::Network& net,
                               const action::ActionSpaceSpec& actions, const EvalConfig& cfg = {},
                               env::Camera cam = {}) {
    if (net.action_count() != actions.action_count())
        throw ShapeError("network has " + std::to_string(net.action_count()) + " actions, action space has " +
                         std::to_string(actions.action_count()));
    cam = camera_for(net, cam);
    std::vector<float> x;
    auto policy = [&](const std::vector<std::uint8_t>& levels) {
        x.resize(levels.size());
        rl::levels_to_floats(levels, x.data());
        return rl::argmax(net.q_values(x));
    };
    return evaluate_policy(plan, cam, actions, policy, cfg, checkpoint_id(net));
}

}  // namespace navtl::eval
