#pragma once

#include <concepts>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "navtl/action/action_space.hpp"
#include "navtl/env/floorplan.hpp"
#include "navtl/env/raycast.hpp"

namespace navtl::rl {

struct StepOutcome {
    double reward = 0.0;
    bool terminal = false;
    double distance = 0.0;  // metres moved this step
};

/// What the training loop needs from an environment. Observations are 8-bit
/// levels (value = level / 255) laid out as the network input.
template <class E>
concept Environment = requires(E& e, const E& ce, std::size_t a, std::mt19937_64& rng) {
    typename E::State;
    { ce.observation_size() } -> std::convertible_to<std::size_t>;
    { ce.action_count() } -> std::convertible_to<std::size_t>;
    { e.observe() } -> std::convertible_to<std::vector<std::uint8_t>>;
    { e.step(a, rng) } -> std::same_as<StepOutcome>;
    { e.respawn(rng) };
    { e.reset() };  // initial state for a first visit
    { ce.state() } -> std::same_as<typename E::State>;
    { e.restore(ce.state()) };
};

struct RewardConfig {
    double d_safe = 3.0;
    double half_angle = env::deg2rad(45.0);
    std::size_t ray_count = 32;
    double far_m = 10.0;
};

struct Reward {
    double r = 0.0;
    bool terminal = false;
};

/// -1 and terminal on collision, otherwise forward-cone clearance / d_safe clamped to [0, 1].
inline Reward compute_reward(const env::FloorPlan& plan, const env::AgentPose& pose_after, bool collided,
                             const RewardConfig& cfg = {}) {
    if (collided) return {-1.0, true};
    const double d = env::min_clearance(plan, pose_after, env::Cone{pose_after.yaw, cfg.half_angle, cfg.ray_count},
                                        cfg.far_m);
    return {std::clamp(d / cfg.d_safe, 0.0, 1.0), false};
}

/// A floor plan driven through the N x N action space and observed by the raycast camera.
class NavEnvironment {
public:
    using State = env::AgentPose;

    NavEnvironment(std::shared_ptr<const env::FloorPlan> plan, env::Camera cam, action::ActionSpaceSpec actions,
                   RewardConfig reward = {}, double d_crash = env::kDefaultCrashDistance)
        : plan_(std::move(plan)), cam_(cam), actions_(actions), reward_(reward), d_crash_(d_crash) {
        if (!plan_ || plan_->spawn_points.empty()) throw ConfigError("environment needs a plan with spawn points");
        actions_.validate();
        reward_.half_angle = 0.5 * cam_.fov_h;
        reward_.far_m = cam_.far_m;
        reset();
    }

    const env::FloorPlan& plan() const { return *plan_; }
    const env::Camera& camera() const { return cam_; }
    const action::ActionSpaceSpec& action_space() const { return actions_; }
    std::size_t observation_size() const { return cam_.height * cam_.width * 3; }
    std::size_t action_count() const { return actions_.action_count(); }

    std::vector<std::uint8_t> observe() const { return env::render(*plan_, pose_, cam_).levels; }

    StepOutcome step(std::size_t a, std::mt19937_64& rng) {
        const auto [i, j] = action::index_to_bin(actions_, a);
        const auto ex = action::execute(actions_, pose_, i, j, rng);
        env::AgentPose turned = pose_;
        turned.yaw = ex.yaw;
        const auto mv = env::sweep_move(*plan_, turned, ex.displacement, d_crash_);
        pose_ = mv.pose;
        const Reward rw = compute_reward(*plan_, pose_, mv.collided, reward_);
        return {rw.r, rw.terminal, mv.distance};
    }

    void respawn(std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> pick(0, plan_->spawn_points.size() - 1);
        pose_ = plan_->spawn_points[pick(rng)];
    }
    void reset() { pose_ = plan_->spawn_points.front(); }
    State state() const { return pose_; }
    void restore(const State& s) { pose_ = s; }

private:
    std::shared_ptr<const env::FloorPlan> plan_;
    env::Camera cam_;
    action::ActionSpaceSpec actions_;
    RewardConfig reward_;
    double d_crash_;
    env::AgentPose pose_;
};

static_assert(Environment<NavEnvironment>);

}  // namespace navtl::rl
