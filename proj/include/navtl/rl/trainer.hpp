#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "navtl/core/error.hpp"
#include "navtl/core/hash.hpp"
#include "navtl/nn/network.hpp"
#include "navtl/replay/prioritized_replay.hpp"
#include "navtl/rl/dqn.hpp"
#include "navtl/rl/environment.hpp"
#include "navtl/rl/return_log.hpp"

namespace navtl::rl {

struct TrainConfig {
    double gamma = 0.99;
    double eps_start = 1.0;
    double eps_end = 0.1;
    double eps_anneal_fraction = 0.5;  // of max_steps
    std::uint64_t n_target = 1000;
    std::uint64_t n_train = 4;
    std::uint64_t n_batch = 32;
    std::uint64_t m = 1000;  // environment switch interval
    std::uint64_t max_steps = 150'000;
    std::uint64_t learn_start = 1000;        // replay size before the first update
    std::uint64_t max_episode_steps = 1000;  // truncation without a terminal flag
    nn::TrainType train_type = nn::TrainType::e2e();
    float lr = 1e-4f;
    std::uint64_t seed = 1;
    std::size_t ma_window = 100;
    replay::ReplayConfig replay;
    nn::OptimizerConfig optimizer;

    EpsilonSchedule epsilon() const {
        return {eps_start, eps_end, std::uint64_t(eps_anneal_fraction * double(max_steps))};
    }

    void validate() const {
        require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
        require(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0,
                "epsilon bounds must lie in [0, 1]");
        require(eps_anneal_fraction >= 0.0, "eps_anneal_fraction must be non-negative");
        require(n_target >= 1 && n_train >= 1 && n_batch >= 1 && m >= 1 && max_episode_steps >= 1,
                "n_target, n_train, n_batch, m and max_episode_steps must be at least 1");
        require(lr >= 0.0f, "learning rate must be non-negative");
        require(ma_window >= 1, "ma_window must be at least 1");
        require(n_batch <= replay.capacity, "n_batch exceeds the replay capacity");
    }
};

template <class State>
struct StepTrace {
    std::uint64_t step = 0;
    std::size_t env_index = 0;
    std::size_t action = 0;
    double reward = 0.0;
    bool terminal = false;
    bool episode_end = false;
    State state_after{};
};

template <class State>
struct SwitchTrace {
    std::uint64_t step = 0;  // switch happens before this step acts
    std::size_t from = 0;
    std::size_t to = 0;
    State saved{};
    std::optional<State> restored;  // empty on a first visit
    State resumed{};                // state the step starts from
};

template <class State>
struct TrainHooks {
    std::function<void(const StepTrace<State>&)> on_step;
    std::function<void(const SwitchTrace<State>&)> on_switch;
};

struct TrainResult {
    ReturnLog log;
    std::string stop_reason;  // "budget", "matched" or "cap"
    std::uint64_t steps = 0;
    std::uint64_t updates = 0;
    double distance = 0.0;
};

struct TrainOutcome {
    nn::Network network;
    TrainResult result;
};

struct Transition {
    std::vector<std::uint8_t> s;
    std::vector<std::uint8_t> s_next;
    std::uint32_t action = 0;
    float reward = 0.0f;
    bool terminal = false;
};

inline void levels_to_floats(const std::vector<std::uint8_t>& levels, float* out) {
    for (std::size_t k = 0; k < levels.size(); ++k) out[k] = float(levels[k]) / 255.0f;
}

/// Double-DQN with prioritized replay over one or more environments visited
/// round-robin every m steps. Each environment keeps its own saved state and
/// running episode while it is not current.
template <Environment E>
class DqnLoop {
public:
    using State = typename E::State;

    DqnLoop(std::vector<E>& envs, nn::Network& behaviour, const TrainConfig& cfg, TrainHooks<State> hooks = {})
        : envs_(envs), net_(behaviour), target_(behaviour), cfg_(cfg), hooks_(std::move(hooks)),
          replay_(cfg.replay), log_(cfg.ma_window), slots_(envs.size()),
          rng_agent_(derive_seed(cfg.seed, "agent")), rng_env_(derive_seed(cfg.seed, "env")),
          rng_replay_(derive_seed(cfg.seed, "replay")) {
        cfg_.validate();
        if (envs_.empty()) throw ConfigError("training needs at least one environment");
        for (const auto& e : envs_) {
            if (e.observation_size() != net_.input_shape().size())
                throw ShapeError("environment observation size " + std::to_string(e.observation_size()) +
                                 " does not match the network input " + std::to_string(net_.input_shape().size()));
            if (e.action_count() != net_.action_count())
                throw ShapeError("environment has " + std::to_string(e.action_count()) + " actions, network outputs " +
                                 std::to_string(net_.action_count()));
        }
    }

    const replay::PrioritizedReplay<Transition>& replay() const { return replay_; }

    /// Runs at most `budget` steps. With a baseline, stops as soon as the moving-average return reaches it.
    TrainResult run(std::uint64_t budget, std::optional<double> baseline) {
        TrainResult res;
        const auto eps = cfg_.epsilon();
        const std::size_t in = net_.input_shape().size();
        std::vector<float> obs_f(in);
        std::vector<std::uint8_t> obs;
        bool have_obs = false;
        std::size_t cur = 0;
        envs_[0].reset();
        Episode ep;
        const std::uint64_t learn_at = std::max(cfg_.n_batch, cfg_.learn_start);
        const bool switching = envs_.size() > 1;

        auto matched = [&] { return baseline && log_.moving_average() >= *baseline; };
        if (matched()) {
            res.stop_reason = "matched";
            return finish(res, ep, cur);
        }
        res.stop_reason = baseline ? "cap" : "budget";

        for (std::uint64_t t = 0; t < budget; ++t) {
            if (switching && t > 0 && t % cfg_.m == 0) {
                SwitchTrace<State> tr;
                tr.step = t;
                tr.from = cur;
                tr.saved = envs_[cur].state();
                slots_[cur] = Slot{tr.saved, ep};
                cur = (cur + 1) % envs_.size();
                tr.to = cur;
                if (slots_[cur]) {
                    envs_[cur].restore(slots_[cur]->state);
                    ep = slots_[cur]->episode;
                    tr.restored = slots_[cur]->state;
                } else {
                    envs_[cur].reset();
                    ep = Episode{};
                }
                tr.resumed = envs_[cur].state();
                have_obs = false;
                if (hooks_.on_switch) hooks_.on_switch(tr);
            }
            E& env = envs_[cur];
            if (!have_obs) obs = env.observe();
            levels_to_floats(obs, obs_f.data());
            const auto q = net_.q_values(obs_f);
            const double epsilon = eps.at(t);
            const std::size_t a = epsilon_greedy(std::span<const float>(q), epsilon, rng_agent_);
            const StepOutcome out = env.step(a, rng_env_);
            res.distance += out.distance;
            auto next = env.observe();
            replay_.push({obs, next, std::uint32_t(a), float(out.reward), out.terminal});
            ep.ret += out.reward;
            ++ep.len;

            const bool episode_end = out.terminal || ep.len >= cfg_.max_episode_steps;
            if (hooks_.on_step) hooks_.on_step({t, cur, a, out.reward, out.terminal, episode_end, env.state()});
            if (episode_end) {
                close_episode(ep, t, epsilon, cur);
                env.respawn(rng_env_);
                have_obs = false;
            } else {
                obs = std::move(next);
                have_obs = true;
            }

            if (replay_.size() >= learn_at && (t + 1) % cfg_.n_train == 0) {
                ep.add_loss(learn(t, budget));
                ++res.updates;
            }
            if ((t + 1) % cfg_.n_target == 0) nn::sync_target(net_, target_);
            res.steps = t + 1;
            if (episode_end && matched()) {
                res.stop_reason = "matched";
                break;
            }
        }
        return finish(res, ep, cur);
    }

private:
    struct Episode {
        double ret = 0.0;
        std::uint64_t len = 0;
        double loss_sum = 0.0;
        std::uint64_t loss_n = 0;

        void add_loss(double l) {
            loss_sum += l;
            ++loss_n;
        }
    };
    struct Slot {
        State state;
        Episode episode;
    };

    void close_episode(Episode& ep, std::uint64_t t, double epsilon, std::size_t env_index) {
        EpisodeRecord rec;
        rec.step = t + 1;
        rec.episode_return = ep.ret;
        rec.epsilon = epsilon;
        rec.env_index = env_index;
        rec.loss = ep.loss_n ? ep.loss_sum / double(ep.loss_n) : std::nan("");
        rec.length = ep.len;
        log_.add(rec);
        ep = Episode{};
    }

    /// Logs the unfinished episodes of every environment so logged returns account for every reward.
    TrainResult& finish(TrainResult& res, Episode& ep, std::size_t cur) {
        const double epsilon = cfg_.epsilon().at(res.steps);
        for (std::size_t k = 0; k < envs_.size(); ++k) {
            Episode* e = k == cur ? &ep : (slots_[k] ? &slots_[k]->episode : nullptr);
            if (e && e->len > 0) close_episode(*e, res.steps - 1, epsilon, k);
        }
        res.log = log_;
        return res;
    }

    double learn(std::uint64_t t, std::uint64_t budget) {
        const std::size_t B = cfg_.n_batch;
        const auto shape = net_.input_shape();
        const auto batch = replay_.sample(B, replay::beta_at(t, budget), rng_replay_);
        nn::Tensor s({B, shape.h, shape.w, shape.c}), s2({B, shape.h, shape.w, shape.c});
        std::vector<float> rewards(B);
        std::vector<std::uint8_t> terminal(B);
        std::vector<std::size_t> actions(B);
        const std::size_t in = shape.size();
        for (std::size_t k = 0; k < B; ++k) {
            const Transition& tr = *batch.items[k];
            levels_to_floats(tr.s, s.data() + k * in);
            levels_to_floats(tr.s_next, s2.data() + k * in);
            rewards[k] = tr.reward;
            terminal[k] = tr.terminal;
            actions[k] = tr.action;
        }
        const auto y = ddqn_target(net_, target_, s2, rewards, terminal, cfg_.gamma);
        nn::TrainStepResult r;
        try {
            r = net_.train_step(s, y, actions, batch.weights, cfg_.lr);
        } catch (const DivergenceError&) {
            throw DivergenceError(t, "training diverged: non-finite loss");
        }
        replay_.update_priorities(batch.indices, r.td_errors);
        return r.loss;
    }

    std::vector<E>& envs_;
    nn::Network& net_;
    nn::Network target_;
    TrainConfig cfg_;
    TrainHooks<State> hooks_;
    replay::PrioritizedReplay<Transition> replay_;
    ReturnLog log_;
    std::vector<std::optional<Slot>> slots_;
    std::mt19937_64 rng_agent_, rng_env_, rng_replay_;
};

/// Offline phase: one end-to-end network trained round-robin over the meta environments.
template <Environment E>
TrainOutcome train_offline(std::vector<E>& envs, nn::NetworkSpec spec, const TrainConfig& cfg,
                           TrainHooks<typename E::State> hooks = {}) {
    if (cfg.train_type != nn::TrainType::e2e())
        throw ConfigError("the offline phase trains end-to-end; got train type " + cfg.train_type.name());
    nn::Network net(std::move(spec), derive_seed(cfg.seed, "init"), cfg.optimizer);
    net.set_train_type(nn::TrainType::e2e());
    DqnLoop<E> loop(envs, net, cfg, std::move(hooks));
    TrainResult res = loop.run(cfg.max_steps, std::nullopt);
    return {std::move(net), std::move(res)};
}

/// Online phase: start from the meta weights, freeze per cfg.train_type and train
/// in one environment. With a baseline the step cap is 2 x max_steps.
template <Environment E>
TrainOutcome train_online(E env, const nn::Network& meta, const TrainConfig& cfg, std::optional<double> baseline,
                          TrainHooks<typename E::State> hooks = {}) {
    nn::Network net = meta;
    net.set_optimizer(cfg.optimizer);
    net.set_train_type(cfg.train_type);
    std::vector<E> envs{std::move(env)};
    DqnLoop<E> loop(envs, net, cfg, std::move(hooks));
    TrainResult res = loop.run(baseline ? 2 * cfg.max_steps : cfg.max_steps, baseline);
    return {std::move(net), std::move(res)};
}

}  // namespace navtl::rl
