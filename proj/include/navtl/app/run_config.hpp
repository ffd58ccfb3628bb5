#pragma once

// Run configuration shared by every command. One JSON document with
// per-command sections; flags are merged on top as a JSON patch before
// parsing, so file values and flags go through the same checks.
//
// {
//   "seed": 1, "resolution": 32,
//   "camera":   {"fov_h_deg", "fov_v_deg", "near_m", "far_m"},
//   "actions":  {"n", "r", "b", "variant", "variant_param"},
//   "reward":   {"d_safe", "d_crash", "rays"},
//   "train":    {"gamma", "eps_start", "eps_end", "eps_anneal_fraction", "n_target", "n_train",
//                "n_batch", "m", "max_steps", "learn_start", "max_episode_steps", "train_type",
//                "lr", "ma_window", "replay_capacity", "alpha", "priority_eps", "optimizer"},
//   "eval":     {"spawns", "cap_m", "seed"},
//   "pipeline": {"meta_count", "offline_steps", "online_steps", "env_seed"}
// }

#include <bit>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "navtl/action/action_space.hpp"
#include "navtl/core/error.hpp"
#include "navtl/env/generator.hpp"
#include "navtl/env/raycast.hpp"
#include "navtl/eval/msf.hpp"
#include "navtl/nn/network_spec.hpp"
#include "navtl/rl/environment.hpp"
#include "navtl/rl/trainer.hpp"

namespace navtl::app {

using json = nlohmann::json;

struct PipelineConfig {
    std::size_t meta_count = 4;
    std::uint64_t offline_steps = 50'000;
    std::uint64_t online_steps = 30'000;
    std::uint64_t env_seed = 1;  // floor-plan generation, independent of the training seed
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::size_t resolution = 32;
    env::Camera camera;
    action::ActionSpaceSpec actions;
    rl::RewardConfig reward;
    double d_crash = env::kDefaultCrashDistance;
    rl::TrainConfig train;
    eval::EvalConfig eval;
    PipelineConfig pipeline;

    nn::NetworkSpec network() const {
        return nn::build_desk_network(actions.action_count(), {resolution, resolution, 3});
    }

    rl::NavEnvironment make_env(std::shared_ptr<const env::FloorPlan> plan) const {
        return rl::NavEnvironment(std::move(plan), camera, actions, reward, d_crash);
    }
};

namespace detail {

/// Reads keys out of one JSON object and rejects whatever is left over.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where() + "." + key + " has the wrong type");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    std::optional<Section> sub(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return std::nullopt;
        return Section(*it, path_.empty() ? key : path_ + "." + key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown config key " + where() + "." + it.key());
    }

private:
    std::string where() const { return path_.empty() ? "<root>" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig parse_run_config(const json& j) {
    RunConfig c;
    detail::Section root(j, "");
    root.get("seed", c.seed);
    root.get("resolution", c.resolution);
    require(c.resolution >= 12, "resolution must be at least 12 pixels");

    double fov_h = 90.0, fov_v = 90.0;
    if (auto s = root.sub("camera")) {
        s->get("fov_h_deg", fov_h);
        s->get("fov_v_deg", fov_v);
        s->get("near_m", c.camera.near_m);
        s->get("far_m", c.camera.far_m);
        s->finish();
    }
    require(fov_h > 0.0 && fov_h < 180.0 && fov_v > 0.0 && fov_v < 180.0, "fields of view must lie in (0, 180)");
    require(c.camera.near_m > 0.0 && c.camera.far_m > c.camera.near_m, "camera needs 0 < near_m < far_m");
    c.camera.fov_h = env::deg2rad(fov_h);
    c.camera.fov_v = env::deg2rad(fov_v);
    c.camera.height = c.camera.width = c.resolution;

    c.actions.fov_h = c.camera.fov_h;
    c.actions.fov_v = c.camera.fov_v;
    if (auto s = root.sub("actions")) {
        std::string variant = "normal";
        std::optional<double> param;
        s->get("n", c.actions.n);
        s->get("r", c.actions.r);
        s->get("b", c.actions.b);
        s->get("variant", variant);
        double p = 0.0;
        s->get("variant_param", p);
        if (s->has("variant_param")) param = p;
        s->finish();
        c.actions.variant = action::parse_variant(variant);
        c.actions.variant_param = param ? *param : action::default_variant_param(c.actions.variant);
    }
    c.actions.validate();

    if (auto s = root.sub("reward")) {
        s->get("d_safe", c.reward.d_safe);
        s->get("d_crash", c.d_crash);
        s->get("rays", c.reward.ray_count);
        s->finish();
    }
    require(c.reward.d_safe > 0.0 && c.d_crash > 0.0 && c.reward.ray_count >= 1,
            "reward needs positive d_safe, d_crash and ray count");

    c.train.seed = c.seed;
    if (auto s = root.sub("train")) {
        auto& t = c.train;
        s->get("gamma", t.gamma);
        s->get("eps_start", t.eps_start);
        s->get("eps_end", t.eps_end);
        s->get("eps_anneal_fraction", t.eps_anneal_fraction);
        s->get("n_target", t.n_target);
        s->get("n_train", t.n_train);
        s->get("n_batch", t.n_batch);
        s->get("m", t.m);
        s->get("max_steps", t.max_steps);
        s->get("learn_start", t.learn_start);
        s->get("max_episode_steps", t.max_episode_steps);
        std::string tt = t.train_type.name();
        s->get("train_type", tt);
        t.train_type = nn::TrainType::parse(tt);
        s->get("lr", t.lr);
        s->get("ma_window", t.ma_window);
        s->get("replay_capacity", t.replay.capacity);
        s->get("alpha", t.replay.alpha);
        s->get("priority_eps", t.replay.eps);
        std::string opt = "adam";
        s->get("optimizer", opt);
        if (opt == "adam")
            t.optimizer.kind = nn::OptimizerConfig::Kind::adam;
        else if (opt == "sgd")
            t.optimizer.kind = nn::OptimizerConfig::Kind::sgd;
        else
            throw ConfigError("optimizer must be adam or sgd, got '" + opt + "'");
        s->finish();
    }
    require(c.train.replay.capacity >= 1 && std::has_single_bit(c.train.replay.capacity),
            "replay_capacity must be a power of two");
    c.train.validate();

    c.eval.seed = c.seed;
    c.eval.d_crash = c.d_crash;
    if (auto s = root.sub("eval")) {
        s->get("spawns", c.eval.n_spawns);
        s->get("cap_m", c.eval.cap_m);
        s->get("seed", c.eval.seed);
        s->finish();
    }
    require(c.eval.n_spawns >= 1 && c.eval.cap_m >= 0.0, "eval needs spawns >= 1 and cap_m >= 0");

    if (auto s = root.sub("pipeline")) {
        s->get("meta_count", c.pipeline.meta_count);
        s->get("offline_steps", c.pipeline.offline_steps);
        s->get("online_steps", c.pipeline.online_steps);
        s->get("env_seed", c.pipeline.env_seed);
        s->finish();
    }
    require(c.pipeline.meta_count >= 1 && c.pipeline.meta_count <= env::kMetaPresetCount,
            "pipeline.meta_count must lie in [1, " + std::to_string(env::kMetaPresetCount) + "]");
    root.finish();
    return c;
}

/// Fully resolved configuration; parse_run_config(to_json(c)) reproduces c.
inline json to_json(const RunConfig& c) {
    const char* opt = c.train.optimizer.kind == nn::OptimizerConfig::Kind::adam ? "adam" : "sgd";
    return json{
        {"seed", c.seed},
        {"resolution", c.resolution},
        {"camera",
         {{"fov_h_deg", env::rad2deg(c.camera.fov_h)},
          {"fov_v_deg", env::rad2deg(c.camera.fov_v)},
          {"near_m", c.camera.near_m},
          {"far_m", c.camera.far_m}}},
        {"actions",
         {{"n", c.actions.n},
          {"r", c.actions.r},
          {"b", c.actions.b},
          {"variant", action::to_string(c.actions.variant)},
          {"variant_param", c.actions.variant_param}}},
        {"reward", {{"d_safe", c.reward.d_safe}, {"d_crash", c.d_crash}, {"rays", c.reward.ray_count}}},
        {"train",
         {{"gamma", c.train.gamma},
          {"eps_start", c.train.eps_start},
          {"eps_end", c.train.eps_end},
          {"eps_anneal_fraction", c.train.eps_anneal_fraction},
          {"n_target", c.train.n_target},
          {"n_train", c.train.n_train},
          {"n_batch", c.train.n_batch},
          {"m", c.train.m},
          {"max_steps", c.train.max_steps},
          {"learn_start", c.train.learn_start},
          {"max_episode_steps", c.train.max_episode_steps},
          {"train_type", c.train.train_type.name()},
          {"lr", c.train.lr},
          {"ma_window", c.train.ma_window},
          {"replay_capacity", c.train.replay.capacity},
          {"alpha", c.train.replay.alpha},
          {"priority_eps", c.train.replay.eps},
          {"optimizer", opt}}},
        {"eval", {{"spawns", c.eval.n_spawns}, {"cap_m", c.eval.cap_m}, {"seed", c.eval.seed}}},
        {"pipeline",
         {{"meta_count", c.pipeline.meta_count},
          {"offline_steps", c.pipeline.offline_steps},
          {"online_steps", c.pipeline.online_steps},
          {"env_seed", c.pipeline.env_seed}}},
    };
}

inline json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
}

/// File (optional) with flag overrides merged on top.
inline RunConfig load_run_config(const std::string& path, const json& overrides) {
    json j = path.empty() ? json::object() : read_json_file(path);
    if (!j.is_object()) throw ConfigError("config root must be an object");
    j.merge_patch(overrides);
    return parse_run_config(j);
}

}  // namespace navtl::app
