#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "navtl/app/output.hpp"
#include "navtl/app/run_config.hpp"
#include "navtl/env/generator.hpp"
#include "navtl/eval/compare.hpp"
#include "navtl/eval/heatmap.hpp"
#include "navtl/eval/msf.hpp"
#include "navtl/nn/accounting.hpp"
#include "navtl/nn/checkpoint.hpp"
#include "navtl/rl/trainer.hpp"

namespace navtl::app {

// ---- helpers ---------------------------------------------------------------

inline std::vector<std::string> plan_files(const std::string& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir);
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".plan") out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw ConfigError("no .plan files in " + dir);
    return out;
}

inline std::shared_ptr<const env::FloorPlan> load_plan(const std::string& path, double d_crash) {
    if (!std::filesystem::exists(path)) throw ConfigError("floor plan not found: " + path);
    auto plan = env::load_floorplan(path);
    env::validate(plan, d_crash);
    return std::make_shared<const env::FloorPlan>(std::move(plan));
}

inline nn::Network load_network(const RunConfig& cfg, const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("checkpoint not found: " + path);
    return nn::load_checkpoint(path, cfg.network());
}

/// Prints a progress line every `every` steps.
template <class State>
rl::TrainHooks<State> progress_hooks(std::ostream* log, std::string label, std::uint64_t every = 10'000) {
    rl::TrainHooks<State> h;
    if (!log) return h;
    h.on_step = [log, label = std::move(label), every](const rl::StepTrace<State>& s) {
        if ((s.step + 1) % every == 0) *log << label << ": step " << (s.step + 1) << "\n" << std::flush;
    };
    return h;
}

inline nlohmann::json result_json(const rl::TrainResult& r) {
    return {{"stop_reason", r.stop_reason},
            {"steps", r.steps},
            {"updates", r.updates},
            {"episodes", r.log.records().size()},
            {"final_moving_avg", r.log.moving_average()}};
}

// ---- gen-env ---------------------------------------------------------------

/// "meta" expands to meta-0 .. meta-(count-1); test presets take count 1.
inline std::vector<env::FloorPlan> generate_plans(const std::string& preset, std::size_t count, std::uint64_t seed) {
    if (preset == "meta") {
        require(count >= 1, "--count must be at least 1");
        return env::make_meta_set(count, seed);
    }
    const auto names = env::test_preset_names();
    if (std::find(names.begin(), names.end(), preset) == names.end())
        throw ConfigError("unknown preset '" + preset + "' (expected meta, cloud, condo or twisty)");
    require(count == 1, "test presets are single environments; use --count 1");
    return {env::make_preset(preset, seed)};
}

inline void cmd_gen_env(const RunConfig& cfg, const std::string& preset, std::size_t count, OutputDir& out) {
    for (const auto& plan : generate_plans(preset, count, cfg.seed)) out.write(plan.name + ".plan", env::to_text(plan));
}

// ---- train-offline / train-online -----------------------------------------

inline rl::TrainResult cmd_train_offline(const RunConfig& cfg, const std::string& envs_dir, OutputDir& out,
                                         std::ostream* log = nullptr) {
    std::vector<rl::NavEnvironment> envs;
    for (const auto& f : plan_files(envs_dir)) envs.push_back(cfg.make_env(load_plan(f, cfg.d_crash)));
    auto res = rl::train_offline(envs, cfg.network(), cfg.train, progress_hooks<env::AgentPose>(log, "offline"));
    nn::save_checkpoint(res.network, out.record("model.ckpt"));
    out.write("returns.csv", res.result.log.to_csv());
    out.write("result.json", result_json(res.result).dump(2) + "\n");
    return res.result;
}

inline rl::TrainResult cmd_train_online(const RunConfig& cfg, const std::string& env_file, const std::string& init,
                                        std::optional<double> baseline, OutputDir& out, std::ostream* log = nullptr) {
    const auto meta = load_network(cfg, init);
    auto res = rl::train_online(cfg.make_env(load_plan(env_file, cfg.d_crash)), meta, cfg.train, baseline,
                                progress_hooks<env::AgentPose>(log, "online"));
    nn::save_checkpoint(res.network, out.record("model.ckpt"));
    out.write("returns.csv", res.result.log.to_csv());
    out.write("result.json", result_json(res.result).dump(2) + "\n");
    return res.result;
}

// ---- evaluate-msf ----------------------------------------------------------

/// "label=path" or bare "path" (label e2e). Labels are train types or "meta".
struct LabelledCheckpoint {
    std::string label;
    std::string path;
};

inline LabelledCheckpoint parse_labelled(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) return {"e2e", arg};
    LabelledCheckpoint c{arg.substr(0, eq), arg.substr(eq + 1)};
    if (c.label != "meta") nn::TrainType::parse(c.label);
    return c;
}

inline eval::ComparisonTable evaluate_checkpoints(const RunConfig& cfg, const env::FloorPlan& plan,
                                                  const std::vector<LabelledCheckpoint>& ckpts) {
    require(!ckpts.empty(), "at least one checkpoint is required");
    std::vector<std::pair<nn::TrainType, eval::EvalReport>> reps;
    std::optional<eval::EvalReport> meta;
    for (const auto& c : ckpts) {
        const auto net = load_network(cfg, c.path);
        auto rep = eval::evaluate_msf(plan, net, cfg.actions, cfg.eval, cfg.camera);
        if (c.label == "meta") {
            if (meta) throw ConfigError("more than one meta checkpoint");
            meta = std::move(rep);
        } else {
            reps.emplace_back(nn::TrainType::parse(c.label), std::move(rep));
        }
    }
    const bool has_e2e = std::any_of(reps.begin(), reps.end(), [](const auto& r) { return r.first.is_e2e(); });
    if (has_e2e) return eval::compare_train_types(reps, cfg.network(), meta);
    // no e2e reference: same table without ratios
    eval::ComparisonTable t;
    t.env_name = plan.name;
    const auto spec = cfg.network();
    for (const auto& [tt, rep] : reps)
        t.rows.push_back({tt.name(), rep.msf, std::nan(""), nn::count_trainable_weights(spec, tt),
                          nn::count_flops(spec, tt).trainable_flops, rep.distances});
    if (meta) t.rows.push_back({"meta", meta->msf, std::nan(""), 0, 0, meta->distances});
    return t;
}

inline eval::ComparisonTable cmd_evaluate_msf(const RunConfig& cfg, const std::string& env_file,
                                              const std::vector<std::string>& ckpt_args, OutputDir& out) {
    std::vector<LabelledCheckpoint> ckpts;
    for (const auto& a : ckpt_args) ckpts.push_back(parse_labelled(a));
    const auto plan = load_plan(env_file, cfg.d_crash);
    auto table = evaluate_checkpoints(cfg, *plan, ckpts);
    out.write("msf.csv", table.to_csv());
    return table;
}

// ---- cost-report -----------------------------------------------------------

inline std::string cost_report_csv(const nn::NetworkSpec& spec, const std::vector<nn::TrainType>& types) {
    const auto total_w = nn::count_total_weights(spec);
    const auto total_f = nn::count_flops(spec, nn::TrainType::e2e()).total_flops;
    std::string out = "train_type,trainable_weights,pct_weights,trainable_flops,pct_flops,total_weights,total_flops\n";
    for (const auto tt : types) {
        const auto w = nn::count_trainable_weights(spec, tt);
        const auto f = nn::count_flops(spec, tt).trainable_flops;
        char pw[32], pf[32];
        std::snprintf(pw, sizeof pw, "%.2f", nn::truncated_percent(w, total_w));
        std::snprintf(pf, sizeof pf, "%.2f", nn::truncated_percent(f, total_f));
        out += tt.name() + "," + std::to_string(w) + "," + pw + "," + std::to_string(f) + "," + pf + "," +
               std::to_string(total_w) + "," + std::to_string(total_f) + "\n";
    }
    return out;
}

inline std::vector<nn::TrainType> all_train_types() {
    return {nn::TrainType::e2e(), nn::TrainType::last_p(4), nn::TrainType::last_p(3), nn::TrainType::last_p(2)};
}

inline std::string cmd_cost_report(const RunConfig& cfg, const std::string& which, bool all_types, OutputDir& out) {
    nn::NetworkSpec spec;
    if (which == "reference")
        spec = nn::build_reference_network(cfg.actions.action_count());
    else if (which == "desk")
        spec = cfg.network();
    else
        throw ConfigError("--spec must be reference or desk, got '" + which + "'");
    const auto csv = cost_report_csv(spec, all_types ? all_train_types() : std::vector{cfg.train.train_type});
    out.write("cost.csv", csv);
    return csv;
}

// ---- render ----------------------------------------------------------------

/// Frames along a greedy evaluation flight from the first seeded spawn. Without a
/// checkpoint the policy is the centre bin and no heatmaps are written. A crash
/// restarts the flight from the spawn.
inline std::size_t cmd_render(const RunConfig& cfg, const std::string& env_file, const std::string& ckpt,
                              std::size_t steps, OutputDir& out) {
    const auto plan = load_plan(env_file, cfg.d_crash);
    std::optional<nn::Network> net;
    if (!ckpt.empty()) net = load_network(cfg, ckpt);
    const auto start = eval::spawn_poses(*plan, 1, cfg.eval.seed, cfg.eval).front();
    std::mt19937_64 rng(derive_seed(cfg.eval.seed, "render"));
    const std::size_t centre = action::bin_to_index(cfg.actions, cfg.actions.n / 2, cfg.actions.n / 2);
    auto pose = start;
    for (std::size_t k = 0; k < steps; ++k) {
        const auto obs = env::render(*plan, pose, cfg.camera);
        char stem[32];
        std::snprintf(stem, sizeof stem, "frame_%04zu", k);
        static const char* channel_names[3] = {"depth", "texture", "incidence"};
        for (std::size_t c = 0; c < 3; ++c)
            out.write(std::string(stem) + "_" + channel_names[c] + ".pgm", to_pgm(obs, c));
        std::size_t a = centre;
        if (net) {
            const auto h = eval::export_q_heatmap(*net, obs.levels, cfg.actions);
            out.write(std::string(stem) + "_heatmap.csv", h.to_csv());
            a = rl::argmax(h.q);
        }
        const auto [i, j] = action::index_to_bin(cfg.actions, a);
        const auto ex = action::execute(cfg.actions, pose, i, j, rng);
        auto turned = pose;
        turned.yaw = ex.yaw;
        const auto mv = env::sweep_move(*plan, turned, ex.displacement, cfg.d_crash);
        pose = mv.collided ? start : mv.pose;
    }
    return steps;
}

// ---- pipeline --------------------------------------------------------------

struct Cell {
    std::string env;
    action::Variant variant;
    nn::TrainType train_type;

    std::string group() const { return env + "/" + action::to_string(variant); }
    std::string id() const { return group() + "/" + train_type.name(); }
    std::string dir() const { return env + "_" + action::to_string(variant) + "_" + train_type.name(); }
};

/// Test environment x action-space variant x train type, e2e first in each group.
inline std::vector<Cell> experiment_grid() {
    using V = action::Variant;
    const std::vector<std::pair<std::string, V>> groups{
        {"cloud", V::normal}, {"cloud", V::dilated}, {"condo", V::normal}, {"condo", V::rotated}, {"twisty", V::normal}};
    std::vector<Cell> cells;
    for (const auto& [e, v] : groups)
        for (const auto tt : all_train_types()) cells.push_back({e, v, tt});
    return cells;
}

struct PipelineArgs {
    bool dry_run = false;
    std::string meta_ckpt;            // reuse instead of running the offline phase
    std::vector<std::string> groups;  // "env/variant" filter, empty = all
    std::ostream* log = nullptr;
};

inline std::string grid_text(const std::vector<Cell>& cells, std::uint64_t seed) {
    std::string out = "cell,env,variant,train_type,seed\n";
    for (const auto& c : cells)
        out += c.id() + "," + c.env + "," + action::to_string(c.variant) + "," + c.train_type.name() + "," +
               std::to_string(derive_seed(seed, "cell/" + c.id())) + "\n";
    return out;
}

inline std::vector<Cell> selected_cells(const PipelineArgs& args) {
    auto cells = experiment_grid();
    if (args.groups.empty()) return cells;
    for (const auto& g : args.groups)
        if (std::none_of(cells.begin(), cells.end(), [&](const Cell& c) { return c.group() == g; }))
            throw ConfigError("unknown pipeline group '" + g + "'");
    std::erase_if(cells, [&](const Cell& c) {
        return std::find(args.groups.begin(), args.groups.end(), c.group()) == args.groups.end();
    });
    return cells;
}

/// Offline on the meta set, online per cell, then one comparison table per
/// (env, variant) group. Returns the summary CSV.
inline std::string cmd_pipeline(const RunConfig& cfg, const PipelineArgs& args, OutputDir& out) {
    const auto cells = selected_cells(args);
    out.write("grid.csv", grid_text(cells, cfg.seed));
    if (args.dry_run) return grid_text(cells, cfg.seed);
    if (!args.meta_ckpt.empty() && !std::filesystem::exists(args.meta_ckpt))
        throw ConfigError("meta checkpoint not found: " + args.meta_ckpt);

    const auto meta_plans = env::make_meta_set(cfg.pipeline.meta_count, cfg.pipeline.env_seed);
    for (const auto& p : meta_plans) out.write("plans/" + p.name + ".plan", env::to_text(p));
    std::map<std::string, std::shared_ptr<const env::FloorPlan>> test_plans;
    for (const auto& name : env::test_preset_names()) {
        auto p = env::make_preset(name, cfg.pipeline.env_seed);
        out.write("plans/" + p.name + ".plan", env::to_text(p));
        test_plans[name] = std::make_shared<const env::FloorPlan>(std::move(p));
    }

    // offline phase runs with the normal action space; the variants share its action count
    RunConfig base = cfg;
    base.actions = action::with_variant(action::Variant::normal, cfg.actions);
    std::optional<nn::Network> meta;
    if (!args.meta_ckpt.empty()) {
        meta = load_network(base, args.meta_ckpt);
    } else {
        std::vector<rl::NavEnvironment> envs;
        for (const auto& p : meta_plans) envs.push_back(base.make_env(std::make_shared<const env::FloorPlan>(p)));
        rl::TrainConfig tc = cfg.train;
        tc.train_type = nn::TrainType::e2e();
        tc.max_steps = cfg.pipeline.offline_steps;
        tc.seed = derive_seed(cfg.seed, "offline");
        auto res = rl::train_offline(envs, base.network(), tc, progress_hooks<env::AgentPose>(args.log, "offline"));
        nn::save_checkpoint(res.network, out.record("meta/model.ckpt"));
        out.write("meta/returns.csv", res.result.log.to_csv());
        out.write("meta/result.json", result_json(res.result).dump(2) + "\n");
        meta = std::move(res.network);
    }

    std::string summary = "cell,stop_reason,steps,updates,final_moving_avg,msf_m,ratio_vs_e2e\n";
    std::size_t k = 0;
    while (k < cells.size()) {
        const std::string group = cells[k].group();
        RunConfig gc = cfg;
        gc.actions = action::with_variant(cells[k].variant, cfg.actions);
        const auto plan = test_plans.at(cells[k].env);
        gc.eval.seed = derive_seed(cfg.eval.seed, "eval/" + cells[k].env);

        std::optional<double> baseline;
        std::vector<std::pair<nn::TrainType, eval::EvalReport>> reports;
        std::vector<std::pair<Cell, rl::TrainResult>> results;
        for (; k < cells.size() && cells[k].group() == group; ++k) {
            const Cell& c = cells[k];
            rl::TrainConfig tc = cfg.train;
            tc.train_type = c.train_type;
            tc.max_steps = cfg.pipeline.online_steps;
            tc.seed = derive_seed(cfg.seed, "cell/" + c.id());
            auto res = rl::train_online(gc.make_env(plan), *meta, tc, c.train_type.is_e2e() ? std::nullopt : baseline,
                                        progress_hooks<env::AgentPose>(args.log, c.id()));
            if (c.train_type.is_e2e()) baseline = res.result.log.moving_average();
            nn::save_checkpoint(res.network, out.record("cells/" + c.dir() + "/model.ckpt"));
            out.write("cells/" + c.dir() + "/returns.csv", res.result.log.to_csv());
            out.write("cells/" + c.dir() + "/result.json", result_json(res.result).dump(2) + "\n");
            reports.emplace_back(c.train_type, eval::evaluate_msf(*plan, res.network, gc.actions, gc.eval, gc.camera));
            results.emplace_back(c, std::move(res.result));
            if (args.log) *args.log << c.id() << ": " << results.back().second.stop_reason << ", msf "
                                    << reports.back().second.msf << " m\n" << std::flush;
        }
        const auto meta_rep = eval::evaluate_msf(*plan, *meta, gc.actions, gc.eval, gc.camera);
        std::optional<eval::ComparisonTable> table;
        if (std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.first.is_e2e(); })) {
            table = eval::compare_train_types(reports, gc.network(), meta_rep);
            out.write("compare/" + cells[k - 1].env + "_" + action::to_string(cells[k - 1].variant) + ".csv",
                      table->to_csv());
        }
        for (std::size_t r = 0; r < results.size(); ++r) {
            const auto& [c, res] = results[r];
            const double ratio = table ? table->find(c.train_type.name())->ratio_vs_e2e : std::nan("");
            summary += c.id() + "," + res.stop_reason + "," + std::to_string(res.steps) + "," +
                       std::to_string(res.updates) + "," + rl::format_number(res.log.moving_average()) + "," +
                       rl::format_number(reports[r].second.msf) + "," + rl::format_number(ratio) + "\n";
        }
        summary += group + "/meta,frozen,0,0,," + rl::format_number(meta_rep.msf) + "," +
                   rl::format_number(table ? table->find("meta")->ratio_vs_e2e : std::nan("")) + "\n";
    }
    out.write("summary.csv", summary);
    return summary;
}

}  // namespace navtl::app
