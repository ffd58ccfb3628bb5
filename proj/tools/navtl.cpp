// navtl command-line entry point. Exit status: 0 success, 2 configuration
// error, 3 training divergence, 1 anything else.

#include <CLI11.hpp>
#include <iostream>

#include "navtl/app/commands.hpp"

using namespace navtl;
using navtl::app::json;

namespace {

template <class T>
void put(json& j, const std::optional<T>& v, std::initializer_list<const char*> path) {
    if (!v) return;
    json* at = &j;
    for (const char* k : path) at = &(*at)[k];
    *at = *v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Transfer-learning DRL navigation toolkit"};
    cli.require_subcommand(1);

    std::string config_file, out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> resolution;
    std::optional<std::string> variant, train_type;
    std::optional<std::uint64_t> steps;
    cli.add_option("--config", config_file, "JSON run configuration")->check(CLI::ExistingFile);
    cli.add_option("--out", out_dir, "output directory");
    cli.add_option("--seed", seed, "global seed");
    cli.add_option("--resolution", resolution, "observation width and height in pixels");
    cli.fallthrough();

    std::string preset;
    std::size_t count = 1;
    auto* gen = cli.add_subcommand("gen-env", "generate floor-plan files from a preset");
    gen->add_option("--preset", preset, "meta, cloud, condo or twisty")->required();
    gen->add_option("--count", count, "number of meta environments");

    std::string envs_dir, env_file, init;
    std::optional<double> baseline;
    auto* off = cli.add_subcommand("train-offline", "offline phase over a directory of floor plans");
    off->add_option("--envs", envs_dir, "directory of .plan files")->required();
    off->add_option("--steps", steps, "training steps");

    auto* on = cli.add_subcommand("train-online", "fine-tune a meta checkpoint in one environment");
    on->add_option("--env", env_file, "floor-plan file")->required();
    on->add_option("--init", init, "meta checkpoint")->required();
    on->add_option("--baseline", baseline, "moving-average return to match (caps at 2x steps)");
    on->add_option("--train-type", train_type, "e2e, last4, last3 or last2");
    on->add_option("--variant", variant, "normal, dilated or rotated");
    on->add_option("--steps", steps, "training budget");

    std::vector<std::string> ckpts;
    std::optional<std::size_t> spawns;
    std::optional<double> cap;
    auto* ev = cli.add_subcommand("evaluate-msf", "mean safe flight of one or more checkpoints");
    ev->add_option("--env", env_file, "floor-plan file")->required();
    ev->add_option("--ckpt", ckpts, "[train_type=]checkpoint, repeatable")->required();
    ev->add_option("--spawns", spawns, "number of seeded spawn poses");
    ev->add_option("--cap", cap, "flight distance cap in metres");
    ev->add_option("--variant", variant, "normal, dilated or rotated");

    std::string which = "reference";
    bool all_types = false;
    auto* cost = cli.add_subcommand("cost-report", "trainable weights and FLOPs per train type");
    cost->add_option("--spec", which, "reference or desk");
    cost->add_flag("--all-train-types", all_types, "one row per train type");
    cost->add_option("--train-type", train_type, "row to report without --all-train-types");

    std::string ckpt;
    std::size_t frames = 10;
    auto* ren = cli.add_subcommand("render", "observation channels and Q heatmaps along a flight");
    ren->add_option("--env", env_file, "floor-plan file")->required();
    ren->add_option("--ckpt", ckpt, "checkpoint (omit for observations only)");
    ren->add_option("--steps", frames, "number of frames");
    ren->add_option("--variant", variant, "normal, dilated or rotated");

    app::PipelineArgs pargs;
    std::optional<std::uint64_t> offline_steps, online_steps;
    std::optional<std::size_t> meta_count;
    auto* pipe = cli.add_subcommand("pipeline", "offline, online per cell, evaluation and comparison");
    pipe->add_flag("--dry-run", pargs.dry_run, "print the experiment grid only");
    pipe->add_option("--meta", pargs.meta_ckpt, "existing meta checkpoint (skips the offline phase)");
    pipe->add_option("--group", pargs.groups, "env/variant group to run, repeatable");
    pipe->add_option("--offline-steps", offline_steps);
    pipe->add_option("--online-steps", online_steps);
    pipe->add_option("--meta-count", meta_count);

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = cli.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        json over = json::object();
        put(over, seed, {"seed"});
        put(over, resolution, {"resolution"});
        put(over, variant, {"actions", "variant"});
        put(over, train_type, {"train", "train_type"});
        put(over, spawns, {"eval", "spawns"});
        put(over, cap, {"eval", "cap_m"});
        put(over, offline_steps, {"pipeline", "offline_steps"});
        put(over, online_steps, {"pipeline", "online_steps"});
        put(over, meta_count, {"pipeline", "meta_count"});
        if (*off || *on) put(over, steps, {"train", "max_steps"});
        const auto cfg = app::load_run_config(config_file, over);

        app::OutputDir out(out_dir);
        std::string command;
        if (*gen) {
            command = "gen-env";
            app::cmd_gen_env(cfg, preset, count, out);
        } else if (*off) {
            command = "train-offline";
            const auto r = app::cmd_train_offline(cfg, envs_dir, out, &std::cerr);
            std::cout << app::result_json(r).dump() << "\n";
        } else if (*on) {
            command = "train-online";
            const auto r = app::cmd_train_online(cfg, env_file, init, baseline, out, &std::cerr);
            std::cout << app::result_json(r).dump() << "\n";
        } else if (*ev) {
            command = "evaluate-msf";
            std::cout << app::cmd_evaluate_msf(cfg, env_file, ckpts, out).to_csv();
        } else if (*cost) {
            command = "cost-report";
            std::cout << app::cmd_cost_report(cfg, which, all_types, out);
        } else if (*ren) {
            command = "render";
            app::cmd_render(cfg, env_file, ckpt, frames, out);
        } else if (*pipe) {
            command = "pipeline";
            pargs.log = &std::cerr;
            std::cout << app::cmd_pipeline(cfg, pargs, out);
        }
        out.write_manifest(command, app::to_json(cfg));
        return 0;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
