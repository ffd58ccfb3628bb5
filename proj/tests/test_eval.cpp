#include <gtest/gtest.h>

#include <filesystem>

#include "navtl/env/generator.hpp"
#include "navtl/eval/compare.hpp"
#include "navtl/eval/heatmap.hpp"
#include "navtl/eval/msf.hpp"

using namespace navtl;
using namespace navtl::eval;

namespace {

// Closed box: x in [0, len], y in [-half_w, half_w].
env::FloorPlan closed_corridor(double len, double half_w) {
    env::FloorPlan p;
    p.name = "box";
    p.walls = {{{0, -half_w}, {len, -half_w}, 1},
               {{len, -half_w}, {len, half_w}, 2},
               {{len, half_w}, {0, half_w}, 3},
               {{0, half_w}, {0, -half_w}, 4}};
    p.spawn_points = {{1.0, 0.0, 1.5, 0.0}};
    return p;
}

env::Camera cam16() {
    env::Camera c;
    c.height = c.width = 16;
    return c;
}

EvalReport fake_report(const std::string& env, std::vector<double> d) {
    EvalReport r;
    r.env_name = env;
    r.cap_m = 2000;
    r.seed = 1;
    r.spawns = {{0, 0, 1, 0}};
    r.distances = std::move(d);
    double s = 0;
    for (double x : r.distances) s += x;
    r.msf = s / double(r.distances.size());
    return r;
}

}  // namespace

TEST(Fly, CenterBinRunsCorridorLength) {
    const auto plan = closed_corridor(21.0, 2.0);
    action::ActionSpaceSpec s;
    s.b = 0.0;
    const std::size_t center = action::bin_to_index(s, s.n / 2, s.n / 2);
    auto policy = [&](const std::vector<std::uint8_t>&) { return center; };
    // start at x = 1, crash distance 0.3 from the end wall at x = 21
    const double d = fly(plan, cam16(), s, plan.spawn_points[0], policy, 2000.0, 7, 0.3);
    EXPECT_NEAR(d, 21.0 - 1.0 - 0.3, 1e-9);
    EXPECT_DOUBLE_EQ(fly(plan, cam16(), s, plan.spawn_points[0], policy, 5.0, 7, 0.3), 5.0);

    action::ActionSpaceSpec noisy;  // default b = 1/15
    const double dn = fly(plan, cam16(), noisy, plan.spawn_points[0], policy, 2000.0, 7, 0.3);
    EXPECT_GE(dn, 5.0);
    EXPECT_LE(dn, 19.7 + 0.5);
}

TEST(Msf, ZeroCapGivesZero) {
    const auto plan = env::make_preset("cloud", 2);
    nn::Network net(nn::build_desk_network(25, {16, 16, 3}), 1);
    EvalConfig cfg;
    cfg.cap_m = 0.0;
    const auto rep = evaluate_msf(plan, net, {}, cfg);
    EXPECT_EQ(rep.msf, 0.0);
    EXPECT_EQ(rep.distances.size(), 10u);
}

TEST(Msf, MeanOfDistancesAndMonotoneInCap) {
    const auto plan = env::make_preset("condo", 3);
    nn::Network net(nn::build_desk_network(25, {16, 16, 3}), 4);
    double prev = -1.0;
    std::vector<double> prev_d;
    for (double cap : {2.0, 8.0, 30.0, 120.0}) {
        EvalConfig cfg;
        cfg.cap_m = cap;
        cfg.seed = 9;
        const auto rep = evaluate_msf(plan, net, {}, cfg);
        double s = 0.0;
        for (double d : rep.distances) {
            EXPECT_GE(d, 0.0);
            EXPECT_LE(d, cap);
            s += d;
        }
        EXPECT_DOUBLE_EQ(rep.msf, s / double(rep.distances.size()));
        EXPECT_GE(rep.msf, prev);
        for (std::size_t k = 0; k < prev_d.size(); ++k) EXPECT_GE(rep.distances[k], prev_d[k]);
        prev = rep.msf;
        prev_d = rep.distances;
    }
}

TEST(Msf, SpawnsSharedAcrossCheckpointsAndFree) {
    const auto plan = env::make_preset("twisty", 5);
    const auto spec = nn::build_desk_network(25, {16, 16, 3});
    nn::Network a(spec, 1), b(spec, 2);
    EvalConfig cfg;
    cfg.cap_m = 10.0;
    const auto ra = evaluate_msf(plan, a, {}, cfg), rb = evaluate_msf(plan, b, {}, cfg);
    ASSERT_EQ(ra.spawns.size(), 10u);
    EXPECT_EQ(ra.spawns, rb.spawns);
    EXPECT_NE(ra.checkpoint_id, rb.checkpoint_id);
    for (const auto& p : ra.spawns) EXPECT_GE(env::clearance(plan, p.position()), 2.0 * cfg.d_crash);
    cfg.seed = 2;
    EXPECT_NE(spawn_poses(plan, 10, 2, cfg), ra.spawns);
    const auto again = evaluate_msf(plan, a, {}, cfg = EvalConfig{.cap_m = 10.0});
    EXPECT_EQ(again.distances, ra.distances);
}

TEST(Msf, RejectsMismatchedNetwork) {
    const auto plan = env::make_preset("cloud", 1);
    nn::Network net(nn::build_desk_network(9, {16, 16, 3}), 1);
    EXPECT_THROW(evaluate_msf(plan, net, {}), ShapeError);
    EXPECT_THROW(spawn_poses(plan, 0, 1), Error);
}

TEST(Msf, CheckpointIdIsFileDigest) {
    nn::Network net(nn::build_desk_network(25, {16, 16, 3}), 3);
    const auto path = (std::filesystem::temp_directory_path() / "navtl_eval_id.ckpt").string();
    nn::save_checkpoint(net, path);
    const auto bytes = nn::read_file_bytes(path);
    Fnv1a64 h;
    h.update(bytes.data(), bytes.size());
    EXPECT_EQ(checkpoint_id(net), hex_digest(h.digest()));
    EXPECT_EQ(hex_digest(0xabc), "0000000000000abc");
    std::filesystem::remove(path);
}

TEST(Heatmap, ConstantQIsAllZero) {
    std::vector<float> q(25, 3.5f);
    const auto h = q_heatmap(q, {});
    for (double c : h.cells) EXPECT_EQ(c, 0.0);
}

TEST(Heatmap, SingleMaxAndIndexing) {
    action::ActionSpaceSpec s;
    std::vector<float> q(25);
    for (std::size_t a = 0; a < 25; ++a) q[a] = float(a % 7) - 2.0f;
    q[13] = 9.0f;
    const auto h = q_heatmap(q, s);
    std::size_t ones = 0, zeros = 0;
    for (double c : h.cells) {
        EXPECT_GE(c, 0.0);
        EXPECT_LE(c, 1.0);
        ones += c == 1.0;
        zeros += c == 0.0;
    }
    EXPECT_EQ(ones, 1u);
    EXPECT_GE(zeros, 1u);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            const float raw = q[action::bin_to_index(s, i, j)];
            EXPECT_DOUBLE_EQ(h.at(i, j), (double(raw) + 2.0) / 11.0);
        }
    const auto [i13, j13] = action::index_to_bin(s, 13);
    EXPECT_EQ(h.at(i13, j13), 1.0);
    const auto csv = h.to_csv();
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), ','), 20);
}

TEST(Heatmap, NetworkObservationShapeChecked) {
    nn::Network net(nn::build_desk_network(25, {16, 16, 3}), 3);
    const auto plan = env::make_preset("cloud", 1);
    const auto obs = env::render(plan, plan.spawn_points[0], cam16());
    const auto h = export_q_heatmap(net, obs.levels, {});
    EXPECT_EQ(h.n, 5u);
    EXPECT_THROW(export_q_heatmap(net, std::vector<std::uint8_t>(10, 0), {}), ShapeError);
}

TEST(Compare, RatiosAndCosts) {
    const auto spec = nn::build_reference_network(25);
    std::vector<std::pair<nn::TrainType, EvalReport>> reps{
        {nn::TrainType::e2e(), fake_report("cloud", {1245.7})},
        {nn::TrainType::last_p(4), fake_report("cloud", {1209.0})},
        {nn::TrainType::last_p(3), fake_report("cloud", {1000.0})},
        {nn::TrainType::last_p(2), fake_report("cloud", {900.0})}};
    const auto t = compare_train_types(reps, spec, fake_report("cloud", {110.0}));
    ASSERT_EQ(t.rows.size(), 5u);
    EXPECT_EQ(t.find("e2e")->ratio_vs_e2e, 1.0);
    EXPECT_NEAR(t.find("last4")->ratio_vs_e2e, 0.971, 5e-4);
    EXPECT_EQ(t.find("e2e")->trainable_weights, 48858522u);
    EXPECT_EQ(t.find("last4")->trainable_weights, 7358490u);
    EXPECT_EQ(t.find("last3")->trainable_weights, 3162138u);
    EXPECT_EQ(t.find("last2")->trainable_weights, 1062938u);
    EXPECT_EQ(t.find("last2")->trainable_flops, 1062938u);
    EXPECT_EQ(t.find("meta")->trainable_weights, 0u);
    const auto csv = t.to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "train_type,spawn_id,distance_m,msf_m,ratio_vs_e2e,trainable_weights,trainable_flops");
    EXPECT_NE(csv.find("last4,0,1209,1209,"), std::string::npos);
}

TEST(Compare, RejectsMismatchedSettings) {
    const auto spec = nn::build_desk_network(25, {16, 16, 3});
    auto e2e = fake_report("cloud", {10.0});
    auto other_env = fake_report("condo", {10.0});
    EXPECT_THROW(compare_train_types({{nn::TrainType::e2e(), e2e}, {nn::TrainType::last_p(2), other_env}}, spec),
                 ConfigError);
    auto other_seed = e2e;
    other_seed.seed = 2;
    EXPECT_THROW(compare_train_types({{nn::TrainType::e2e(), e2e}, {nn::TrainType::last_p(2), other_seed}}, spec),
                 ConfigError);
    auto other_spawn = e2e;
    other_spawn.spawns[0].yaw = 0.1;
    EXPECT_THROW(compare_train_types({{nn::TrainType::e2e(), e2e}}, spec, other_spawn), ConfigError);
    EXPECT_THROW(compare_train_types({{nn::TrainType::last_p(2), e2e}}, spec), ConfigError);
    EXPECT_THROW(compare_train_types({}, spec), ConfigError);
}
