#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "navtl/core/error.hpp"
#include "navtl/core/hash.hpp"
#include "navtl/env/floorplan.hpp"

namespace navtl::env {

/// Textures 0..29 form the meta pool; 30..39 never appear in meta plans.
inline constexpr int kMetaTextureCount = 30;

inline std::vector<int> meta_texture_pool() {
    std::vector<int> p(kMetaTextureCount);
    std::iota(p.begin(), p.end(), 0);
    return p;
}

/// A pool of `size` textures of which exactly overlap*size come from the meta pool
/// and the rest from the unseen textures. Throws ConfigError if that count is not integral.
inline std::vector<int> test_texture_pool(double overlap, std::size_t size, std::uint64_t seed) {
    const double shared_f = overlap * double(size);
    const auto shared = std::size_t(std::llround(shared_f));
    require(overlap >= 0.0 && overlap <= 1.0, "texture overlap must lie in [0, 1]");
    require(std::fabs(shared_f - double(shared)) < 1e-9,
            "texture overlap " + std::to_string(overlap) + " of a pool of " + std::to_string(size) +
                " is not a whole number of textures");
    require(shared <= std::size_t(kMetaTextureCount) && size - shared <= std::size_t(kTextureCount - kMetaTextureCount),
            "texture pool request exceeds the available textures");
    std::mt19937_64 rng(seed);
    auto meta = meta_texture_pool();
    std::vector<int> unseen(kTextureCount - kMetaTextureCount);
    std::iota(unseen.begin(), unseen.end(), kMetaTextureCount);
    std::shuffle(meta.begin(), meta.end(), rng);
    std::shuffle(unseen.begin(), unseen.end(), rng);
    std::vector<int> pool(meta.begin(), meta.begin() + long(shared));
    pool.insert(pool.end(), unseen.begin(), unseen.begin() + long(size - shared));
    std::sort(pool.begin(), pool.end());
    return pool;
}

/// Fraction of the distinct textures used by `plan` that belong to the meta pool.
inline double meta_texture_overlap(const FloorPlan& plan) {
    std::set<int> used;
    for (const auto& w : plan.walls) used.insert(w.texture_id);
    if (used.empty()) return 0.0;
    const auto shared = std::count_if(used.begin(), used.end(), [](int t) { return t < kMetaTextureCount; });
    return double(shared) / double(used.size());
}

struct CorridorParams {
    std::string name = "plan";
    double corridor_width_m = 2.4;
    std::size_t segment_count = 8;
    std::vector<double> turn_angles_deg{0, 30, 45, 60, 90};  // magnitudes; sign is drawn
    std::vector<int> texture_pool = meta_texture_pool();
    bool loop = false;
    double min_segment_m = 4.0;
    double max_segment_m = 8.0;
    double floor_z = 0.0;
    double ceil_z = 3.0;
    double d_crash = kDefaultCrashDistance;
    int max_attempts = 200;
};

namespace detail {

struct Centerline {
    std::vector<Vec2> points;     // open: n+1 points; loop: n points (closing edge implicit)
    std::vector<double> heading;  // per segment
};

inline bool draw_open(const CorridorParams& p, std::mt19937_64& rng, Centerline& c) {
    std::uniform_real_distribution<double> len(p.min_segment_m, p.max_segment_m);
    std::uniform_int_distribution<std::size_t> pick(0, p.turn_angles_deg.size() - 1);
    std::bernoulli_distribution flip(0.5);
    c.points = {{0.0, 0.0}};
    c.heading.clear();
    double h = 0.0;
    for (std::size_t k = 0; k < p.segment_count; ++k) {
        if (k > 0) {
            const double t = deg2rad(p.turn_angles_deg[pick(rng)]);
            h += flip(rng) ? t : -t;
        }
        c.heading.push_back(h);
        c.points.push_back(c.points.back() + len(rng) * unit_from_angle(h));
    }
    return true;
}

inline bool draw_loop(const CorridorParams& p, std::mt19937_64& rng, Centerline& c) {
    const std::size_t n = p.segment_count;
    std::uniform_real_distribution<double> len(p.min_segment_m, p.max_segment_m);
    std::uniform_int_distribution<std::size_t> pick(0, p.turn_angles_deg.size() - 1);
    std::bernoulli_distribution flip(0.5);
    // turns[k] is applied entering segment k; turns[0] closes the loop
    std::vector<double> turns(n);
    bool closed = false;
    for (int tries = 0; tries < 10000 && !closed; ++tries) {
        double sum = 0.0;
        for (auto& t : turns) {
            t = p.turn_angles_deg[pick(rng)] * (flip(rng) ? 1.0 : -1.0);
            sum += t;
        }
        closed = std::fabs(std::fabs(sum) - 360.0) < 1e-9;
    }
    if (!closed) return false;
    c.heading.assign(n, 0.0);
    double h = 0.0;
    for (std::size_t k = 1; k < n; ++k) c.heading[k] = h += deg2rad(turns[k]);
    Vec2 sum{};
    std::vector<double> lengths(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        lengths[k] = len(rng);
        sum = sum + lengths[k] * unit_from_angle(c.heading[k]);
    }
    // remaining two lengths close the polygon: l1*d1 + l2*d2 = -sum
    const Vec2 d1 = unit_from_angle(c.heading[n - 2]), d2 = unit_from_angle(c.heading[n - 1]);
    const double den = cross(d1, d2);
    if (std::fabs(den) < 1e-6) return false;
    const Vec2 rhs = Vec2{} - sum;
    lengths[n - 2] = cross(rhs, d2) / den;
    lengths[n - 1] = cross(d1, rhs) / den;
    if (lengths[n - 2] < p.min_segment_m || lengths[n - 1] < p.min_segment_m) return false;
    c.points = {{0.0, 0.0}};
    for (std::size_t k = 0; k + 1 < n; ++k)
        c.points.push_back(c.points.back() + lengths[k] * unit_from_angle(c.heading[k]));
    return true;
}

/// Left (+) and right (-) mitered offsets of every centerline vertex.
inline bool offset_sides(const Centerline& c, bool loop, double half_w, std::vector<Vec2>& left,
                         std::vector<Vec2>& right) {
    const std::size_t nv = c.points.size(), ns = c.heading.size();
    left.resize(nv);
    right.resize(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        const bool has_in = loop || v > 0, has_out = loop || v < ns;
        const std::size_t s_in = (v + ns - 1) % ns, s_out = v % ns;
        Vec2 m;
        double scale = half_w;
        if (has_in && has_out) {
            const Vec2 n0 = perp(unit_from_angle(c.heading[s_in])), n1 = perp(unit_from_angle(c.heading[s_out]));
            const Vec2 sum = n0 + n1;
            const double ln = norm(sum);
            if (ln < 1e-9) return false;
            m = (1.0 / ln) * sum;
            scale = half_w / dot(m, n0);
        } else {
            m = perp(unit_from_angle(c.heading[has_out ? s_out : s_in]));
        }
        left[v] = c.points[v] + scale * m;
        right[v] = c.points[v] - scale * m;
    }
    // each offset edge must keep the direction of its centerline segment
    for (std::size_t s = 0; s < ns; ++s) {
        const std::size_t a = s, b = (s + 1) % nv;
        const Vec2 d = unit_from_angle(c.heading[s]);
        if (dot(left[b] - left[a], d) <= 1e-6 || dot(right[b] - right[a], d) <= 1e-6) return false;
    }
    return true;
}

inline bool self_intersects(const std::vector<Wall>& walls) {
    for (std::size_t i = 0; i < walls.size(); ++i)
        for (std::size_t j = i + 1; j < walls.size(); ++j) {
            const auto &a = walls[i], &b = walls[j];
            const bool adjacent = a.a == b.a || a.a == b.b || a.b == b.a || a.b == b.b;
            if (!adjacent && segments_intersect(a.a, a.b, b.a, b.b)) return true;
        }
    return false;
}

}  // namespace detail

/// Builds a corridor (open with end caps, or a closed loop) from a seeded random
/// centerline. Draws are retried up to max_attempts times from the same stream;
/// GeometryError if no draw yields a simple, spawnable corridor.
inline FloorPlan generate_floorplan(std::uint64_t seed, const CorridorParams& p) {
    require(p.segment_count >= 2, "segment_count must be at least 2");
    require(!p.loop || p.segment_count >= 3, "a loop needs at least 3 segments");
    require(p.corridor_width_m >= 3.0 * p.d_crash, "corridor_width must be at least 3 x d_crash");
    require(!p.turn_angles_deg.empty(), "turn angle set is empty");
    for (double t : p.turn_angles_deg) require(t >= 0.0 && t < 150.0, "turn angles must lie in [0, 150) degrees");
    require(!p.texture_pool.empty(), "texture pool is empty");
    for (int t : p.texture_pool) require(t >= 0 && t < kTextureCount, "texture id out of range");
    require(p.min_segment_m > 0.0 && p.min_segment_m <= p.max_segment_m, "bad segment length range");
    require(p.ceil_z - p.floor_z >= 3.0 * p.d_crash, "room height must be at least 3 x d_crash");
    require(p.name.find_first_of(" \t\n#") == std::string::npos && !p.name.empty(),
            "plan name must be a non-empty single token");

    std::mt19937_64 rng(seed);
    const double half_w = 0.5 * p.corridor_width_m;
    for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
        detail::Centerline c;
        if (!(p.loop ? detail::draw_loop(p, rng, c) : detail::draw_open(p, rng, c))) continue;
        std::vector<Vec2> left, right;
        if (!detail::offset_sides(c, p.loop, half_w, left, right)) continue;

        FloorPlan plan;
        plan.name = p.name;
        plan.floor_z = p.floor_z;
        plan.ceil_z = p.ceil_z;
        const std::size_t nv = c.points.size(), ns = c.heading.size();
        for (const auto* side : {&left, &right})
            for (std::size_t s = 0; s < ns; ++s) plan.walls.push_back({(*side)[s], (*side)[(s + 1) % nv], 0});
        if (!p.loop) {
            plan.walls.push_back({left.front(), right.front(), 0});
            plan.walls.push_back({left.back(), right.back(), 0});
        }
        if (detail::self_intersects(plan.walls)) continue;

        // textures: the shuffled pool is cycled so every pool entry is used once walls >= pool size
        std::vector<int> order = p.texture_pool;
        for (std::size_t w = 0; w < plan.walls.size(); ++w) {
            if (w % order.size() == 0) std::shuffle(order.begin(), order.end(), rng);
            plan.walls[w].texture_id = order[w % order.size()];
        }
        const double mid_z = 0.5 * (p.floor_z + p.ceil_z);
        for (std::size_t s = 0; s < ns; ++s) {
            const Vec2 m = 0.5 * (c.points[s] + c.points[(s + 1) % nv]);
            plan.spawn_points.push_back({m.x, m.y, mid_z, c.heading[s]});
        }
        try {
            validate(plan, p.d_crash);
        } catch (const GeometryError&) {
            continue;
        }
        return plan;
    }
    throw GeometryError("could not generate a simple corridor for '" + p.name + "' in " +
                        std::to_string(p.max_attempts) + " attempts (self-intersecting or degenerate geometry)");
}

inline constexpr std::size_t kMetaPresetCount = 8;
inline constexpr std::size_t kTestPoolSize = 20;

inline std::vector<std::string> test_preset_names() { return {"cloud", "condo", "twisty"}; }

/// Parameters of a named preset: meta-<k>, cloud, condo or twisty.
inline CorridorParams preset_params(const std::string& name, std::uint64_t seed) {
    CorridorParams p;
    p.name = name;
    if (name.rfind("meta-", 0) == 0) {
        std::size_t k = 0;
        try {
            std::size_t used = 0;
            k = std::stoul(name.substr(5), &used);
            if (used != name.size() - 5) throw ConfigError("");
        } catch (...) {
            throw ConfigError("unknown preset '" + name + "'");
        }
        static constexpr double widths[kMetaPresetCount] = {2.4, 2.8, 3.2, 2.6, 3.0, 2.4, 2.8, 3.2};
        p.corridor_width_m = widths[k % kMetaPresetCount];
        p.segment_count = 8;
        p.loop = k % 4 == 3;
        p.turn_angles_deg = p.loop ? std::vector<double>{30, 45, 60, 90} : std::vector<double>{0, 30, 45, 60, 90};
        p.texture_pool = meta_texture_pool();
    } else if (name == "cloud") {
        // test plans are closed loops so flight distance is bounded by the cap, not by a dead end
        p.loop = true;
        p.corridor_width_m = 3.0;
        p.segment_count = 10;
        p.turn_angles_deg = {0, 30, 45};
        p.texture_pool = test_texture_pool(1.0, kTestPoolSize, derive_seed(seed, "pool/cloud"));
    } else if (name == "condo") {
        p.loop = true;
        p.corridor_width_m = 2.6;
        p.segment_count = 10;
        p.turn_angles_deg = {0, 45, 90};
        p.texture_pool = test_texture_pool(0.75, kTestPoolSize, derive_seed(seed, "pool/condo"));
    } else if (name == "twisty") {
        p.loop = true;
        p.corridor_width_m = 1.8;
        p.segment_count = 10;
        p.turn_angles_deg = {60, 90, 120};
        p.min_segment_m = 4.0;
        p.max_segment_m = 7.0;
        p.texture_pool = test_texture_pool(0.5, kTestPoolSize, derive_seed(seed, "pool/twisty"));
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected meta-<k>, cloud, condo or twisty)");
    }
    return p;
}

inline FloorPlan make_preset(const std::string& name, std::uint64_t seed) {
    return generate_floorplan(derive_seed(seed, "plan/" + name), preset_params(name, seed));
}

/// meta-0 .. meta-(count-1)
inline std::vector<FloorPlan> make_meta_set(std::size_t count, std::uint64_t seed) {
    std::vector<FloorPlan> plans;
    for (std::size_t k = 0; k < count; ++k) plans.push_back(make_preset("meta-" + std::to_string(k), seed));
    return plans;
}

}  // namespace navtl::env
