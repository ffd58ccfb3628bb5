#pragma once

// Floor-plan text format, one record per line, '#' starts a comment:
//   floorplan <name>
//   floor_z <meters>
//   ceil_z <meters>
//   wall <x1> <y1> <x2> <y2> <texture_id>
//   spawn <x> <y> <z> <yaw_rad>
// Numbers are written in shortest round-trip form, so save/load is lossless.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "navtl/core/error.hpp"
#include "navtl/env/geometry.hpp"

namespace navtl::env {

inline constexpr int kTextureCount = 40;
inline constexpr double kDefaultCrashDistance = 0.3;

struct AgentPose {
    double x = 0.0, y = 0.0, z = 0.0;
    double yaw = 0.0;

    Vec3 position() const { return {x, y, z}; }
    friend bool operator==(const AgentPose&, const AgentPose&) = default;
};

struct Wall {
    Vec2 a, b;
    int texture_id = 0;

    friend bool operator==(const Wall&, const Wall&) = default;
};

struct FloorPlan {
    std::string name;
    double floor_z = 0.0;
    double ceil_z = 3.0;
    std::vector<Wall> walls;
    std::vector<AgentPose> spawn_points;

    friend bool operator==(const FloorPlan&, const FloorPlan&) = default;
};

inline double wall_clearance(const FloorPlan& plan, Vec2 p) {
    double best = kInf;
    for (const auto& w : plan.walls) best = std::min(best, point_segment_distance(p, w.a, w.b));
    return best;
}

/// Distance from a point to the nearest wall, floor or ceiling.
inline double clearance(const FloorPlan& plan, Vec3 p) {
    return std::min({wall_clearance(plan, p.xy()), p.z - plan.floor_z, plan.ceil_z - p.z});
}

/// Checks the plan invariants; throws GeometryError naming the first violation.
inline void validate(const FloorPlan& plan, double d_crash = kDefaultCrashDistance) {
    if (!(plan.ceil_z > plan.floor_z)) throw GeometryError("floor plan '" + plan.name + "': ceil_z must exceed floor_z");
    if (plan.walls.empty()) throw GeometryError("floor plan '" + plan.name + "' has no walls");
    for (std::size_t i = 0; i < plan.walls.size(); ++i) {
        const auto& w = plan.walls[i];
        if (w.texture_id < 0 || w.texture_id >= kTextureCount)
            throw GeometryError("wall " + std::to_string(i) + " texture_id " + std::to_string(w.texture_id) +
                                " outside 0.." + std::to_string(kTextureCount - 1));
        if (w.a == w.b) throw GeometryError("wall " + std::to_string(i) + " has zero length");
    }
    for (std::size_t i = 0; i < plan.spawn_points.size(); ++i)
        if (clearance(plan, plan.spawn_points[i].position()) < d_crash)
            throw GeometryError("spawn " + std::to_string(i) + " of '" + plan.name + "' is closer than " +
                                std::to_string(d_crash) + " m to a surface");
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& tok, int line) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw FormatError("floor plan line " + std::to_string(line) + ": bad number '" + tok + "'");
    return v;
}

inline int parse_int(const std::string& tok, int line) {
    int v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw FormatError("floor plan line " + std::to_string(line) + ": bad integer '" + tok + "'");
    return v;
}

}  // namespace detail

inline std::string to_text(const FloorPlan& plan) {
    using detail::fmt_double;
    std::string out = "floorplan " + plan.name + "\n";
    out += "floor_z " + fmt_double(plan.floor_z) + "\n";
    out += "ceil_z " + fmt_double(plan.ceil_z) + "\n";
    for (const auto& w : plan.walls)
        out += "wall " + fmt_double(w.a.x) + " " + fmt_double(w.a.y) + " " + fmt_double(w.b.x) + " " +
               fmt_double(w.b.y) + " " + std::to_string(w.texture_id) + "\n";
    for (const auto& s : plan.spawn_points)
        out += "spawn " + fmt_double(s.x) + " " + fmt_double(s.y) + " " + fmt_double(s.z) + " " + fmt_double(s.yaw) +
               "\n";
    return out;
}

/// Parses and validates a floor plan. FormatError on syntax, GeometryError on invariants.
inline FloorPlan from_text(const std::string& text) {
    FloorPlan plan;
    bool have_name = false, have_floor = false, have_ceil = false;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::istringstream ls(raw);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        auto expect = [&](std::size_t n) {
            if (tok.size() != n)
                throw FormatError("floor plan line " + std::to_string(line) + ": '" + tok[0] + "' takes " +
                                  std::to_string(n - 1) + " fields");
        };
        const auto num = [&](std::size_t i) { return detail::parse_double(tok[i], line); };
        if (tok[0] == "floorplan") {
            expect(2);
            plan.name = tok[1];
            have_name = true;
        } else if (tok[0] == "floor_z") {
            expect(2);
            plan.floor_z = num(1);
            have_floor = true;
        } else if (tok[0] == "ceil_z") {
            expect(2);
            plan.ceil_z = num(1);
            have_ceil = true;
        } else if (tok[0] == "wall") {
            expect(6);
            plan.walls.push_back({{num(1), num(2)}, {num(3), num(4)}, detail::parse_int(tok[5], line)});
        } else if (tok[0] == "spawn") {
            expect(5);
            plan.spawn_points.push_back({num(1), num(2), num(3), num(4)});
        } else {
            throw FormatError("floor plan line " + std::to_string(line) + ": unknown record '" + tok[0] + "'");
        }
    }
    if (!have_name || !have_floor || !have_ceil)
        throw FormatError("floor plan header needs floorplan, floor_z and ceil_z records");
    validate(plan);
    return plan;
}

inline void save_floorplan(const FloorPlan& plan, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << to_text(plan);
    if (!out) throw Error("failed writing " + path);
}

inline FloorPlan load_floorplan(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

/// Ordered set of plans with one saved pose slot per plan (empty until visited).
struct EnvLibrary {
    std::vector<FloorPlan> plans;
    std::vector<std::optional<AgentPose>> saved;

    explicit EnvLibrary(std::vector<FloorPlan> p) : plans(std::move(p)), saved(plans.size()) {
        if (plans.empty()) throw ConfigError("environment library is empty");
    }
    std::size_t size() const { return plans.size(); }
};

}  // namespace navtl::env
