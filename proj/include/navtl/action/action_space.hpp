#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/multi_point.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include "navtl/core/error.hpp"
#include "navtl/env/floorplan.hpp"

namespace navtl::action {

using env::AgentPose;
using env::Vec3;

enum class Variant { normal, dilated, rotated };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::normal: return "normal";
        case Variant::dilated: return "dilated";
        case Variant::rotated: return "rotated";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    if (s == "normal") return Variant::normal;
    if (s == "dilated") return Variant::dilated;
    if (s == "rotated") return Variant::rotated;
    throw ConfigError("unknown action-space variant '" + s + "' (expected normal, dilated or rotated)");
}

/// Default parameter of each variant: dilation factor, or rotation as a fraction of one bin.
inline double default_variant_param(Variant v) {
    switch (v) {
        case Variant::dilated: return 1.2;
        case Variant::rotated: return 0.25;
        default: return 0.0;
    }
}

/// N x N grid over the camera field of view.
struct ActionSpaceSpec {
    std::size_t n = 5;
    double fov_h = env::deg2rad(90.0);
    double fov_v = env::deg2rad(90.0);
    double r = 0.5;
    double b = 1.0 / 15.0;
    Variant variant = Variant::normal;
    double variant_param = 0.0;

    std::size_t action_count() const { return n * n; }

    void validate() const {
        require(n >= 1 && n % 2 == 1, "action grid side N must be odd and positive");
        require(fov_h > 0.0 && fov_v > 0.0, "action-space FOV must be positive");
        require(r > 0.0, "step length r must be positive");
        require(b >= 0.0 && b < 0.5 * std::min(fov_h, fov_v) / double(n),
                "noise bound b must lie in [0, half a bin step)");
        require(variant != Variant::dilated || variant_param > 0.0, "dilation factor must be positive");
    }
};

/// `base` switched to variant `v` with that variant's default parameter.
inline ActionSpaceSpec with_variant(Variant v, ActionSpaceSpec base = ActionSpaceSpec{}) {
    base.variant = v;
    base.variant_param = default_variant_param(v);
    return base;
}

struct BinAngles {
    double theta = 0.0;  // yaw offset
    double phi = 0.0;    // pitch
};

inline BinAngles bin_angles(const ActionSpaceSpec& s, std::size_t i, std::size_t j) {
    if (i >= s.n || j >= s.n)
        throw ConfigError("action bin (" + std::to_string(i) + ", " + std::to_string(j) + ") outside a " +
                          std::to_string(s.n) + "x" + std::to_string(s.n) + " grid");
    const double step_h = s.fov_h / double(s.n), step_v = s.fov_v / double(s.n);
    const double centre = 0.5 * double(s.n - 1);
    BinAngles a{step_h * (double(i) - centre), step_v * (double(j) - centre)};
    if (s.variant == Variant::dilated) {
        a.theta *= s.variant_param;
        a.phi *= s.variant_param;
    } else if (s.variant == Variant::rotated) {
        a.theta += s.variant_param * step_h;
        a.phi += s.variant_param * step_v;
    }
    return a;
}

/// Flat index a = j*N + i.
inline std::pair<std::size_t, std::size_t> index_to_bin(const ActionSpaceSpec& s, std::size_t a) {
    if (a >= s.action_count()) throw ConfigError("action index " + std::to_string(a) + " out of range");
    return {a % s.n, a / s.n};
}

inline std::size_t bin_to_index(const ActionSpaceSpec& s, std::size_t i, std::size_t j) {
    if (i >= s.n || j >= s.n) throw ConfigError("action bin out of range");
    return j * s.n + i;
}

struct ExecutedAction {
    Vec3 displacement;
    double yaw = 0.0;    // pose yaw after the turn
    double theta = 0.0;  // executed angles, nominal plus noise
    double phi = 0.0;
};

/// Forward step of length r toward the chosen bin with independent uniform(-b, b)
/// noise on both angles. Pitch does not accumulate into the pose.
template <class Rng>
ExecutedAction execute(const ActionSpaceSpec& s, const AgentPose& pose, std::size_t i, std::size_t j, Rng& rng) {
    const BinAngles nominal = bin_angles(s, i, j);
    std::uniform_real_distribution<double> noise(-s.b, s.b);
    const double et = noise(rng);
    const double ep = noise(rng);
    ExecutedAction out;
    out.theta = nominal.theta + et;
    out.phi = nominal.phi + ep;
    out.yaw = pose.yaw + out.theta;
    const double c = std::cos(out.phi);
    out.displacement = {s.r * c * std::cos(out.yaw), s.r * c * std::sin(out.yaw), s.r * std::sin(out.phi)};
    return out;
}

inline Vec3 endpoint_offset(const ActionSpaceSpec& s, double theta, double phi) {
    const double c = std::cos(phi);
    return {s.r * c * std::cos(theta), s.r * c * std::sin(theta), s.r * std::sin(phi)};
}

inline double distance(Vec3 a, Vec3 b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

/// Largest separation between endpoints of one bin when both noise draws hit
/// the corners of the [-b, b]^2 square.
inline double corner_spread(const ActionSpaceSpec& s, std::size_t i, std::size_t j) {
    const BinAngles a = bin_angles(s, i, j);
    std::vector<Vec3> corners;
    for (double dt : {-s.b, s.b})
        for (double dp : {-s.b, s.b}) corners.push_back(endpoint_offset(s, a.theta + dt, a.phi + dp));
    double best = 0.0;
    for (std::size_t p = 0; p < corners.size(); ++p)
        for (std::size_t q = p + 1; q < corners.size(); ++q) best = std::max(best, distance(corners[p], corners[q]));
    return best;
}

/// Monte Carlo: executes bin (i, j) `samples` times from a fixed pose and returns
/// the maximum pairwise endpoint distance. Candidates are reduced to the convex
/// hull of the executed (theta, phi) pairs before the pairwise search.
inline double sampled_spread(const ActionSpaceSpec& s, std::size_t i, std::size_t j, std::size_t samples,
                             std::uint64_t seed) {
    namespace bg = boost::geometry;
    using Pt = bg::model::d2::point_xy<double>;
    std::mt19937_64 rng(seed);
    bg::model::multi_point<Pt> angles;
    angles.reserve(samples);
    const AgentPose origin{};
    for (std::size_t k = 0; k < samples; ++k) {
        const auto e = execute(s, origin, i, j, rng);
        angles.emplace_back(e.theta, e.phi);
    }
    bg::model::polygon<Pt> hull;
    bg::convex_hull(angles, hull);
    std::vector<Vec3> ends;
    for (const auto& p : hull.outer()) ends.push_back(endpoint_offset(s, p.x(), p.y()));
    double best = 0.0;
    for (std::size_t p = 0; p < ends.size(); ++p)
        for (std::size_t q = p + 1; q < ends.size(); ++q) best = std::max(best, distance(ends[p], ends[q]));
    return best;
}

}  // namespace navtl::action
