#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "navtl/core/error.hpp"
#include "navtl/env/floorplan.hpp"

namespace navtl::env {

struct Camera {
    std::size_t height = 64;
    std::size_t width = 64;
    double fov_h = deg2rad(90.0);
    double fov_v = deg2rad(90.0);
    double near_m = 0.1;
    double far_m = 10.0;
};

/// H x W x 3 image of 8-bit levels; value(c) = level / 255.
struct Observation {
    std::size_t height = 0, width = 0;
    std::vector<std::uint8_t> levels;

    static constexpr std::size_t kChannels = 3;

    std::uint8_t level(std::size_t y, std::size_t x, std::size_t c) const {
        return levels[(y * width + x) * kChannels + c];
    }
    float value(std::size_t y, std::size_t x, std::size_t c) const { return float(level(y, x, c)) / 255.0f; }
    std::size_t size() const { return levels.size(); }
    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Camera ray through the centre of pixel (u, v): D = f + x*right + y*up, with
/// the horizontal part `dir` shared by the whole column and `dz` = y.
struct PixelRay {
    Vec2 origin;
    Vec2 dir;
    double z = 0.0;
    double dz = 0.0;
};

inline PixelRay camera_ray(const Camera& cam, const AgentPose& pose, std::size_t u, std::size_t v) {
    const double x = std::tan(0.5 * cam.fov_h) * ((2.0 * double(u) + 1.0) / double(cam.width) - 1.0);
    const double y = std::tan(0.5 * cam.fov_v) * (1.0 - (2.0 * double(v) + 1.0) / double(cam.height));
    const Vec2 f = unit_from_angle(pose.yaw);
    const Vec2 right{f.y, -f.x};
    return {{pose.x, pose.y}, f + x * right, pose.z, y};
}

enum class Surface : int { none = -3, ceiling = -2, floor = -1 };

/// Nearest surface along a ray: wall index >= 0, or one of Surface.
struct RayHit {
    double t = kInf;
    int surface = int(Surface::none);
};

/// Floor / ceiling candidate for a ray, to be compared against the wall hit.
inline RayHit plane_hit(const FloorPlan& plan, const PixelRay& r) {
    if (r.dz < 0.0) return {(plan.floor_z - r.z) / r.dz, int(Surface::floor)};
    if (r.dz > 0.0) return {(plan.ceil_z - r.z) / r.dz, int(Surface::ceiling)};
    return {};
}

inline RayHit nearest_wall(const FloorPlan& plan, Vec2 origin, Vec2 dir) {
    RayHit best;
    for (std::size_t i = 0; i < plan.walls.size(); ++i) {
        const double t = ray_segment_t(origin, dir, plan.walls[i].a, plan.walls[i].b);
        if (t < best.t) best = {t, int(i)};
    }
    return best;
}

inline std::uint8_t to_level(double v) {
    return std::uint8_t(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

/// Writes the three channel levels for a resolved hit. Misses and hits past the
/// far plane are all zero.
inline void shade(const FloorPlan& plan, const Camera& cam, const PixelRay& r, const RayHit& hit, std::uint8_t* out) {
    const double dlen = std::sqrt(r.dir.x * r.dir.x + r.dir.y * r.dir.y + r.dz * r.dz);
    const double dist = hit.t * dlen;
    if (hit.surface == int(Surface::none) || !(dist <= cam.far_m)) {
        out[0] = out[1] = out[2] = 0;
        return;
    }
    const double inv_near = 1.0 / cam.near_m, inv_far = 1.0 / cam.far_m;
    out[0] = to_level((1.0 / std::max(dist, cam.near_m) - inv_far) / (inv_near - inv_far));
    if (hit.surface >= 0) {
        const Wall& w = plan.walls[std::size_t(hit.surface)];
        const Vec2 e = w.b - w.a;
        out[1] = to_level(double(w.texture_id) / double(kTextureCount - 1));
        out[2] = to_level(std::fabs(cross(e, r.dir)) / (norm(e) * dlen));
    } else {
        out[1] = 0;
        out[2] = to_level(std::fabs(r.dz) / dlen);
    }
}

/// Throws GeometryError when the pose lies on a wall or outside the floor/ceiling slab.
inline void check_free_pose(const FloorPlan& plan, const AgentPose& pose) {
    if (!(pose.z > plan.floor_z && pose.z < plan.ceil_z))
        throw GeometryError("pose z=" + std::to_string(pose.z) + " is outside the floor/ceiling slab");
    if (!(wall_clearance(plan, {pose.x, pose.y}) > 1e-9))
        throw GeometryError("pose (" + std::to_string(pose.x) + ", " + std::to_string(pose.y) + ") lies inside a wall");
}

/// Level camera at the pose. The wall hit is resolved once per column; floor
/// and ceiling per pixel.
inline Observation render(const FloorPlan& plan, const AgentPose& pose, const Camera& cam) {
    check_free_pose(plan, pose);
    Observation obs{cam.height, cam.width, std::vector<std::uint8_t>(cam.height * cam.width * 3)};
    for (std::size_t u = 0; u < cam.width; ++u) {
        const PixelRay top = camera_ray(cam, pose, u, 0);
        const RayHit wall = nearest_wall(plan, top.origin, top.dir);
        for (std::size_t v = 0; v < cam.height; ++v) {
            const PixelRay r = camera_ray(cam, pose, u, v);
            RayHit hit = wall;
            if (const RayHit pl = plane_hit(plan, r); pl.t < hit.t) hit = pl;
            shade(plan, cam, r, hit, &obs.levels[(v * cam.width + u) * 3]);
        }
    }
    return obs;
}

struct Cone {
    double yaw = 0.0;
    double half_angle = deg2rad(45.0);
    std::size_t ray_count = 32;
};

/// Minimum distance over a horizontal fan of rays spanning [yaw - h, yaw + h],
/// together with the vertical distances to floor and ceiling. Capped at far_m.
inline double min_clearance(const FloorPlan& plan, const AgentPose& pose, const Cone& cone, double far_m = 10.0) {
    double best = std::min({far_m, pose.z - plan.floor_z, plan.ceil_z - pose.z});
    const Vec2 o{pose.x, pose.y};
    for (std::size_t k = 0; k < cone.ray_count; ++k) {
        const double a = cone.ray_count == 1
                             ? cone.yaw
                             : cone.yaw - cone.half_angle + 2.0 * cone.half_angle * double(k) / double(cone.ray_count - 1);
        best = std::min(best, nearest_wall(plan, o, unit_from_angle(a)).t);
    }
    return best;
}

struct MoveResult {
    AgentPose pose;
    bool collided = false;
    double distance = 0.0;
};

/// Translates the pose along `disp`, stopping where the clearance first drops
/// to d_crash. Yaw is left unchanged.
inline MoveResult sweep_move(const FloorPlan& plan, const AgentPose& pose, Vec3 disp,
                             double d_crash = kDefaultCrashDistance) {
    const double len = norm(disp);
    if (len == 0.0) return {pose, false, 0.0};
    const Vec3 u = (1.0 / len) * disp;
    const Vec2 p{pose.x, pose.y}, uh{u.x, u.y};
    double s = len;
    for (const auto& w : plan.walls) s = std::min(s, capsule_entry(p, uh, w.a, w.b, d_crash));
    if (u.z < 0.0) s = std::min(s, std::max(0.0, (plan.floor_z + d_crash - pose.z) / u.z));
    if (u.z > 0.0) s = std::min(s, std::max(0.0, (plan.ceil_z - d_crash - pose.z) / u.z));

    MoveResult res;
    res.collided = s < len;
    res.distance = s;
    const Vec3 end = pose.position() + (s / len) * disp;
    res.pose = {end.x, end.y, end.z, pose.yaw};
    if (!res.collided && clearance(plan, end) < d_crash) res.collided = true;
    return res;
}

}  // namespace navtl::env
