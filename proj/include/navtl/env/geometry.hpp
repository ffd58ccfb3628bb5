#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace navtl::env {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * (kPi / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / kPi); }

struct Vec2 {
    double x = 0.0, y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }
/// Left-hand normal (counter-clockwise rotation by 90 degrees).
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec2 xy() const { return {x, y}; }
    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(Vec3, Vec3) = default;
};

inline double norm(Vec3 a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }

/// Ray parameter t > 0 at which o + t*d crosses segment [a, b], or +inf.
/// Parallel rays miss, including collinear grazing.
inline double ray_segment_t(Vec2 o, Vec2 d, Vec2 a, Vec2 b) {
    const Vec2 e = b - a;
    const double den = cross(d, e);
    if (den == 0.0) return kInf;
    const Vec2 w = a - o;
    const double t = cross(w, e) / den;
    const double s = cross(w, d) / den;
    if (!(t > 0.0) || s < 0.0 || s > 1.0) return kInf;
    return t;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 e = b - a;
    const double len2 = dot(e, e);
    double s = len2 > 0.0 ? dot(p - a, e) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return norm(p - (a + s * e));
}

/// Closed-segment intersection test, touching endpoints included.
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
        const double v = cross(q - p, r - p);
        return (v > 0.0) - (v < 0.0);
    };
    auto on_segment = [](Vec2 p, Vec2 q, Vec2 r) {  // r collinear with pq
        return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
               r.y <= std::max(p.y, q.y);
    };
    const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    return (o1 == 0 && on_segment(a, b, c)) || (o2 == 0 && on_segment(a, b, d)) ||
           (o3 == 0 && on_segment(c, d, a)) || (o4 == 0 && on_segment(c, d, b));
}

/// Smallest s >= 0 at which p + s*u comes within distance r of segment [a, b]
/// (entry into the capsule), or +inf. Returns 0 when p already lies inside.
inline double capsule_entry(Vec2 p, Vec2 u, Vec2 a, Vec2 b, double r) {
    if (point_segment_distance(p, a, b) <= r) return 0.0;
    double best = kInf;
    const Vec2 e = b - a;
    const double len = norm(e);
    if (len > 0.0) {
        const Vec2 t = (1.0 / len) * e;
        const Vec2 n = perp(t);
        const Vec2 w = p - a;
        const double hn = dot(w, n), dn = dot(u, n);
        if (dn != 0.0) {
            for (double side : {r, -r}) {
                const double s = (side - hn) / dn;
                if (s < 0.0 || s >= best) continue;
                const double along = dot(w + s * u, t);
                if (along >= 0.0 && along <= len) best = s;
            }
        }
    }
    const double uu = dot(u, u);
    if (uu > 0.0) {
        for (Vec2 c : {a, b}) {
            const Vec2 w = p - c;
            const double hb = dot(w, u), cc = dot(w, w) - r * r;
            const double disc = hb * hb - uu * cc;
            if (disc < 0.0) continue;
            const double s = (-hb - std::sqrt(disc)) / uu;
            if (s >= 0.0) best = std::min(best, s);
        }
    }
    return best;
}

}  // namespace navtl::env
