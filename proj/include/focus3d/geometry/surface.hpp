#pragma once

// Mirror pieces: spherical caps (focusing) and flat disks, with ray intersection
// and specular reflection.

#include "focus3d/geometry/vec3.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace focus3d::geometry {

class geometry_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nearest-hit threshold; intersections at t <= this are the ray's own origin.
inline constexpr double kSelfHitGuard = 1e-9;
/// |d . n| below this is a tangential hit.
inline constexpr double kTangentialCos = 1e-12;

/// The part of a sphere within angular_radius of center + radius * axis.
struct SphereCap {
    Vec3 center;
    double radius = 1.0;
    Vec3 axis;  ///< unit, from the center toward the middle of the cap
    double angular_radius = 0.2;

    Vec3 apex() const { return center + radius * axis; }
    bool contains(const Vec3& p) const {
        return dot(p - center, axis) >= radius * std::cos(angular_radius) - 1e-12;
    }
    /// Unit normal pointing toward the center, i.e. into the billiard.
    Vec3 normal_at(const Vec3& p) const { return (center - p) / radius; }
};

/// Disk of the given radius in the plane through point with unit normal.
struct FlatPatch {
    Vec3 point;
    Vec3 normal;
    double radius = 0.2;

    bool contains(const Vec3& p) const { return norm(p - point) <= radius; }
    Vec3 normal_at(const Vec3&) const { return normal; }
};

using SurfacePatch = std::variant<SphereCap, FlatPatch>;

inline bool is_sphere(const SurfacePatch& p) { return std::holds_alternative<SphereCap>(p); }

/// Center of the patch and a radius bounding it.
inline std::pair<Vec3, double> bounding_ball(const SurfacePatch& patch) {
    if (const auto* s = std::get_if<SphereCap>(&patch)) {
        return {s->apex(), 2.0 * s->radius * std::sin(s->angular_radius / 2.0)};
    }
    const auto& f = std::get<FlatPatch>(patch);
    return {f.point, f.radius};
}

inline Vec3 normal_at(const SurfacePatch& patch, const Vec3& p) {
    return std::visit([&](const auto& s) { return s.normal_at(p); }, patch);
}

struct Intersection {
    double t;
    Vec3 point;
};

inline std::optional<Intersection> intersect(const Ray& ray, const SphereCap& cap) {
    const Vec3 oc = ray.origin - cap.center;
    const double b = dot(oc, ray.dir);
    const double c = dot(oc, oc) - cap.radius * cap.radius;
    const double disc = b * b - c;
    if (disc < 0) return std::nullopt;
    const double sq = std::sqrt(disc);
    // Numerically stable pair of roots.
    const double q = b > 0 ? -b - sq : -b + sq;
    double t1 = q, t2 = q != 0.0 ? c / q : 0.0;
    if (t1 > t2) std::swap(t1, t2);
    for (double t : {t1, t2}) {
        if (t <= kSelfHitGuard) continue;
        const Vec3 p = ray.at(t);
        if (cap.contains(p)) return Intersection{t, p};
    }
    return std::nullopt;
}

inline std::optional<Intersection> intersect(const Ray& ray, const FlatPatch& flat) {
    const double dn = dot(ray.dir, flat.normal);
    if (dn == 0.0) return std::nullopt;
    const double t = dot(flat.point - ray.origin, flat.normal) / dn;
    if (t <= kSelfHitGuard) return std::nullopt;
    const Vec3 p = ray.at(t);
    if (!flat.contains(p)) return std::nullopt;
    return Intersection{t, p};
}

inline std::optional<Intersection> intersect(const Ray& ray, const SurfacePatch& patch) {
    return std::visit([&](const auto& s) { return intersect(ray, s); }, patch);
}

/// Specular reflection d' = d - 2 (d.n) n at a point on the patch; renormalized.
inline Vec3 reflect_direction(const Vec3& d, const Vec3& n) {
    const double dn = dot(d, n);
    if (std::abs(dn) < kTangentialCos) throw geometry_error("tangential hit: |d.n| below 1e-12");
    return normalized(d - 2.0 * dn * n);
}

/// Reflects the ray off the patch it is heading into.
inline Ray reflect(const Ray& ray, const SurfacePatch& patch) {
    const auto hit = intersect(ray, patch);
    if (!hit) throw geometry_error("reflect: ray misses the patch");
    return {hit->point, reflect_direction(ray.dir, normal_at(patch, hit->point))};
}

/// Angle between the incoming direction and the surface normal, in [0, pi/2].
inline double reflection_angle(const Vec3& incoming, const Vec3& normal) {
    return std::acos(std::min(1.0, std::abs(dot(incoming, normal))));
}

}  // namespace focus3d::geometry
