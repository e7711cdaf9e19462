#pragma once

// Billiard tables realizing the periodic orbits in 3D.
//
// Six-sphere table: the orbit runs along six edges of a cube of side l,
// reflecting at the vertices (0,0,0) -> (l,0,0) -> (l,l,0) -> (l,l,l) -> (0,l,l)
// -> (0,0,l) -> back. Each vertex carries a unit-sphere cap whose inward normal
// bisects the two edges, so every reflection angle is pi/4.
//
// Twelve-reflection table: at each corner the orbit hits a cap on the incoming
// edge at angle phi (turning by pi - 2 phi), then a flat mirror on the outgoing
// edge at angle 3pi/4 - phi (turning by 2 phi - pi/2), so the net turn is still
// a right angle and the orbit leaves along the outgoing cube edge.

#include "focus3d/geometry/surface.hpp"
#include "focus3d/geometry/vec3.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace focus3d::geometry {

struct TableParams {
    double l = 1.0;
    double phi = std::numbers::pi / 4;
};

struct OrbitPoint {
    std::size_t patch;
    Vec3 point;
};

struct BilliardTable {
    int section = 3;  ///< 3: six spheres; 4: six spheres and six flats
    TableParams params;
    std::vector<SurfacePatch> patches;
    /// Closed reference orbit: hits 0..n, the last one back on patch 0.
    std::vector<OrbitPoint> reference_orbit;

    std::size_t hits_per_period() const { return patches.size(); }

    /// Ray leaving the first reference hit.
    Ray reference_start() const {
        return {reference_orbit.at(0).point, normalized(reference_orbit.at(1).point - reference_orbit.at(0).point)};
    }
    /// Direction arriving at the first reference hit.
    Vec3 reference_incoming() const {
        const auto n = reference_orbit.size();
        return normalized(reference_orbit.at(n - 1).point - reference_orbit.at(n - 2).point);
    }
};

struct HitRecord {
    std::size_t patch;
    Vec3 point;
    Vec3 incoming;
    Vec3 outgoing;
};

struct OrbitTrace {
    std::vector<HitRecord> hits;
    bool escaped = false;
};

struct TraceOptions {
    /// Patch ignored on the first leg, for starts sitting on a mirror.
    std::optional<std::size_t> exclude_first;
};

/// Follows the ray through n_hits reflections, nearest intersection first.
inline OrbitTrace trace_orbit(const BilliardTable& table, const Ray& start, std::size_t n_hits,
                              const TraceOptions& opt = {}) {
    if (n_hits < 1) throw std::invalid_argument("trace_orbit: n_hits must be at least 1");
    OrbitTrace out;
    out.hits.reserve(n_hits);
    Ray ray{start.origin, normalized(start.dir)};
    for (std::size_t k = 0; k < n_hits; ++k) {
        std::optional<Intersection> best;
        std::size_t best_idx = 0;
        for (std::size_t i = 0; i < table.patches.size(); ++i) {
            if (k == 0 && opt.exclude_first == i) continue;
            const auto hit = intersect(ray, table.patches[i]);
            if (hit && (!best || hit->t < best->t)) {
                best = hit;
                best_idx = i;
            }
        }
        if (!best) {
            out.escaped = true;
            break;
        }
        const Vec3 n = normal_at(table.patches[best_idx], best->point);
        const Vec3 d_out = reflect_direction(ray.dir, n);
        out.hits.push_back({best_idx, best->point, ray.dir, d_out});
        ray = {best->point, d_out};
    }
    return out;
}

namespace detail {

inline std::array<Vec3, 6> cube_path(double side) {
    const double s = side;
    return {Vec3{0, 0, 0}, Vec3{s, 0, 0}, Vec3{s, s, 0}, Vec3{s, s, s}, Vec3{0, s, s}, Vec3{0, 0, s}};
}

inline SphereCap cap_at(const Vec3& hit, const Vec3& d_in, const Vec3& d_out, double angular_radius) {
    const Vec3 n = normalized(d_out - d_in);
    return {hit + n, 1.0, -n, angular_radius};
}

inline void check_disjoint(const std::vector<SurfacePatch>& patches) {
    for (std::size_t i = 0; i < patches.size(); ++i) {
        for (std::size_t j = i + 1; j < patches.size(); ++j) {
            const auto [ci, ri] = bounding_ball(patches[i]);
            const auto [cj, rj] = bounding_ball(patches[j]);
            if (norm(ci - cj) <= ri + rj)
                throw geometry_error("patch overlap: patches " + std::to_string(i) + " and " + std::to_string(j) +
                                     " are closer than their extents");
        }
    }
}

/// Traces one period from the first hit and records it as the reference orbit;
/// fails if any leg hits a patch other than the next one in sequence.
inline void attach_reference_orbit(BilliardTable& table, const Vec3& first_hit, const Vec3& first_dir) {
    const std::size_t n = table.patches.size();
    const auto tr = trace_orbit(table, {first_hit, first_dir}, n, {.exclude_first = 0});
    if (tr.escaped) throw geometry_error("reference orbit escapes the table");
    table.reference_orbit = {{0, first_hit}};
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t expected = (k + 1) % n;
        if (tr.hits[k].patch != expected)
            throw geometry_error("free flight is obstructed: leg " + std::to_string(k) + " hits patch " +
                                 std::to_string(tr.hits[k].patch) + " instead of " + std::to_string(expected));
        table.reference_orbit.push_back({tr.hits[k].patch, tr.hits[k].point});
    }
}

}  // namespace detail

inline constexpr double kDefaultCapRadius = 0.2;

/// Six spherical caps at the cube vertices, reflection angle pi/4.
inline BilliardTable build_section3(double l, double cap_angular_radius = kDefaultCapRadius) {
    if (!(l > 0.0)) throw std::invalid_argument("build_section3: l must be positive");
    const auto v = detail::cube_path(l);
    BilliardTable table;
    table.section = 3;
    table.params = {l, std::numbers::pi / 4};
    for (std::size_t i = 0; i < 6; ++i) {
        const Vec3 d_in = normalized(v[i] - v[(i + 5) % 6]);
        const Vec3 d_out = normalized(v[(i + 1) % 6] - v[i]);
        table.patches.emplace_back(detail::cap_at(v[i], d_in, d_out, cap_angular_radius));
    }
    detail::check_disjoint(table.patches);
    detail::attach_reference_orbit(table, v[0], normalized(v[1] - v[0]));
    return table;
}

struct Section4Options {
    double detour_fraction = 0.5;  ///< sphere-to-flat leg as a fraction of l
    double cap_angular_radius = kDefaultCapRadius;
    double flat_radius = 0.2;
};

/// Six caps at reflection angle phi followed each by a flat mirror; the sphere
/// to sphere path length (through the flat) is l.
inline BilliardTable build_section4(double l, double phi, const Section4Options& opt = {}) {
    constexpr double pi = std::numbers::pi;
    if (!(l > 0.0)) throw std::invalid_argument("build_section4: l must be positive");
    if (!(phi > pi / 4 && phi < pi / 2))
        throw geometry_error("angle infeasible: phi must lie in (pi/4, pi/2) for the flat detour");
    if (!(opt.detour_fraction > 0.0 && opt.detour_fraction < 1.0))
        throw geometry_error("detour infeasible: detour_fraction must lie in (0, 1)");

    // Corner frame: u incoming edge, w outgoing edge. Sphere hit at V - a u, flat
    // hit at V + b w, joined by a leg of length m at angle theta from u.
    const double theta = pi - 2 * phi;
    const double m = opt.detour_fraction * l;
    const double a = m * std::cos(theta), b = m * std::sin(theta);
    const double side = l + m * (std::cos(theta) + std::sin(theta) - 1.0);
    if (!(side - a - b > 0.0)) throw geometry_error("detour infeasible: flat-to-sphere leg has non-positive length");

    const auto v = detail::cube_path(side);
    BilliardTable table;
    table.section = 4;
    table.params = {l, phi};
    Vec3 first_hit, first_dir;
    for (std::size_t i = 0; i < 6; ++i) {
        const Vec3 u = normalized(v[i] - v[(i + 5) % 6]);
        const Vec3 w = normalized(v[(i + 1) % 6] - v[i]);
        const Vec3 s_hit = v[i] - a * u;
        const Vec3 f_hit = v[i] + b * w;
        const Vec3 d_mid = normalized(f_hit - s_hit);
        table.patches.emplace_back(detail::cap_at(s_hit, u, d_mid, opt.cap_angular_radius));
        table.patches.emplace_back(FlatPatch{f_hit, normalized(w - d_mid), opt.flat_radius});
        if (i == 0) {
            first_hit = s_hit;
            first_dir = d_mid;
        }
    }
    detail::check_disjoint(table.patches);
    detail::attach_reference_orbit(table, first_hit, first_dir);
    return table;
}

struct HitCheck {
    std::size_t patch;
    bool sphere;
    double angle;             ///< measured reflection angle
    double specular_residual; ///< | |d_in.n| - |d_out.n| |
};

struct TableVerification {
    double closure_residual = 0;
    std::vector<HitCheck> hits;
    bool alternating = true;           ///< patch kinds alternate sphere/flat (section 4)
    std::vector<double> sphere_to_sphere;  ///< path lengths between consecutive sphere hits
};

/// Re-traces one period from the stored start and measures closure, angles,
/// specularity and sphere-to-sphere distances.
inline TableVerification verify_table(const BilliardTable& table) {
    TableVerification rep;
    const std::size_t n = table.hits_per_period();
    const auto tr = trace_orbit(table, table.reference_start(), n, {.exclude_first = 0});
    if (tr.escaped) throw geometry_error("verify_table: orbit escapes");
    rep.closure_residual = norm(tr.hits.back().point - table.reference_orbit.front().point);

    // The last hit is the start again; use it (with its true incoming direction)
    // as hit 0 so every patch is measured once.
    std::vector<HitRecord> period(tr.hits.end() - 1, tr.hits.end());
    period.insert(period.end(), tr.hits.begin(), tr.hits.end() - 1);
    Vec3 prev = period.back().point;
    double leg_since_sphere = 0;
    bool seen_sphere = false;
    for (std::size_t k = 0; k < period.size(); ++k) {
        const auto& h = period[k];
        const bool sphere = is_sphere(table.patches[h.patch]);
        const Vec3 nrm = normal_at(table.patches[h.patch], h.point);
        rep.hits.push_back({h.patch, sphere, reflection_angle(h.incoming, nrm),
                            std::abs(std::abs(dot(h.incoming, nrm)) - std::abs(dot(h.outgoing, nrm)))});
        if (table.section == 4 && sphere != (k % 2 == 0)) rep.alternating = false;
        if (k > 0) leg_since_sphere += norm(h.point - prev);
        if (sphere) {
            if (seen_sphere) rep.sphere_to_sphere.push_back(leg_since_sphere);
            seen_sphere = true;
            leg_since_sphere = 0;
        }
        prev = h.point;
    }
    // Close the loop back to hit 0.
    leg_since_sphere += norm(period.front().point - prev);
    rep.sphere_to_sphere.push_back(leg_since_sphere);
    return rep;
}

}  // namespace focus3d::geometry
