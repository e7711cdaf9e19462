#pragma once

// Poincare return map of the reference orbit and its linearization.
//
// Section: the plane through the first reference hit, perpendicular to the
// outgoing direction d0. State (y_a, v_a, y_b, v_b): offsets along e_a and e_b
// and direction slopes, the ray being origin S0 + y, direction ~ d0 + v.
// e_a is normal to the plane of incidence at hit 0 (so planar at the next
// sphere), e_b lies in that plane.

#include "focus3d/geometry/table.hpp"
#include "focus3d/jacobi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace focus3d::geometry {

using State4 = std::array<double, 4>;

struct SectionFrame {
    Vec3 origin;
    Vec3 dir;
    Vec3 e_a;
    Vec3 e_b;
};

inline SectionFrame section_frame(const BilliardTable& table) {
    const Ray start = table.reference_start();
    const Vec3 e_a = normalized(cross(table.reference_incoming(), start.dir));
    return {start.origin, start.dir, e_a, cross(start.dir, e_a)};
}

inline Ray state_to_ray(const SectionFrame& f, const State4& s) {
    return {f.origin + s[0] * f.e_a + s[2] * f.e_b, normalized(f.dir + s[1] * f.e_a + s[3] * f.e_b)};
}

/// One period of the true dynamics; nullopt if the ray escapes or visits the
/// patches out of order.
inline std::optional<State4> return_map(const BilliardTable& table, const SectionFrame& f, const State4& s) {
    const std::size_t n = table.hits_per_period();
    const auto tr = trace_orbit(table, state_to_ray(f, s), n, {.exclude_first = 0});
    if (tr.escaped) return std::nullopt;
    for (std::size_t k = 0; k < n; ++k)
        if (tr.hits[k].patch != (k + 1) % n) return std::nullopt;
    const HitRecord& last = tr.hits.back();
    const double dd = dot(last.outgoing, f.dir);
    if (dd <= 0) return std::nullopt;
    const Vec3 y = last.point + (dot(f.origin - last.point, f.dir) / dd) * last.outgoing - f.origin;
    return State4{dot(y, f.e_a), dot(last.outgoing, f.e_a) / dd, dot(y, f.e_b), dot(last.outgoing, f.e_b) / dd};
}

inline std::optional<State4> return_map(const BilliardTable& table, const State4& s) {
    return return_map(table, section_frame(table), s);
}

struct MonodromyEstimate {
    Mat4<double> m;
    double h = 0;
    double richardson_residual = 0;  ///< max entry difference between steps h and h/2
    double fixed_point_residual = 0; ///< |F(0)|
    double det = 0;
    double off_block_leakage = 0;    ///< max |entry| outside the 2x2 diagonal blocks
    double trace_upper = 0;
    double trace_lower = 0;
};

namespace detail {

inline Mat4<double> central_differences(const BilliardTable& table, const SectionFrame& f, double h) {
    Mat4<double> m = Mat4<double>::zero();
    for (int j = 0; j < 4; ++j) {
        State4 plus{}, minus{};
        plus[j] = h;
        minus[j] = -h;
        const auto fp = return_map(table, f, plus);
        const auto fm = return_map(table, f, minus);
        if (!fp || !fm)
            throw geometry_error("differencing failure: perturbed orbit escapes along coordinate " + std::to_string(j));
        for (int i = 0; i < 4; ++i) m(i, j) = ((*fp)[i] - (*fm)[i]) / (2 * h);
    }
    return m;
}

}  // namespace detail

/// Finite-difference derivative of the return map at the reference orbit, from
/// central differences at steps h and h/2.
inline MonodromyEstimate numerical_monodromy(const BilliardTable& table, double h = 1e-6) {
    if (!(h >= 1e-9 && h <= 1e-4)) throw std::invalid_argument("numerical_monodromy: h must lie in [1e-9, 1e-4]");
    const SectionFrame f = section_frame(table);
    MonodromyEstimate est;
    est.h = h;
    const Mat4<double> full = detail::central_differences(table, f, h);
    const Mat4<double> half = detail::central_differences(table, f, h / 2);
    // Richardson extrapolation cancels the h^2 term of the central differences.
    for (int i = 0; i < 16; ++i) {
        est.m.a[i] = (4.0 * half.a[i] - full.a[i]) / 3.0;
        est.richardson_residual = std::max(est.richardson_residual, std::abs(full.a[i] - half.a[i]));
    }
    const auto f0 = return_map(table, f, State4{});
    if (!f0) throw geometry_error("reference orbit does not return");
    for (double x : *f0) est.fixed_point_residual = std::max(est.fixed_point_residual, std::abs(x));
    est.det = est.m.det();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i / 2 != j / 2) est.off_block_leakage = std::max(est.off_block_leakage, std::abs(est.m(i, j)));
    est.trace_upper = est.m.block(0, 0).trace();
    est.trace_lower = est.m.block(1, 1).trace();
    return est;
}

/// Max entry difference between b and +/- a, whichever sign fits.
inline double signed_block_distance(const Mat2<double>& a, const Mat2<double>& b) {
    auto dist = [&](double s) {
        return std::max({std::abs(b.m11 - s * a.m11), std::abs(b.m12 - s * a.m12), std::abs(b.m21 - s * a.m21),
                         std::abs(b.m22 - s * a.m22)});
    };
    return std::min(dist(1.0), dist(-1.0));
}

/// Analytic counterpart in the frame above: the upper block is A, the lower one
/// starts a half-step later, (P L) A (P L)^-1.
inline Mat4<double> analytic_section_monodromy(double l, double phi) {
    const Mat2<double> pl = sphere_planar({1.0, phi}) * free_flight(l);
    const Mat2<double> a = period_block(l, phi);
    return Mat4<double>::block_diag(a, pl * a * pl.adjugate());
}

enum class GrowthMode { linearized, nonlinear };

inline std::string to_string(GrowthMode m) { return m == GrowthMode::linearized ? "linearized" : "nonlinear"; }

struct GrowthRecord {
    GrowthMode mode = GrowthMode::linearized;
    double eps = 0;
    /// Deviation after each period relative to the initial one.
    std::vector<double> amplification;
    double max_amplification = 1;
    double mean_log_growth = 0;  ///< log(last amplification) / periods completed
    bool escaped = false;
    std::optional<std::size_t> escape_period;  ///< 1-based period in which the orbit was lost
};

inline constexpr std::uint64_t kDefaultSeed = 20240601;

inline State4 random_unit_state(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    State4 s{};
    double n2 = 0;
    do {
        n2 = 0;
        for (double& x : s) {
            x = u(rng);
            n2 += x * x;
        }
    } while (n2 > 1.0 || n2 < 1e-4);
    for (double& x : s) x /= std::sqrt(n2);
    return s;
}

inline double state_norm(const State4& s) { return std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3]); }

/// Iterates a unit perturbation for the given number of periods. Linearized mode
/// uses the analytic monodromy with renormalization every period; nonlinear mode
/// re-traces the perturbed orbit until it escapes.
inline GrowthRecord perturbation_growth(const BilliardTable& table, double eps, std::size_t periods, GrowthMode mode,
                                        std::uint64_t seed = kDefaultSeed) {
    if (!(eps > 0)) throw std::invalid_argument("perturbation_growth: eps must be positive");
    if (periods < 1) throw std::invalid_argument("perturbation_growth: periods must be at least 1");
    GrowthRecord rec;
    rec.mode = mode;
    rec.eps = eps;
    rec.amplification.reserve(periods);
    State4 x = random_unit_state(seed);

    if (mode == GrowthMode::linearized) {
        const Mat4<double> m = analytic_section_monodromy(table.params.l, table.params.phi);
        double log_amp = 0;
        for (std::size_t k = 0; k < periods; ++k) {
            x = m.apply(x);
            const double r = state_norm(x);
            for (double& c : x) c /= r;
            log_amp += std::log(r);
            rec.amplification.push_back(std::exp(log_amp));
            rec.max_amplification = std::max(rec.max_amplification, rec.amplification.back());
        }
        rec.mean_log_growth = log_amp / static_cast<double>(periods);
        return rec;
    }

    const SectionFrame f = section_frame(table);
    for (double& c : x) c *= eps;
    for (std::size_t k = 0; k < periods; ++k) {
        std::optional<State4> next;
        try {
            next = return_map(table, f, x);
        } catch (const geometry_error&) {
            next.reset();
        }
        if (!next) {
            rec.escaped = true;
            rec.escape_period = k + 1;
            break;
        }
        x = *next;
        rec.amplification.push_back(state_norm(x) / eps);
        rec.max_amplification = std::max(rec.max_amplification, rec.amplification.back());
    }
    if (!rec.amplification.empty())
        rec.mean_log_growth = std::log(rec.amplification.back()) / static_cast<double>(rec.amplification.size());
    return rec;
}

}  // namespace focus3d::geometry
