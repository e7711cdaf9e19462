#pragma once

// Linear stability of the six-sphere periodic orbits.
//
// The period block A = (TLPL)^3 is unimodular, so the orbit is elliptic
// (linearly stable) iff |trace A| < 2. With t = trace(TLPL) the trace satisfies
// trace A = t^3 - 3t, which is why tangencies of trace A with +-2 sit at t = -+1.

#include "focus3d/exact/polynomial.hpp"
#include "focus3d/io/decimal.hpp"
#include "focus3d/jacobi.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace focus3d {

/// Raised when root bracketing or polishing cannot produce a result.
class solver_error : public std::runtime_error {
public:
    solver_error(const std::string& what, double lo, double hi)
        : std::runtime_error(what + " (bracket [" + io::format_decimal(lo) + ", " + io::format_decimal(hi) + "])"),
          lo_(lo), hi_(hi) {}
    double lo() const { return lo_; }
    double hi() const { return hi_; }

private:
    double lo_, hi_;
};

namespace detail {

using Quad = boost::multiprecision::cpp_bin_float_quad;

inline void validate_phi_open(double phi, const char* who) {
    if (!(phi > 0.0 && phi < std::numbers::pi / 2))
        throw std::invalid_argument(std::string(who) + ": phi must lie in (0, pi/2)");
}

/// Coefficients of trace A as a polynomial in l at fixed phi, in quad precision.
/// The monomial form cancels heavily near phi = pi/2 (terms ~1e8 summing to -2),
/// so evaluation is carried out in 113-bit precision.
inline std::array<Quad, 7> eq_trace_coefficients(double phi) {
    const Quad c = Quad(std::cos(phi));
    const Quad sec = 1 / c;
    const Quad s1 = sec + c;
    const Quad s2 = sec * sec + c * c;
    const Quad s3 = sec * sec * sec + c * c * c + 6 * sec + 6 * c;
    return {Quad(2), -36 * s1, 228 + 96 * s2, -64 * s3, 480 + 192 * s2, -192 * s1, Quad(64)};
}

}  // namespace detail

/// Evaluates trace A and its l-derivative at a fixed angle.
class TraceEvaluator {
public:
    explicit TraceEvaluator(double phi) : phi_(phi) {
        detail::validate_phi_open(phi, "trace");
        c_ = detail::eq_trace_coefficients(phi);
        for (int k = 1; k < 7; ++k) d_[k - 1] = c_[k] * k;
    }

    double phi() const { return phi_; }

    double value(double l) const { return static_cast<double>(horner(c_, l)); }
    detail::Quad quad_value(double l) const { return horner(c_, l); }
    double derivative(double l) const { return static_cast<double>(horner(d_, l)); }
    /// trace(l) - target, rounded once.
    double offset(double l, double target) const { return static_cast<double>(horner(c_, l) - target); }

    std::vector<double> coefficients() const {
        std::vector<double> out;
        for (const auto& x : c_) out.push_back(static_cast<double>(x));
        return out;
    }

private:
    template <std::size_t N>
    static detail::Quad horner(const std::array<detail::Quad, N>& c, double l) {
        const detail::Quad x(l);
        detail::Quad acc = 0;
        for (std::size_t k = N; k-- > 0;) acc = acc * x + c[k];
        return acc;
    }

    double phi_;
    std::array<detail::Quad, 7> c_;
    std::array<detail::Quad, 6> d_;
};

/// trace A as a polynomial in l. Exact coefficients are available at phi = pi/4.
struct TracePoly {
    double phi = std::numbers::pi / 4;
    std::optional<exact::QuadPoly> exact;
    exact::Polynomial<double> coeffs;

    double operator()(double l) const { return coeffs(l); }
};

/// trace((TLPL)^3) at phi = pi/4, r = 1, expanded exactly.
inline TracePoly trace_poly_exact() {
    const auto a = exact_pi4::symbolic_period_block();
    exact::QuadPoly tr = a.trace();
    TracePoly p;
    p.phi = std::numbers::pi / 4;
    p.coeffs = exact::to_double(tr);
    p.exact = std::move(tr);
    return p;
}

/// Floating coefficients of trace A at arbitrary phi.
inline TracePoly trace_poly(double phi) {
    TracePoly p;
    p.phi = phi;
    p.coeffs = exact::Polynomial<double>(TraceEvaluator(phi).coefficients());
    return p;
}

inline double trace_value(double l, double phi) {
    if (!(l >= 0.0)) throw std::invalid_argument("trace_value: l must be non-negative");
    return TraceEvaluator(phi).value(l);
}

/// Independent route: trace(M^3) = t^3 - 3t for unimodular M, t = trace(TLPL).
inline double chebyshev_trace(double l, double phi) {
    if (!(l >= 0.0)) throw std::invalid_argument("chebyshev_trace: l must be non-negative");
    detail::validate_phi_open(phi, "chebyshev_trace");
    const double c = std::cos(phi);
    const double t = 2.0 - 4.0 * (1.0 / c + c) * l + 4.0 * l * l;
    return t * t * t - 3.0 * t;
}

enum class StabilityClass { elliptic_stable, parabolic, hyperbolic_unstable };

inline std::string_view to_string(StabilityClass c) {
    switch (c) {
        case StabilityClass::elliptic_stable: return "elliptic-stable";
        case StabilityClass::parabolic: return "parabolic";
        case StabilityClass::hyperbolic_unstable: return "hyperbolic-unstable";
    }
    return "?";
}

inline constexpr double kParabolicBand = 1e-10;

struct Classification {
    StabilityClass kind;
    double trace;
    std::array<std::complex<double>, 2> eigenvalues;
};

/// Classification of a unimodular 2x2 block from its trace alone.
inline Classification classify_trace(double tr) {
    Classification c{};
    c.trace = tr;
    const double excess = std::abs(tr) - 2.0;
    if (std::abs(excess) <= kParabolicBand) {
        c.kind = StabilityClass::parabolic;
        const double lam = tr > 0 ? 1.0 : -1.0;
        c.eigenvalues = {std::complex<double>(lam), std::complex<double>(lam)};
    } else if (excess < 0) {
        c.kind = StabilityClass::elliptic_stable;
        const double im = std::sqrt(4.0 - tr * tr) / 2.0;
        c.eigenvalues = {std::complex<double>(tr / 2, im), std::complex<double>(tr / 2, -im)};
    } else {
        c.kind = StabilityClass::hyperbolic_unstable;
        const double disc = std::sqrt(tr * tr - 4.0);
        // Larger-modulus root first; the second from det = 1 to avoid cancellation.
        const double big = tr > 0 ? (tr + disc) / 2 : (tr - disc) / 2;
        c.eigenvalues = {std::complex<double>(big), std::complex<double>(1.0 / big)};
    }
    return c;
}

inline Classification classify(double l, double phi) { return classify_trace(trace_value(l, phi)); }

struct StabilityInterval {
    double lo;
    double hi;
    bool hi_truncated = false;  ///< hi is the scan limit rather than a root
};

struct BoundaryPoint {
    double l;
    double trace;
    bool tangency;  ///< trace touches +-2 without crossing
};

struct StabilityReport {
    double phi = 0;
    double l_max = 0;
    std::vector<StabilityInterval> intervals;
    std::vector<BoundaryPoint> endpoints;         ///< crossings and the l = 0 boundary
    std::vector<BoundaryPoint> exception_points;  ///< tangencies strictly inside an interval
    std::vector<BoundaryPoint> other_tangencies;  ///< tangencies in unstable regions
    std::optional<double> window;                 ///< epsilon above 1/cos(phi), when defined
};

struct ScanOptions {
    double step_fraction = 1e-3;  ///< pre-scan step relative to l_max
    double root_tol = 1e-12;
    double tangency_tol = 1e-9;  ///< |trace -+ 2| at a candidate tangency
    double min_crossing_slope = 1e-6;
};

namespace detail {

template <class F>
double bisect(F&& f, double lo, double hi, double tol) {
    double flo = f(lo);
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline std::vector<double> uniform_grid(double lo, double hi, double step) {
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
    std::vector<double> g;
    g.reserve(n + 1);
    for (std::size_t k = 0; k < n; ++k) g.push_back(lo + static_cast<double>(k) * (hi - lo) / static_cast<double>(n));
    g.push_back(hi);
    return g;
}

struct RootScan {
    std::vector<double> crossings;
    std::vector<double> tangencies;
};

/// Sign-change roots and tangencies of trace - target on the grid, for each target.
/// Trace values are computed once per grid point and shared across targets.
inline std::vector<RootScan> scan_roots(const TraceEvaluator& ev, std::span<const double> targets,
                                        std::span<const double> grid, const ScanOptions& opt) {
    std::vector<Quad> qv(grid.size());
    std::vector<double> dv(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        qv[k] = ev.quad_value(grid[k]);
        dv[k] = ev.derivative(grid[k]);
    }
    auto dg = [&](double l) { return ev.derivative(l); };
    auto dedupe = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end(), [](double x, double y) { return std::abs(x - y) < 1e-9; }), v.end());
    };

    std::vector<RootScan> out;
    for (double target : targets) {
        RootScan rs;
        auto g = [&](double l) { return ev.offset(l, target); };
        std::vector<double> gv(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) gv[k] = static_cast<double>(qv[k] - target);
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
            const double a = grid[k], b = grid[k + 1];
            double root = std::nan("");
            if (gv[k] == 0.0) {
                root = a;
            } else if ((gv[k] < 0) != (gv[k + 1] < 0) && gv[k + 1] != 0.0) {
                root = bisect(g, a, b, opt.root_tol);
            }
            if (!std::isnan(root) && std::abs(dg(root)) >= opt.min_crossing_slope) rs.crossings.push_back(root);
            // Extremum of trace in the cell: candidate tangency.
            if (dv[k] == 0.0 || (dv[k] < 0) != (dv[k + 1] < 0)) {
                const double x = dv[k] == 0.0 ? a : bisect(dg, a, b, opt.root_tol);
                if (std::abs(g(x)) < opt.tangency_tol) rs.tangencies.push_back(x);
            }
        }
        if (gv.back() == 0.0 && std::abs(dg(grid.back())) >= opt.min_crossing_slope)
            rs.crossings.push_back(grid.back());
        dedupe(rs.crossings);
        dedupe(rs.tangencies);
        out.push_back(std::move(rs));
    }
    return out;
}

}  // namespace detail

/// First sign crossing of |trace| - 2 above l = 1/cos(phi); epsilon is its
/// distance from 1/cos(phi). Tangencies inside the window do not end it.
inline double epsilon_window(double phi, const ScanOptions& opt = {}) {
    if (!(phi >= std::numbers::pi / 4 - 1e-12 && phi < std::numbers::pi / 2))
        throw std::invalid_argument("epsilon_window: phi must lie in [pi/4, pi/2)");
    const TraceEvaluator ev(phi);
    const double l0 = 1.0 / std::cos(phi);
    // Step off the parabolic point by a small fraction of the window, which is about cos(phi) wide.
    const double start = l0 + std::max(1e-4 * std::cos(phi), 16 * (std::nextafter(l0, 2 * l0) - l0));
    const double v0 = ev.value(start);
    if (!(std::abs(v0) < 2.0)) throw solver_error("epsilon_window: not stable just above 1/cos(phi)", l0, start);
    const double span = l0 + 1.0;
    const auto grid = detail::uniform_grid(start, start + span, span * 5e-5);
    constexpr double targets[] = {2.0, -2.0};
    std::optional<double> first;
    for (const auto& roots : detail::scan_roots(ev, targets, grid, opt)) {
        for (double r : roots.crossings) {
            if (r > start && (!first || r < *first)) first = r;
        }
    }
    if (!first) throw solver_error("epsilon_window: no crossing found", start, start + span);
    const double eps = *first - l0;
    if (!(eps > 1e-12)) throw solver_error("epsilon_window: degenerate window", l0, *first);
    return eps;
}

inline StabilityReport stability_intervals(double phi, double l_max, const ScanOptions& opt = {}) {
    detail::validate_phi_open(phi, "stability_intervals");
    if (!(l_max > 0.0)) throw std::invalid_argument("stability_intervals: l_max must be positive");
    const TraceEvaluator ev(phi);
    const auto grid = detail::uniform_grid(0.0, l_max, opt.step_fraction * l_max);

    StabilityReport rep;
    rep.phi = phi;
    rep.l_max = l_max;

    std::vector<double> breaks{0.0, l_max};
    std::vector<BoundaryPoint> tangencies;
    constexpr double targets[] = {2.0, -2.0};
    for (const auto& roots : detail::scan_roots(ev, targets, grid, opt)) {
        for (double r : roots.crossings) breaks.push_back(r);
        for (double x : roots.tangencies) tangencies.push_back({x, ev.value(x), true});
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                 breaks.end());
    // Tangencies are not interval breaks; drop crossings that are artifacts of one.
    std::erase_if(breaks, [&](double b) {
        if (b == 0.0 || b == l_max) return false;
        return std::any_of(tangencies.begin(), tangencies.end(),
                           [&](const BoundaryPoint& t) { return std::abs(t.l - b) < 1e-7; });
    });

    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k], b = breaks[k + 1];
        if (!(std::abs(ev.value(0.5 * (a + b))) < 2.0)) continue;
        if (!rep.intervals.empty() && rep.intervals.back().hi == a) {
            rep.intervals.back().hi = b;
        } else {
            rep.intervals.push_back({a, b, false});
        }
    }
    for (auto& iv : rep.intervals) {
        iv.hi_truncated = iv.hi == l_max && std::abs(std::abs(ev.value(l_max)) - 2.0) > opt.tangency_tol;
        rep.endpoints.push_back({iv.lo, ev.value(iv.lo), false});
        if (!iv.hi_truncated) rep.endpoints.push_back({iv.hi, ev.value(iv.hi), false});
    }
    std::sort(tangencies.begin(), tangencies.end(), [](const auto& x, const auto& y) { return x.l < y.l; });
    for (const auto& t : tangencies) {
        const bool inside = std::any_of(rep.intervals.begin(), rep.intervals.end(),
                                        [&](const StabilityInterval& iv) { return t.l > iv.lo && t.l < iv.hi; });
        (inside ? rep.exception_points : rep.other_tangencies).push_back(t);
    }
    if (phi >= std::numbers::pi / 4 - 1e-12) rep.window = epsilon_window(phi, opt);
    return rep;
}

struct SweepRow {
    double phi;
    double l;
    Classification cls;
};

/// Row-major over (phi, l).
inline std::vector<SweepRow> sweep(std::span<const double> phi_grid, std::span<const double> l_grid) {
    std::vector<SweepRow> rows;
    rows.reserve(phi_grid.size() * l_grid.size());
    for (double phi : phi_grid) {
        const TraceEvaluator ev(phi);
        for (double l : l_grid) {
            if (!(l >= 0.0)) throw std::invalid_argument("sweep: l must be non-negative");
            rows.push_back({phi, l, classify_trace(ev.value(l))});
        }
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
    os << "phi,l,trace,class\n";
    for (const auto& r : rows) {
        os << io::format_decimal(r.phi) << ',' << io::format_decimal(r.l) << ',' << io::format_decimal(r.cls.trace)
           << ',' << to_string(r.cls.kind) << '\n';
    }
}

}  // namespace focus3d
