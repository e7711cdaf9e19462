#pragma once

// Normal-plane transfer matrices for Jacobi fields along a billiard orbit.
//
// A Jacobi field component is the pair (J, dJ/dt). Free flight of length l acts
// by [[1, l], [0, 1]]; a reflection off a sphere of radius r at angle phi acts by
// [[1, 0], [-k, 1]] with k = 2/(r cos phi) for the component in the plane of
// incidence and k = 2 cos(phi)/r for the transversal one. Flat mirrors act by
// the identity.

#include "focus3d/exact/polynomial.hpp"
#include "focus3d/exact/quad_ext.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace focus3d {

template <class T>
struct Mat2 {
    T m11{1}, m12{0}, m21{0}, m22{1};

    static Mat2 identity() { return {T(1), T(0), T(0), T(1)}; }

    T trace() const { return m11 + m22; }
    T det() const { return m11 * m22 - m12 * m21; }

    /// Inverse times det; equals the inverse for the unimodular matrices used here.
    Mat2 adjugate() const { return {m22, -m12, -m21, m11}; }

    Mat2 inverse() const {
        const T d = det();
        return {m22 / d, -m12 / d, -m21 / d, m11 / d};
    }

    friend Mat2 operator*(const Mat2& a, const Mat2& b) {
        return {a.m11 * b.m11 + a.m12 * b.m21, a.m11 * b.m12 + a.m12 * b.m22,
                a.m21 * b.m11 + a.m22 * b.m21, a.m21 * b.m12 + a.m22 * b.m22};
    }
    friend Mat2 operator-(const Mat2& a) { return {-a.m11, -a.m12, -a.m21, -a.m22}; }
    friend bool operator==(const Mat2& a, const Mat2& b) {
        return a.m11 == b.m11 && a.m12 == b.m12 && a.m21 == b.m21 && a.m22 == b.m22;
    }

    friend std::ostream& operator<<(std::ostream& os, const Mat2& m) {
        return os << "[[" << m.m11 << ", " << m.m12 << "], [" << m.m21 << ", " << m.m22 << "]]";
    }
};

template <class T>
Mat2<T> cube(const Mat2<T>& m) {
    return m * m * m;
}

/// 4x4 matrix acting on (J_a, J_a', J_b, J_b'); the two 2x2 diagonal blocks hold
/// the two Jacobi-field directions.
template <class T>
struct Mat4 {
    std::array<T, 16> a{};

    static Mat4 zero() {
        Mat4 m;
        m.a.fill(T(0));
        return m;
    }
    static Mat4 identity() {
        Mat4 m = zero();
        for (int i = 0; i < 4; ++i) m(i, i) = T(1);
        return m;
    }
    static Mat4 block_diag(const Mat2<T>& upper, const Mat2<T>& lower) {
        Mat4 m = zero();
        m.set_block(0, 0, upper);
        m.set_block(1, 1, lower);
        return m;
    }

    T& operator()(int i, int j) { return a[4 * i + j]; }
    const T& operator()(int i, int j) const { return a[4 * i + j]; }

    Mat2<T> block(int bi, int bj) const {
        const int r = 2 * bi, c = 2 * bj;
        return {(*this)(r, c), (*this)(r, c + 1), (*this)(r + 1, c), (*this)(r + 1, c + 1)};
    }
    void set_block(int bi, int bj, const Mat2<T>& b) {
        const int r = 2 * bi, c = 2 * bj;
        (*this)(r, c) = b.m11;
        (*this)(r, c + 1) = b.m12;
        (*this)(r + 1, c) = b.m21;
        (*this)(r + 1, c + 1) = b.m22;
    }

    T trace() const { return a[0] + a[5] + a[10] + a[15]; }

    /// Laplace expansion; fine for 4x4 and valid over any commutative ring.
    T det() const {
        auto det3 = [this](int skip_col) {
            int c[3], k = 0;
            for (int j = 0; j < 4; ++j)
                if (j != skip_col) c[k++] = j;
            const auto& m = *this;
            return m(1, c[0]) * (m(2, c[1]) * m(3, c[2]) - m(2, c[2]) * m(3, c[1])) -
                   m(1, c[1]) * (m(2, c[0]) * m(3, c[2]) - m(2, c[2]) * m(3, c[0])) +
                   m(1, c[2]) * (m(2, c[0]) * m(3, c[1]) - m(2, c[1]) * m(3, c[0]));
        };
        T acc = T(0);
        for (int j = 0; j < 4; ++j) {
            T term = (*this)(0, j) * det3(j);
            if (j % 2) acc -= term;
            else acc += term;
        }
        return acc;
    }

    std::array<T, 4> apply(const std::array<T, 4>& v) const {
        std::array<T, 4> out;
        for (int i = 0; i < 4; ++i) {
            out[i] = T(0);
            for (int j = 0; j < 4; ++j) out[i] += (*this)(i, j) * v[j];
        }
        return out;
    }

    friend Mat4 operator*(const Mat4& x, const Mat4& y) {
        Mat4 m = zero();
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k)
                for (int j = 0; j < 4; ++j) m(i, j) += x(i, k) * y(k, j);
        return m;
    }
};

struct ReflectionParams {
    double r = 1.0;
    double phi = std::numbers::pi / 4;

    void validate() const {
        if (!(r > 0.0)) throw std::invalid_argument("reflection: radius must be positive");
        if (!(phi >= 0.0)) throw std::invalid_argument("reflection: angle must be non-negative");
        if (!(phi < std::numbers::pi / 2))
            throw std::invalid_argument("reflection: angle must be below pi/2 (grazing reflection)");
    }
};

inline Mat2<double> free_flight(double l) {
    if (!(l >= 0.0)) throw std::invalid_argument("free_flight: negative length");
    return {1.0, l, 0.0, 1.0};
}

inline Mat2<exact::QuadExt> free_flight(const exact::QuadExt& l) {
    if (l.sign() < 0) throw std::invalid_argument("free_flight: negative length");
    return {1, l, 0, 1};
}

inline Mat2<double> sphere_planar(const ReflectionParams& p) {
    p.validate();
    return {1.0, 0.0, -2.0 / (p.r * std::cos(p.phi)), 1.0};
}

inline Mat2<double> sphere_transversal(const ReflectionParams& p) {
    p.validate();
    return {1.0, 0.0, -2.0 * std::cos(p.phi) / p.r, 1.0};
}

template <class T = double>
Mat2<T> flat_reflection() {
    return Mat2<T>::identity();
}

/// One focusing step of the period: T * L * P * L.
template <class T>
Mat2<T> period_factor(const Mat2<T>& flight, const Mat2<T>& planar, const Mat2<T>& transversal) {
    return transversal * flight * planar * flight;
}

namespace detail {
inline void validate_period(double l, double phi, double r) {
    if (!(l > 0.0)) throw std::invalid_argument("period_block: l must be positive");
    if (!(phi > 0.0 && phi < std::numbers::pi / 2))
        throw std::invalid_argument("period_block: phi must lie in (0, pi/2)");
    if (!(r > 0.0)) throw std::invalid_argument("period_block: r must be positive");
}
}  // namespace detail

/// A = (T L P L)^3 at reflection angle phi on spheres of radius r.
inline Mat2<double> period_block(double l, double phi, double r = 1.0) {
    detail::validate_period(l, phi, r);
    const ReflectionParams p{r, phi};
    return cube(period_factor(free_flight(l), sphere_planar(p), sphere_transversal(p)));
}

/// Block-diagonal monodromy diag(A, (TL) A (TL)^-1). The second direction starts
/// the period one reflection later, which is the planar/transversal swap.
template <class T>
Mat4<T> monodromy_from(const Mat2<T>& flight, const Mat2<T>& planar, const Mat2<T>& transversal) {
    const Mat2<T> a = cube(period_factor(flight, planar, transversal));
    const Mat2<T> tl = transversal * flight;
    return Mat4<T>::block_diag(a, tl * a * tl.adjugate());
}

inline Mat4<double> full_monodromy(double l, double phi, double r = 1.0) {
    detail::validate_period(l, phi, r);
    const ReflectionParams p{r, phi};
    return monodromy_from(free_flight(l), sphere_planar(p), sphere_transversal(p));
}

// Exact matrices at phi = pi/4, r = 1, where 1/cos(phi) = sqrt 2.
namespace exact_pi4 {

using exact::QuadExt;
using exact::QuadPoly;

inline Mat2<QuadExt> planar() { return {1, 0, QuadExt(0, -2), 1}; }
inline Mat2<QuadExt> transversal() { return {1, 0, QuadExt(0, -1), 1}; }

inline Mat2<QuadExt> period_factor(const QuadExt& l) {
    return focus3d::period_factor(free_flight(l), planar(), transversal());
}
inline Mat2<QuadExt> period_block(const QuadExt& l) { return cube(period_factor(l)); }
inline Mat4<QuadExt> full_monodromy(const QuadExt& l) {
    return monodromy_from(free_flight(l), planar(), transversal());
}

namespace detail {
inline Mat2<QuadPoly> lift(const Mat2<QuadExt>& m) { return {m.m11, m.m12, m.m21, m.m22}; }
}  // namespace detail

/// Entries are polynomials in l.
inline Mat2<QuadPoly> symbolic_flight() { return {QuadPoly(1), QuadPoly::variable(), QuadPoly(), QuadPoly(1)}; }

inline Mat2<QuadPoly> symbolic_period_factor() {
    return focus3d::period_factor(symbolic_flight(), detail::lift(planar()), detail::lift(transversal()));
}
inline Mat2<QuadPoly> symbolic_period_block() { return cube(symbolic_period_factor()); }

}  // namespace exact_pi4

}  // namespace focus3d
