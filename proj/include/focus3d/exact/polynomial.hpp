#pragma once

// Dense univariate polynomials, coefficient index = power of the variable.
// Works over QuadExt (exact) and double.

#include "focus3d/exact/quad_ext.hpp"

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace focus3d::exact {

namespace detail {
inline bool is_zero(const QuadExt& x) { return x.is_zero(); }
inline bool is_zero(double x) { return x == 0.0; }
}  // namespace detail

template <class T>
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(T constant) : coeffs_{std::move(constant)} { trim(); }
    Polynomial(std::initializer_list<T> c) : coeffs_(c) { trim(); }
    explicit Polynomial(std::vector<T> c) : coeffs_(std::move(c)) { trim(); }

    /// The monomial x.
    static Polynomial variable() { return Polynomial(std::vector<T>{T(0), T(1)}); }

    const std::vector<T>& coeffs() const { return coeffs_; }

    bool is_zero() const { return coeffs_.empty(); }

    /// Degree; the zero polynomial reports -1.
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

    /// Coefficient of x^k (zero above the degree).
    T operator[](std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : T(0); }

    T leading() const { return coeffs_.empty() ? T(0) : coeffs_.back(); }

    template <class X>
    auto operator()(const X& x) const {
        using R = decltype(std::declval<T>() * std::declval<X>());
        R acc = R(0);
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
            acc = acc * x + *it;
        }
        return acc;
    }

    Polynomial derivative() const {
        std::vector<T> d;
        for (std::size_t k = 1; k < coeffs_.size(); ++k) {
            d.push_back(coeffs_[k] * T(static_cast<long long>(k)));
        }
        return Polynomial(std::move(d));
    }

    Polynomial& operator+=(const Polynomial& o) {
        if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size(), T(0));
        for (std::size_t k = 0; k < o.coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
        trim();
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size(), T(0));
        for (std::size_t k = 0; k < o.coeffs_.size(); ++k) coeffs_[k] -= o.coeffs_[k];
        trim();
        return *this;
    }
    Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

    friend Polynomial operator+(Polynomial p, const Polynomial& q) { return p += q; }
    friend Polynomial operator-(Polynomial p, const Polynomial& q) { return p -= q; }
    friend Polynomial operator-(const Polynomial& p) { return Polynomial() - p; }

    friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
        if (p.is_zero() || q.is_zero()) return {};
        std::vector<T> c(p.coeffs_.size() + q.coeffs_.size() - 1, T(0));
        for (std::size_t i = 0; i < p.coeffs_.size(); ++i)
            for (std::size_t j = 0; j < q.coeffs_.size(); ++j) c[i + j] += p.coeffs_[i] * q.coeffs_[j];
        return Polynomial(std::move(c));
    }

    friend bool operator==(const Polynomial& p, const Polynomial& q) { return p.coeffs_ == q.coeffs_; }

    /// Euclidean division over a field: returns (quotient, remainder).
    friend std::pair<Polynomial, Polynomial> divmod(const Polynomial& num, const Polynomial& den) {
        if (den.is_zero()) throw std::domain_error("Polynomial: division by zero polynomial");
        std::vector<T> rem = num.coeffs_;
        const int dd = den.degree();
        std::vector<T> quot(std::max(0, num.degree() - dd + 1), T(0));
        for (int k = num.degree(); k >= dd; --k) {
            if (detail::is_zero(rem[k])) continue;
            T f = rem[k] / den.leading();
            quot[k - dd] = f;
            for (int j = 0; j <= dd; ++j) rem[k - dd + j] -= f * den.coeffs_[j];
        }
        return {Polynomial(std::move(quot)), Polynomial(std::move(rem))};
    }

private:
    void trim() {
        while (!coeffs_.empty() && detail::is_zero(coeffs_.back())) coeffs_.pop_back();
    }

    std::vector<T> coeffs_;
};

using QuadPoly = Polynomial<QuadExt>;

inline QuadPoly poly_mul(const QuadPoly& p, const QuadPoly& q) { return p * q; }
inline bool poly_equal(const QuadPoly& p, const QuadPoly& q) { return p == q; }

/// Exact Horner evaluation at a rational point.
inline QuadExt poly_eval(const QuadPoly& p, const Rational& l) { return p(QuadExt(l)); }
inline QuadExt poly_eval(const QuadPoly& p, const QuadExt& l) { return p(l); }

/// Floating image of the coefficients.
inline Polynomial<double> to_double(const QuadPoly& p) {
    std::vector<double> c;
    c.reserve(p.coeffs().size());
    for (const auto& x : p.coeffs()) c.push_back(x.to_double());
    return Polynomial<double>(std::move(c));
}

template <class T>
std::ostream& operator<<(std::ostream& os, const Polynomial<T>& p) {
    if (p.is_zero()) return os << "0";
    for (std::size_t k = 0; k < p.coeffs().size(); ++k) {
        if (k) os << " + ";
        os << "(" << p.coeffs()[k] << ")";
        if (k == 1) os << "*l";
        if (k > 1) os << "*l^" << k;
    }
    return os;
}

}  // namespace focus3d::exact
