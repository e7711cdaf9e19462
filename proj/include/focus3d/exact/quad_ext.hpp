#pragma once

// Exact arithmetic in Q(sqrt 2): values a + b*sqrt(2) with arbitrary-precision
// rational a, b.

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <ostream>
#include <stdexcept>
#include <string>

namespace focus3d::exact {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr double kSqrt2 = 1.4142135623730951;

class QuadExt {
public:
    QuadExt() = default;
    QuadExt(Rational rat_part, Rational root_part = 0)
        : rat_(std::move(rat_part)), root_(std::move(root_part)) {}
    QuadExt(long long v) : rat_(v) {}

    static QuadExt sqrt2() { return {0, 1}; }

    const Rational& rat_part() const { return rat_; }
    const Rational& root_part() const { return root_; }

    bool is_zero() const { return rat_ == 0 && root_ == 0; }
    bool is_rational() const { return root_ == 0; }

    /// -1, 0 or +1. Uses a^2 vs 2 b^2 when the parts disagree in sign.
    int sign() const {
        const int sa = rat_.sign();
        const int sb = root_.sign();
        if (sb == 0) return sa;
        if (sa == 0) return sb;
        if (sa == sb) return sa;
        // Opposite signs: |a| vs |b| sqrt 2. Never equal since sqrt 2 is irrational.
        const Rational lhs = rat_ * rat_;
        const Rational rhs = 2 * root_ * root_;
        return lhs > rhs ? sa : sb;
    }

    QuadExt conjugate() const { return {rat_, -root_}; }

    /// a^2 - 2 b^2; zero only for the zero element.
    Rational norm() const { return rat_ * rat_ - 2 * root_ * root_; }

    double to_double() const {
        return static_cast<double>(rat_) + static_cast<double>(root_) * kSqrt2;
    }

    QuadExt& operator+=(const QuadExt& o) {
        rat_ += o.rat_;
        root_ += o.root_;
        return *this;
    }
    QuadExt& operator-=(const QuadExt& o) {
        rat_ -= o.rat_;
        root_ -= o.root_;
        return *this;
    }
    QuadExt& operator*=(const QuadExt& o) {
        Rational a = rat_ * o.rat_ + 2 * root_ * o.root_;
        Rational b = rat_ * o.root_ + root_ * o.rat_;
        rat_ = std::move(a);
        root_ = std::move(b);
        return *this;
    }
    QuadExt& operator/=(const QuadExt& o) {
        if (o.is_zero()) throw std::domain_error("QuadExt: division by zero");
        const Rational n = o.norm();
        *this *= o.conjugate();
        rat_ /= n;
        root_ /= n;
        return *this;
    }

    friend QuadExt operator+(QuadExt x, const QuadExt& y) { return x += y; }
    friend QuadExt operator-(QuadExt x, const QuadExt& y) { return x -= y; }
    friend QuadExt operator*(QuadExt x, const QuadExt& y) { return x *= y; }
    friend QuadExt operator/(QuadExt x, const QuadExt& y) { return x /= y; }
    friend QuadExt operator-(const QuadExt& x) { return {-x.rat_, -x.root_}; }

    friend bool operator==(const QuadExt& x, const QuadExt& y) {
        return x.rat_ == y.rat_ && x.root_ == y.root_;
    }
    friend std::strong_ordering operator<=>(const QuadExt& x, const QuadExt& y) {
        const int s = (x - y).sign();
        return s < 0 ? std::strong_ordering::less
               : s > 0 ? std::strong_ordering::greater
                       : std::strong_ordering::equal;
    }

    /// "a + b*sqrt(2)" with rationals rendered as "p/q".
    std::string str() const {
        std::string out = rat_.str();
        if (root_ < 0) {
            out += " - " + Rational(-root_).str();
        } else {
            out += " + " + root_.str();
        }
        return out + "*sqrt(2)";
    }

    friend std::ostream& operator<<(std::ostream& os, const QuadExt& x) { return os << x.str(); }

private:
    Rational rat_{0};
    Rational root_{0};
};

inline QuadExt quad_add(const QuadExt& x, const QuadExt& y) { return x + y; }
inline QuadExt quad_mul(const QuadExt& x, const QuadExt& y) { return x * y; }

inline double to_double(const QuadExt& x) { return x.to_double(); }
inline double to_double(double x) { return x; }

}  // namespace focus3d::exact
