#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace focus3d::io {

/// Decimal rendering with 17 significant digits; round-trips every double.
/// Negative zero is written "-0.0": JSON readers take a bare "-0" as integer 0.
inline std::string format_decimal(double x) {
    if (x == 0.0 && std::signbit(x)) return "-0.0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace focus3d::io
