#pragma once

#include <cstdio>
#include <string>

namespace mcflab {

/// 17 significant digits, enough to round-trip any finite double.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace mcflab
