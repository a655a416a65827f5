#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace maxprod {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input (non-finite argument, malformed spec string, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// A numerically checked condition failed (kernel/phi certification,
/// bound assertion, guard threshold).
class VerificationError : public Error {
public:
    using Error::Error;
};

/// A declared contract was violated at runtime (negative signal declared
/// non-negative, denominator guard, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }

    static Interval hull(const Interval& a, const Interval& b) {
        return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
    }
};

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw InputError(std::string(what) + " must be finite");
}

/// Decimal formatting with 12 significant digits; every CSV writer goes
/// through this so repeated runs are byte-identical.
inline std::string format_value(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// Round half-integers introduced by floating point noise before ceil/floor.
inline long ceil_index(double x) {
    double r = std::round(x);
    if (std::abs(x - r) < 1e-9) return static_cast<long>(r);
    return static_cast<long>(std::ceil(x));
}

inline long floor_index(double x) {
    double r = std::round(x);
    if (std::abs(x - r) < 1e-9) return static_cast<long>(r);
    return static_cast<long>(std::floor(x));
}

}  // namespace maxprod
