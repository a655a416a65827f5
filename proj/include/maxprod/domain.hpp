#pragma once

#include <string>

#include "maxprod/common.hpp"

namespace maxprod {

/// Where a modular integral or an operator lives: the whole real line
/// (integrated over a truncation window [-R, R]) or a compact interval.
struct Domain {
    enum class Flavor { real_line, interval };

    Flavor flavor = Flavor::real_line;
    double a = 0.0;          // interval bounds
    double b = 0.0;
    double halfwidth = 8.0;  // truncation half-width R for the real line

    static Domain real_line(double R = 8.0) {
        if (!(R > 0.0)) throw InputError("real-line truncation half-width must be > 0");
        Domain d;
        d.flavor = Flavor::real_line;
        d.halfwidth = R;
        return d;
    }

    static Domain interval(double a, double b) {
        if (!(a < b)) throw InputError("interval domain requires a < b");
        Domain d;
        d.flavor = Flavor::interval;
        d.a = a;
        d.b = b;
        return d;
    }

    bool is_interval() const { return flavor == Flavor::interval; }
    double lo() const { return is_interval() ? a : -halfwidth; }
    double hi() const { return is_interval() ? b : halfwidth; }

    std::string describe() const {
        if (is_interval()) return "interval:" + format_value(a) + ":" + format_value(b);
        return "real:R=" + format_value(halfwidth);
    }
};

/// Parse "real:R=8" or "interval:0:1".
inline Domain parse_domain(const std::string& s) {
    if (s.rfind("real", 0) == 0) {
        double R = 8.0;
        auto pos = s.find("R=");
        if (pos != std::string::npos) {
            try {
                R = std::stod(s.substr(pos + 2));
            } catch (const std::invalid_argument&) {
                throw InputError("bad real-line domain spec '" + s + "'");
            }
        } else if (s.size() > 5 && s[4] == ':') {
            try {
                R = std::stod(s.substr(5));
            } catch (const std::invalid_argument&) {
                throw InputError("bad real-line domain spec '" + s + "'");
            }
        }
        return Domain::real_line(R);
    }
    if (s.rfind("interval:", 0) == 0) {
        auto rest = s.substr(9);
        auto colon = rest.find(':');
        if (colon == std::string::npos)
            throw InputError("interval domain spec needs two bounds: 'interval:<a>:<b>'");
        try {
            return Domain::interval(std::stod(rest.substr(0, colon)), std::stod(rest.substr(colon + 1)));
        } catch (const std::invalid_argument&) {
            throw InputError("bad interval domain spec '" + s + "'");
        }
    }
    throw InputError("unknown domain spec '" + s + "' (use real:R=<R> or interval:<a>:<b>)");
}

}  // namespace maxprod
