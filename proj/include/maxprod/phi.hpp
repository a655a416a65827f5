#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "maxprod/common.hpp"

namespace maxprod {

/// Outcome of the numerical certification of a phi-function: the zero/
/// positivity/monotonicity/growth conditions plus convexity, all checked on
/// a geometric grid so failures are reproducible.
struct PhiCertificate {
    bool ok = false;
    double grid_lo = 1e-6;
    double grid_hi = 1e6;
    int grid_points = 0;
    std::string failure;  // empty when ok
};

/// A convex phi-function u >= 0 -> phi(u) >= 0 together with its family tag
/// and certification record. Immutable after construction.
class PhiFunction {
public:
    enum class Family { power, zygmund, exponential, custom };

    double operator()(double u) const {
        if (!(u >= 0.0)) {
            if (std::isnan(u)) throw InputError("phi evaluated at NaN");
            u = 0.0;  // tiny negative fp noise from |.| arithmetic
        }
        return eval_(u);
    }

    const std::string& name() const { return name_; }
    Family family() const { return family_; }
    const PhiCertificate& certificate() const { return cert_; }

    static PhiFunction power(double p);
    static PhiFunction zygmund(double alpha, double beta);
    static PhiFunction exponential(double gamma);
    /// Uncertified custom phi; call check_phi_conditions before use.
    static PhiFunction custom(std::string name, std::function<double(double)> fn);

private:
    PhiFunction(std::string name, Family fam, std::function<double(double)> fn)
        : name_(std::move(name)), family_(fam), eval_(std::move(fn)) {}

    friend PhiCertificate check_phi_conditions(PhiFunction& phi, int points_per_decade);

    std::string name_;
    Family family_;
    std::function<double(double)> eval_;
    PhiCertificate cert_;
};

/// Verifies phi(0) = 0, positivity on u > 0, monotone growth to infinity and
/// midpoint convexity on a geometric grid over [1e-6, 1e6]. The certificate
/// is stored in the PhiFunction and returned.
inline PhiCertificate check_phi_conditions(PhiFunction& phi, int points_per_decade = 12) {
    PhiCertificate cert;
    cert.grid_points = points_per_decade * 12 + 1;

    auto fail = [&](const std::string& why) {
        cert.ok = false;
        cert.failure = why;
        phi.cert_ = cert;
        return cert;
    };

    if (phi.eval_(0.0) != 0.0) return fail("phi(0) != 0");

    std::vector<double> grid;
    grid.reserve(cert.grid_points);
    for (int i = 0; i < cert.grid_points; ++i) {
        double e = -6.0 + 12.0 * i / (cert.grid_points - 1);
        grid.push_back(std::pow(10.0, e));
    }

    double prev = 0.0;
    for (double u : grid) {
        double v = phi.eval_(u);
        if (std::isnan(v)) return fail("phi(u) is NaN at u=" + format_value(u));
        if (!(v > 0.0)) return fail("phi(u) <= 0 at u=" + format_value(u));
        if (v + 1e-15 * std::max(1.0, std::abs(prev)) < prev)
            return fail("phi not non-decreasing at u=" + format_value(u));
        prev = v;
    }
    if (!(phi.eval_(cert.grid_hi) > 1e3 * std::max(phi.eval_(1.0), 1e-300)))
        return fail("phi does not grow to infinity on the test grid");

    // Convexity: phi(t u + (1-t) v) <= t phi(u) + (1-t) phi(v) on grid pairs.
    const double ts[] = {0.25, 0.5, 0.75};
    const size_t n = grid.size();
    for (size_t i = 0; i < n; i += 2) {
        for (size_t j = i + 1; j < n; j += 2) {
            const double u = grid[i], v = grid[j];
            const double fu = phi.eval_(u), fv = phi.eval_(v);
            for (double t : ts) {
                const double mid = phi.eval_(t * u + (1.0 - t) * v);
                const double chord = t * fu + (1.0 - t) * fv;
                if (std::isinf(chord)) continue;  // chord dominates everything finite
                if (mid > chord + 1e-9 * std::max(1.0, std::abs(chord)))
                    return fail("convexity violated between u=" + format_value(u) +
                                " and v=" + format_value(v));
            }
        }
    }

    cert.ok = true;
    phi.cert_ = cert;
    return cert;
}

inline PhiFunction PhiFunction::power(double p) {
    if (!(p >= 1.0)) throw InputError("power phi requires p >= 1 for convexity");
    std::ostringstream n;
    n << "p:" << p;
    PhiFunction phi(n.str(), Family::power,
                    [p](double u) { return p == 1.0 ? u : std::pow(u, p); });
    auto cert = check_phi_conditions(phi);
    if (!cert.ok) throw VerificationError("phi " + phi.name() + " rejected: " + cert.failure);
    return phi;
}

inline PhiFunction PhiFunction::zygmund(double alpha, double beta) {
    if (!(alpha >= 1.0) || !(beta > 0.0))
        throw InputError("zygmund phi requires alpha >= 1 and beta > 0");
    std::ostringstream n;
    n << "zygmund:" << alpha << ":" << beta;
    PhiFunction phi(n.str(), Family::zygmund, [alpha, beta](double u) {
        if (u == 0.0) return 0.0;
        return std::pow(u, alpha) * std::pow(std::log(u + std::exp(1.0)), beta);
    });
    auto cert = check_phi_conditions(phi);
    if (!cert.ok) throw VerificationError("phi " + phi.name() + " rejected: " + cert.failure);
    return phi;
}

inline PhiFunction PhiFunction::exponential(double gamma) {
    if (!(gamma > 0.0)) throw InputError("exponential phi requires gamma > 0");
    std::ostringstream n;
    n << "exp:" << gamma;
    PhiFunction phi(n.str(), Family::exponential,
                    [gamma](double u) { return std::expm1(std::pow(u, gamma)); });
    auto cert = check_phi_conditions(phi);
    if (!cert.ok)
        throw VerificationError("phi " + phi.name() + " rejected (convex only for gamma >= 1): " +
                                cert.failure);
    return phi;
}

inline PhiFunction PhiFunction::custom(std::string name, std::function<double(double)> fn) {
    return PhiFunction(std::move(name), Family::custom, std::move(fn));
}

/// Parse "p:2", "zygmund:1:1", "exp:1".
inline PhiFunction parse_phi(const std::string& s) {
    auto split = [](const std::string& str) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : str) {
            if (c == ':') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        out.push_back(cur);
        return out;
    };
    auto parts = split(s);
    try {
        if (parts[0] == "p" || parts[0] == "power") {
            if (parts.size() != 2) throw InputError("expected p:<exponent>");
            return PhiFunction::power(std::stod(parts[1]));
        }
        if (parts[0] == "zygmund") {
            if (parts.size() != 3) throw InputError("expected zygmund:<alpha>:<beta>");
            return PhiFunction::zygmund(std::stod(parts[1]), std::stod(parts[2]));
        }
        if (parts[0] == "exp") {
            if (parts.size() != 2) throw InputError("expected exp:<gamma>");
            return PhiFunction::exponential(std::stod(parts[1]));
        }
    } catch (const std::invalid_argument&) {
        throw InputError("bad numeric parameter in phi spec '" + s + "'");
    }
    throw InputError("unknown phi spec '" + s + "' (use p:<p>, zygmund:<a>:<b>, exp:<g>)");
}

}  // namespace maxprod
