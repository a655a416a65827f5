#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "maxprod/common.hpp"
#include "maxprod/domain.hpp"
#include "maxprod/phi.hpp"
#include "maxprod/quadrature.hpp"
#include "maxprod/signal.hpp"

namespace maxprod {

/// Value of the modular functional integral phi(lambda |f|) over the domain,
/// with the quadrature error and truncation status attached.
struct ModularReport {
    double value = 0.0;
    double lambda = 1.0;
    double quad_error = 0.0;
    bool finite = true;      // false => not in the space for this lambda
    bool truncated = false;  // real-line integral cut at [-R, R] without support data
};

/// integral over the domain of phi(lambda |f(x)|) dx by adaptive quadrature,
/// split at the signal's breakpoints. On the real line a signal with known
/// compact support inside [-R, R] integrates exactly over the support hull;
/// otherwise the report is flagged truncated. Non-convergent or overflowing
/// integrands produce the infinity sentinel.
inline ModularReport modular(const PhiFunction& phi, const Signal& f, double lambda,
                             const Domain& dom, const QuadratureSpec& quad = {}) {
    if (!(lambda > 0.0)) throw InputError("modular requires lambda > 0");

    ModularReport rep;
    rep.lambda = lambda;

    double lo = dom.lo(), hi = dom.hi();
    if (!dom.is_interval()) {
        if (f.support) {
            if (f.support->lo >= -dom.halfwidth && f.support->hi <= dom.halfwidth) {
                lo = f.support->lo;
                hi = f.support->hi;
            } else {
                rep.truncated = true;
            }
        } else {
            rep.truncated = true;
        }
    }
    if (hi <= lo) return rep;

    auto integrand = [&](double x) { return phi(lambda * std::abs(f.eval(x))); };
    auto res = integrate_segments(integrand, segment_points(lo, hi, f.breakpoints), quad);
    if (!res.ok() || !std::isfinite(res.value)) {
        rep.value = kInf;
        rep.finite = false;
        rep.quad_error = kInf;
        return rep;
    }
    rep.value = res.value;
    rep.quad_error = res.error;
    return rep;
}

/// Dyadic ladder 2^0, 2^-1, ..., 2^-20: the declared search set standing in
/// for "some lambda > 0" in the space-membership definition.
inline std::vector<double> default_lambda_ladder(int levels = 20) {
    std::vector<double> out;
    for (int j = 0; j <= levels; ++j) out.push_back(std::pow(2.0, -j));
    return out;
}

struct LambdaScan {
    std::optional<double> lambda;                  // largest ladder value with finite modular
    std::vector<std::pair<double, double>> trace;  // (lambda, modular value) in ladder order
    bool in_space() const { return lambda.has_value(); }
};

/// Walk the (decreasing) ladder and return the first lambda with a finite
/// modular, plus the full trace. An empty result means membership was not
/// certified at any tested lambda.
inline LambdaScan scan_lambda(const PhiFunction& phi, const Signal& f, const Domain& dom,
                              const std::vector<double>& ladder = default_lambda_ladder(),
                              const QuadratureSpec& quad = {}) {
    LambdaScan scan;
    for (double lam : ladder) {
        if (!(lam > 0.0)) throw InputError("lambda ladder must be positive");
        auto rep = modular(phi, f, lam, dom, quad);
        scan.trace.emplace_back(lam, rep.value);
        if (rep.finite) {
            scan.lambda = lam;
            break;  // ladder is decreasing; membership is settled
        }
    }
    return scan;
}

}  // namespace maxprod
