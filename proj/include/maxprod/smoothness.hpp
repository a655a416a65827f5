#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maxprod/common.hpp"
#include "maxprod/domain.hpp"
#include "maxprod/fitting.hpp"
#include "maxprod/modular.hpp"
#include "maxprod/phi.hpp"
#include "maxprod/quadrature.hpp"
#include "maxprod/signal.hpp"

namespace maxprod {

/// How shift differences f(x+h) - f(x) are integrated on a compact interval:
/// over the overlap of the interval with its shifted copy (default), or with
/// f extended by zero and integrated over the widened hull, matching the
/// real-line convention.
enum class ShiftBoundary { overlap, zero_extend };

namespace smooth_detail {

inline Signal difference_signal(const Signal& f, double h) {
    Signal d;
    d.name = f.name + "(.+h)-" + f.name;
    auto fe = f.eval;
    d.eval = [fe, h](double x) { return fe(x + h) - fe(x); };
    if (f.support) d.support = Interval{f.support->lo - std::abs(h), f.support->hi + std::abs(h)};
    d.nonneg = false;
    for (double t : f.breakpoints) {
        d.breakpoints.push_back(t);
        d.breakpoints.push_back(t - h);
    }
    std::sort(d.breakpoints.begin(), d.breakpoints.end());
    d.smooth_pieces = f.smooth_pieces;
    return d;
}

/// Modular of lambda (f(.+h) - f) over the domain under the chosen boundary
/// convention.
inline ModularReport shift_modular(const PhiFunction& phi, const Signal& f, double lambda,
                                   double h, const Domain& dom, ShiftBoundary mode,
                                   const QuadratureSpec& quad) {
    Signal d = difference_signal(f, h);
    if (!dom.is_interval()) return modular(phi, d, lambda, dom, quad);
    if (mode == ShiftBoundary::zero_extend) {
        Domain widened = Domain::interval(dom.a - std::abs(h), dom.b + std::abs(h));
        return modular(phi, d, lambda, widened, quad);
    }
    const double lo = dom.a + std::max(0.0, -h);
    const double hi = dom.b - std::max(0.0, h);
    if (hi <= lo) return ModularReport{0.0, lambda, 0.0, true, false};
    return modular(phi, d, lambda, Domain::interval(lo, hi), quad);
}

}  // namespace smooth_detail

/// Modulus of smoothness at width delta: the maximum of the shift-difference
/// modular over the finite grid h in {+-j delta/H : j = 0..H}. A finite-grid
/// maximum is a certified lower bound of the sup over |h| <= delta;
/// refinement can only increase it.
inline double modulus(const PhiFunction& phi, const Signal& f, double lambda, double delta,
                      const Domain& dom, int h_steps = 32,
                      ShiftBoundary mode = ShiftBoundary::overlap,
                      const QuadratureSpec& quad = {}) {
    if (!(delta >= 0.0)) throw InputError("modulus width delta must be >= 0");
    if (!(lambda > 0.0)) throw InputError("modulus requires lambda > 0");
    if (delta == 0.0) return 0.0;
    double best = 0.0;
    for (int j = 1; j <= h_steps; ++j) {
        const double h = delta * j / h_steps;
        for (double sh : {h, -h}) {
            auto rep = smooth_detail::shift_modular(phi, f, lambda, sh, dom, mode, quad);
            if (!rep.finite) return kInf;
            best = std::max(best, rep.value);
        }
    }
    return best;
}

struct SmoothnessCurve {
    double lambda = 1.0;
    int h_steps = 32;
    ShiftBoundary mode = ShiftBoundary::overlap;
    std::vector<std::pair<double, double>> points;  // (delta, omega), delta increasing
};

inline SmoothnessCurve smoothness_curve(const PhiFunction& phi, const Signal& f, double lambda,
                                        std::vector<double> deltas, const Domain& dom,
                                        int h_steps = 32,
                                        ShiftBoundary mode = ShiftBoundary::overlap,
                                        const QuadratureSpec& quad = {}) {
    std::sort(deltas.begin(), deltas.end());
    SmoothnessCurve curve;
    curve.lambda = lambda;
    curve.h_steps = h_steps;
    curve.mode = mode;
    for (double d : deltas)
        curve.points.emplace_back(d, modulus(phi, f, lambda, d, dom, h_steps, mode, quad));
    return curve;
}

inline std::vector<double> dyadic_deltas(int levels = 16) {
    std::vector<double> out;
    for (int j = 1; j <= levels; ++j) out.push_back(std::pow(2.0, -j));
    std::sort(out.begin(), out.end());
    return out;
}

struct VanishingCheck {
    std::optional<double> lambda;  // ladder value at which the modulus vanishes
    SmoothnessCurve curve;
    double delta_min = 0.0;
    double threshold = 0.0;
    bool ok() const { return lambda.has_value(); }
};

/// Find a ladder lambda whose modulus at delta = 2^-16 drops below the
/// threshold, and return the full dyadic curve at that lambda.
inline VanishingCheck vanishing_check(const PhiFunction& phi, const Signal& f, const Domain& dom,
                                      const std::vector<double>& ladder = default_lambda_ladder(),
                                      double threshold = 1e-4, int h_steps = 32,
                                      const QuadratureSpec& quad = {}) {
    VanishingCheck out;
    out.delta_min = std::pow(2.0, -16);
    out.threshold = threshold;
    for (double lam : ladder) {
        const double w = modulus(phi, f, lam, out.delta_min, dom, h_steps,
                                 ShiftBoundary::overlap, quad);
        if (w < threshold) {
            out.lambda = lam;
            out.curve = smoothness_curve(phi, f, lam, dyadic_deltas(16), dom, h_steps,
                                         ShiftBoundary::overlap, quad);
            return out;
        }
    }
    return out;
}

struct LipschitzFit {
    double nu = 0.0;        // fitted order, clamped to (0, 1]
    double constant = 0.0;
    double residual = 0.0;
    double slope_raw = 0.0;
    std::pair<double, double> delta_range{0.0, 0.0};
};

/// Fit omega(delta) ~ C delta^nu on the smallest-delta half of the curve.
inline LipschitzFit fit_lipschitz(const SmoothnessCurve& curve) {
    std::vector<double> ds, ws;
    for (auto& [d, w] : curve.points) {
        if (w > 0.0 && std::isfinite(w)) {
            ds.push_back(d);
            ws.push_back(w);
        }
    }
    if (ds.size() < 4)
        throw VerificationError(
            "Lipschitz fit needs at least 4 positive modulus values (signal may be locally "
            "constant at this resolution)");
    const size_t half = ds.size() / 2;
    std::vector<double> dl(ds.begin(), ds.begin() + half + 1);
    std::vector<double> wl(ws.begin(), ws.begin() + half + 1);
    auto fit = fit_loglog(dl, wl);
    LipschitzFit out;
    out.slope_raw = fit.slope;
    if (!(fit.slope > 1e-6))
        throw VerificationError("modulus does not decay with delta: no Lipschitz order");
    out.nu = std::min(fit.slope, 1.0);
    out.constant = std::exp(fit.intercept);
    out.residual = fit.residual_rms;
    out.delta_range = {dl.front(), dl.back()};
    return out;
}

// ---------------------------------------------------------------------------
// K-functional on compact intervals

struct SmoothingCandidate {
    std::string id;
    std::function<double(double)> eval;
    double deriv_sup = 0.0;
    int deriv_grid = 0;  // 0 for analytic derivative bounds
    double bandwidth = 0.0;
};

struct SmoothingFamily {
    std::vector<SmoothingCandidate> candidates;
};

namespace smooth_detail {

/// f extended beyond [a,b] by reflection, used by the smoothing means.
inline std::function<double(double)> reflect_extend(const Signal& f, Interval iv) {
    auto fe = f.eval;
    const double a = iv.lo, b = iv.hi;
    return [fe, a, b](double t) {
        if (t < a) t = std::min(2.0 * a - t, b);
        else if (t > b) t = std::max(2.0 * b - t, a);
        return fe(t);
    };
}

}  // namespace smooth_detail

/// Iterated-mean smoothing family: the triangular (double box) mean of f at
/// dyadic bandwidths, which is C1 with derivative (B_h f(x+h/2) -
/// B_h f(x-h/2))/h. Derivative sup norms are measured on a 2^14 grid. The
/// signal itself joins the family when it carries an analytic derivative
/// bound, and the zero function is always a candidate.
inline SmoothingFamily steklov_family(const Signal& f, Interval iv, int level_lo = 1,
                                      int level_hi = 12, int deriv_grid = 1 << 14) {
    SmoothingFamily fam;

    SmoothingCandidate zero;
    zero.id = "zero";
    zero.eval = [](double) { return 0.0; };
    zero.deriv_sup = 0.0;
    fam.candidates.push_back(zero);

    if (f.deriv_sup) {
        SmoothingCandidate self;
        self.id = "self";
        self.eval = f.eval;
        self.deriv_sup = *f.deriv_sup;
        fam.candidates.push_back(self);
    }

    auto fext = smooth_detail::reflect_extend(f, iv);
    QuadratureSpec qs;
    qs.abs_tol = 1e-11;

    for (int lev = level_lo; lev <= level_hi; ++lev) {
        const double h = std::pow(2.0, -lev);
        if (h > 0.5 * iv.length()) continue;

        auto box_mean = [fext, h, qs](double x) {
            auto r = integrate_adaptive(fext, x - 0.5 * h, x + 0.5 * h, qs);
            return r.value / h;
        };
        SmoothingCandidate c;
        c.id = "steklov:2^-" + std::to_string(lev);
        c.bandwidth = h;
        c.eval = [box_mean, h](double x) {
            // triangular mean: box mean of the box mean
            QuadratureSpec inner;
            inner.abs_tol = 1e-10;
            inner.max_intervals = 4000;
            auto r = integrate_adaptive(box_mean, x - 0.5 * h, x + 0.5 * h, inner);
            return std::max(r.value / h, 0.0);
        };
        double dsup = 0.0;
        for (int i = 0; i <= deriv_grid; ++i) {
            const double x = iv.lo + iv.length() * i / deriv_grid;
            const double d = (box_mean(x + 0.5 * h) - box_mean(x - 0.5 * h)) / h;
            dsup = std::max(dsup, std::abs(d));
        }
        c.deriv_sup = dsup;
        c.deriv_grid = deriv_grid;
        fam.candidates.push_back(c);
    }
    return fam;
}

struct PreparedKFunctional {
    struct Entry {
        std::string id;
        double approx_term = 0.0;  // modular of lambda (f - g) over the interval
        double deriv_sup = 0.0;
    };
    double lambda = 1.0;
    Interval interval;
    std::vector<Entry> entries;
};

/// Evaluate the approximation halves of the K-functional objective once per
/// candidate; the delta-dependent combination is then a cheap minimum.
inline PreparedKFunctional prepare_k_functional(const PhiFunction& phi, const Signal& f,
                                                double lambda, Interval iv,
                                                const SmoothingFamily& family,
                                                const QuadratureSpec& quad = {}) {
    if (!f.nonneg && !(f.lower_bound && *f.lower_bound >= 0.0))
        throw ContractError("K-functional requires a non-negative signal; shift by the lower "
                            "bound first");
    if (family.candidates.empty()) throw InputError("empty smoothing candidate family");

    PreparedKFunctional prep;
    prep.lambda = lambda;
    prep.interval = iv;
    for (const auto& c : family.candidates) {
        auto ge = c.eval;
        auto fe = f.eval;
        auto integrand = [&phi, lambda, fe, ge](double x) {
            return phi(lambda * std::abs(fe(x) - ge(x)));
        };
        auto res = integrate_segments(integrand, segment_points(iv.lo, iv.hi, f.breakpoints),
                                      quad);
        prep.entries.push_back({c.id, res.ok() ? res.value : kInf, c.deriv_sup});
    }
    return prep;
}

struct KFunctionalEstimate {
    double value = 0.0;
    double lambda = 1.0;
    double delta = 0.0;
    std::string witness_id;
    double witness_deriv_sup = 0.0;
    double witness_approx_term = 0.0;
};

inline KFunctionalEstimate k_functional_from(const PreparedKFunctional& prep,
                                             const PhiFunction& phi, double delta) {
    if (!(delta > 0.0)) throw InputError("K-functional requires delta > 0");
    KFunctionalEstimate best;
    best.lambda = prep.lambda;
    best.delta = delta;
    best.value = kInf;
    for (const auto& e : prep.entries) {
        const double obj = e.approx_term + delta * phi(e.deriv_sup);
        if (obj < best.value) {
            best.value = obj;
            best.witness_id = e.id;
            best.witness_deriv_sup = e.deriv_sup;
            best.witness_approx_term = e.approx_term;
        }
    }
    return best;
}

/// Upper estimate of the K-functional: the minimum of
///   modular(lambda (f - g)) + delta phi(sup|g'|)
/// over the finite candidate family. The true infimum over all smooth
/// non-negative g can only be smaller, so this is the conservative side for
/// upper-bound verification.
inline KFunctionalEstimate k_functional(const PhiFunction& phi, const Signal& f, double lambda,
                                        double delta, Interval iv, const SmoothingFamily& family,
                                        const QuadratureSpec& quad = {}) {
    auto prep = prepare_k_functional(phi, f, lambda, iv, family, quad);
    return k_functional_from(prep, phi, delta);
}

}  // namespace maxprod
