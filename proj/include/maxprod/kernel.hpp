#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maxprod/common.hpp"
#include "maxprod/domain.hpp"
#include "maxprod/quadrature.hpp"

namespace maxprod {

/// Evaluator and decay metadata of a discrete-sampling kernel, before
/// certification.
struct KernelShape {
    std::string name;
    std::function<double(double)> eval;
    std::optional<Interval> support;          // compact support, if any
    std::optional<double> decay_exponent;     // theta > 1: |chi(x)| <= C |x|^-theta
    std::optional<double> decay_constant;     // the C above, valid for |x| >= decay_from
    double decay_from = 1.0;
    std::vector<double> breakpoints;          // kinks (B-spline knots, table nodes)
    double declared_moment_order = 1.0;       // beta the kernel is certified for
};

struct KernelOptions {
    double sup_grid_step = 1e-3;   // grid step for sup/inf searches
    double quad_tol = 1e-9;
    double window_inf_min = 1e-8;  // acceptance threshold for the window infimum
    double l1_halfwidth = 1e4;     // truncation for non-compact L1 integrals
};

struct GridExtremum {
    double value = 0.0;
    double arg = 0.0;
    double grid_step = 0.0;
};

struct NormEstimates {
    double sup_norm = 0.0;
    double sup_err = 0.0;
    double l1_norm = 0.0;
    double l1_err = 0.0;
};

struct MomentResult {
    double value = 0.0;
    double beta = 0.0;
    long k_halfwidth = 0;   // window actually used for the shift supremum
    double grid_step = 0.0;
    bool truncation_dominated = true;  // false => divergence warning (beta beyond decay margin)
};

/// Tail-mass decay certificate: samples of n * integral_{|y|>1/n^alpha}
/// |chi(ny)| dy together with a fitted power law M n^-gamma.
struct TailMassReport {
    double alpha = 0.5;
    std::vector<std::pair<long, double>> samples;  // (n, tail value)
    double scale = 0.0;                            // M
    double rate = kInf;                            // gamma; +inf for exact-zero tails
    long n_threshold = 1;
    bool compact_exact = false;                    // tails identically zero from n_threshold on
    std::optional<double> rate_predicted;          // (1-alpha)(theta-1) when theta declared
    double fit_residual = 0.0;

    double bound_at(long n) const {
        if (compact_exact || scale == 0.0) return 0.0;
        return scale * std::pow(static_cast<double>(n), -rate);
    }
};

namespace kernel_detail {

template <class F>
double golden_refine_min(const F& g, double lo, double hi, int iters = 72) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = g(c), fd = g(d);
    for (int i = 0; i < iters; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = g(d);
        }
    }
    return fc < fd ? c : d;
}

/// Uniform grid search plus one golden-section refinement pass around the
/// best grid point.
template <class F>
GridExtremum grid_minimize(const F& g, double lo, double hi, double step) {
    const long n = std::max<long>(2, static_cast<long>(std::ceil((hi - lo) / step)));
    GridExtremum best;
    best.value = kInf;
    best.grid_step = (hi - lo) / static_cast<double>(n);
    for (long i = 0; i <= n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
        const double v = g(x);
        if (v < best.value) {
            best.value = v;
            best.arg = x;
        }
    }
    const double rl = std::max(lo, best.arg - best.grid_step);
    const double rh = std::min(hi, best.arg + best.grid_step);
    const double xr = golden_refine_min(g, rl, rh);
    const double vr = g(xr);
    if (vr < best.value) {
        best.value = vr;
        best.arg = xr;
    }
    return best;
}

template <class F>
GridExtremum grid_maximize(const F& g, double lo, double hi, double step) {
    GridExtremum e = grid_minimize([&](double x) { return -g(x); }, lo, hi, step);
    e.value = -e.value;
    return e;
}

/// One-sided tail mass bound: integral of C |x|^-theta over |x| >= T.
inline double tail_mass_bound_one_side(double C, double theta, double T) {
    return C * std::pow(T, 1.0 - theta) / (theta - 1.0);
}

}  // namespace kernel_detail

/// Kernel evaluation; rejects non-finite arguments.
inline double eval_kernel(const KernelShape& k, double x) {
    require_finite(x, "kernel argument");
    return k.eval(x);
}

/// Sup-norm by grid search with refinement and L1 norm by adaptive
/// quadrature; non-compact kernels close the L1 tail with the declared decay
/// bound (midpoint of [0, bound] counted, half kept as error).
inline NormEstimates compute_norms(const KernelShape& k, const QuadratureSpec& quad = {},
                                   const KernelOptions& opts = {}) {
    if (!k.support && !(k.decay_exponent && *k.decay_exponent > 1.0))
        throw VerificationError("kernel '" + k.name +
                                "': no compact support and no declared tail decay; "
                                "L1 norm cannot be certified");

    NormEstimates out;
    auto abs_eval = [&](double x) { return std::abs(k.eval(x)); };

    double lo, hi;
    if (k.support) {
        lo = k.support->lo;
        hi = k.support->hi;
        auto e = kernel_detail::grid_maximize(abs_eval, lo, hi, opts.sup_grid_step);
        out.sup_norm = e.value;
        out.sup_err = e.grid_step;  // resolution, not a rigorous bound
    } else {
        const double theta = *k.decay_exponent;
        const double C = k.decay_constant.value_or(kInf);
        double L = std::max(4.0, 2.0 * k.decay_from);
        GridExtremum e;
        for (;;) {
            e = kernel_detail::grid_maximize(abs_eval, -L, L, opts.sup_grid_step);
            const double beyond = std::isfinite(C) ? C * std::pow(L, -theta) : kInf;
            if (beyond < e.value || L >= 1e6) break;
            L *= 2.0;
        }
        out.sup_norm = e.value;
        out.sup_err = e.grid_step;
        lo = -opts.l1_halfwidth;
        hi = opts.l1_halfwidth;
    }

    // L1: split at breakpoints and into bounded chunks.
    std::vector<double> pts;
    const double chunk = 2.0;
    for (double x = lo; x < hi; x += chunk) pts.push_back(x);
    pts.push_back(hi);
    for (double b : k.breakpoints)
        if (b > lo && b < hi) pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    QuadratureSpec qs = quad;
    qs.abs_tol = opts.quad_tol;
    auto l1 = integrate_segments(abs_eval, pts, qs);
    if (!l1.ok())
        throw VerificationError("kernel '" + k.name + "': L1 quadrature did not converge");
    out.l1_norm = l1.value;
    out.l1_err = l1.error;

    if (!k.support) {
        const double theta = *k.decay_exponent;
        if (!k.decay_constant)
            throw VerificationError("kernel '" + k.name +
                                    "': decay constant required to close the L1 tail");
        const double bound =
            2.0 * kernel_detail::tail_mass_bound_one_side(*k.decay_constant, theta,
                                                          opts.l1_halfwidth);
        out.l1_norm += 0.5 * bound;
        out.l1_err += 0.5 * bound;
    }
    return out;
}

/// Infimum of chi over [-1/2,1/2] (real-line flavor) or [-3/2,3/2] (compact
/// flavor): the positivity constant of the kernel near the origin.
inline GridExtremum infimum_on_window(const KernelShape& k, Domain::Flavor flavor,
                                      const KernelOptions& opts = {}) {
    const double w = flavor == Domain::Flavor::real_line ? 0.5 : 1.5;
    return kernel_detail::grid_minimize([&](double x) { return k.eval(x); }, -w, w,
                                        opts.sup_grid_step);
}

/// Generalized absolute moment of order beta:
///   sup_x  max_k |chi(x - k)| |x - k|^beta,
/// with the outer sup reduced to x in [0,1] by the integer-shift structure.
/// The shift window is widened until the decay bound on the neglected terms
/// cannot beat the maximum already found; for beta at or beyond the decay
/// exponent that dominance is impossible and the result carries a warning.
inline MomentResult generalized_moment(const KernelShape& k, double beta,
                                       const KernelOptions& opts = {}) {
    if (!(beta >= 0.0)) throw InputError("moment order beta must be >= 0");

    MomentResult res;
    res.beta = beta;

    auto term = [&](double u) { return std::abs(k.eval(u)) * std::pow(std::abs(u), beta); };

    long W = 32;
    bool dominated = true;
    if (k.support) {
        W = static_cast<long>(std::ceil(std::max(std::abs(k.support->lo),
                                                 std::abs(k.support->hi)))) + 1;
    } else {
        const double theta = *k.decay_exponent;
        const double C = k.decay_constant.value_or(kInf);
        if (beta >= theta - 1e-12 || !std::isfinite(C)) {
            // Divergence warning: the sufficient condition m_beta < inf for
            // beta <= theta has no truncation margin here.
            dominated = false;
            W = 4096;
        }
    }

    auto sup_over_shifts = [&](double x) {
        long klo, khi;
        if (k.support) {
            klo = ceil_index(x - k.support->hi);
            khi = floor_index(x - k.support->lo);
        } else {
            klo = ceil_index(x) - W;
            khi = floor_index(x) + W;
        }
        double best = 0.0;
        for (long kk = klo; kk <= khi; ++kk) best = std::max(best, term(x - kk));
        return best;
    };

    for (;;) {
        auto e = kernel_detail::grid_maximize(sup_over_shifts, 0.0, 1.0, opts.sup_grid_step);
        res.value = e.value;
        res.grid_step = e.grid_step;
        res.k_halfwidth = W;
        res.truncation_dominated = dominated;
        if (k.support || !dominated) break;
        const double theta = *k.decay_exponent;
        const double C = *k.decay_constant;
        const double tail_bound = C * std::pow(static_cast<double>(W - 1), beta - theta);
        if (tail_bound < std::max(res.value, 1e-10)) break;
        if (W >= (1L << 20)) {
            res.truncation_dominated = false;
            break;
        }
        W *= 2;
    }
    return res;
}

/// Tail-mass decay verification: computes n * integral_{|y| > 1/n^alpha}
/// |chi(n y)| dy  =  integral_{|u| > n^(1-alpha)} |chi(u)| du for each n and
/// fits M n^-gamma by least squares on the log-log samples.
inline TailMassReport verify_chi4(const KernelShape& k, double alpha,
                                  const std::vector<long>& n_grid,
                                  const KernelOptions& opts = {}) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
    if (n_grid.empty() || !std::is_sorted(n_grid.begin(), n_grid.end()))
        throw InputError("n grid must be non-empty and increasing");

    TailMassReport rep;
    rep.alpha = alpha;
    if (k.decay_exponent) rep.rate_predicted = (1.0 - alpha) * (*k.decay_exponent - 1.0);

    auto abs_eval = [&](double u) { return std::abs(k.eval(u)); };
    QuadratureSpec qs;
    qs.abs_tol = opts.quad_tol;

    for (long n : n_grid) {
        const double T = std::pow(static_cast<double>(n), 1.0 - alpha);
        double tail = 0.0;
        if (k.support) {
            const double s = std::max(std::abs(k.support->lo), std::abs(k.support->hi));
            if (T < s) {
                auto right = integrate_segments(abs_eval, segment_points(T, k.support->hi,
                                                                         k.breakpoints), qs);
                auto left = integrate_segments(abs_eval, segment_points(k.support->lo, -T,
                                                                        k.breakpoints), qs);
                tail = (k.support->hi > T ? right.value : 0.0) +
                       (k.support->lo < -T ? left.value : 0.0);
            }
        } else {
            const double theta = *k.decay_exponent;
            const double C = *k.decay_constant;
            const double U = std::max(opts.l1_halfwidth, 4.0 * T);
            std::vector<double> pts;
            for (double x = T; x < U; x += 2.0) pts.push_back(x);
            pts.push_back(U);
            auto one_side = integrate_segments(abs_eval, pts, qs);
            const double closure = kernel_detail::tail_mass_bound_one_side(C, theta, U);
            std::vector<double> lpts;
            for (double x = -U; x < -T; x += 2.0) lpts.push_back(x);
            lpts.push_back(-T);
            auto other_side = integrate_segments(abs_eval, lpts, qs);
            tail = one_side.value + other_side.value + closure;  // midpoint of two closures
        }
        rep.samples.emplace_back(n, std::max(tail, 0.0));
    }

    for (size_t i = 1; i < rep.samples.size(); ++i) {
        const double prev = rep.samples[i - 1].second;
        const double cur = rep.samples[i].second;
        if (cur > prev + 1e-12 + 1e-6 * prev)
            throw VerificationError("kernel '" + k.name +
                                    "': tail masses are not non-increasing in n");
    }

    std::vector<double> lx, ly;
    long first_zero = 0;
    for (auto& [n, t] : rep.samples) {
        if (t > 1e-13) {
            lx.push_back(std::log(static_cast<double>(n)));
            ly.push_back(std::log(t));
        } else if (first_zero == 0) {
            first_zero = n;
        }
    }

    if (lx.size() < 2) {
        rep.compact_exact = true;
        rep.scale = 0.0;
        rep.rate = kInf;
        rep.n_threshold = first_zero > 0 ? first_zero : rep.samples.front().first;
        return rep;
    }

    // Least-squares line on the log-log samples.
    const size_t m = lx.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < m; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) < 1e-30)
        throw VerificationError("degenerate n grid for tail-mass fit");
    const double slope = (m * sxy - sx * sy) / denom;
    rep.rate = -slope;
    if (!(rep.rate > 0.0))
        throw VerificationError("kernel '" + k.name + "': fitted tail-mass rate is not positive");

    // Pick M so the bound holds at every sampled n, and report the fit spread.
    double M = 0.0;
    double ss = 0.0;
    const double intercept = (sy - slope * sx) / m;
    for (size_t i = 0; i < m; ++i) {
        const double r = ly[i] - (intercept + slope * lx[i]);
        ss += r * r;
        M = std::max(M, std::exp(ly[i] + rep.rate * lx[i]));
    }
    rep.scale = M;
    rep.fit_residual = std::sqrt(ss / m);
    rep.n_threshold = rep.samples.front().first;
    return rep;
}

enum class IndicatorConvention { closed_unit, half_open_unit };

/// Discrete absolute moment of order zero of the unit-interval indicator:
/// sup_x sum_k tau(x - k). The closed interval counts both endpoints at
/// integer x (value 2); the half-open variant tiles the line exactly
/// (value 1). Computed by enumeration.
inline double indicator_discrete_moment(IndicatorConvention conv = IndicatorConvention::closed_unit) {
    auto tau = [conv](double u) {
        if (conv == IndicatorConvention::closed_unit) return (u >= 0.0 && u <= 1.0) ? 1.0 : 0.0;
        return (u >= 0.0 && u < 1.0) ? 1.0 : 0.0;
    };
    double best = 0.0;
    const int N = 997;
    for (int i = 0; i <= N; ++i) {
        const double x = static_cast<double>(i) / N;  // includes both integers
        double sum = 0.0;
        for (long k = -3; k <= 4; ++k) sum += tau(x - static_cast<double>(k));
        best = std::max(best, sum);
    }
    return best;
}

// ---------------------------------------------------------------------------

/// A certified kernel: evaluator plus the constants every bound needs,
/// computed once at construction and immutable afterwards.
class Kernel {
public:
    explicit Kernel(KernelShape shape, KernelOptions opts = {})
        : shape_(std::move(shape)), opts_(opts) {
        norms_ = compute_norms(shape_, {}, opts_);
        auto inf_real = infimum_on_window(shape_, Domain::Flavor::real_line, opts_);
        auto inf_compact = infimum_on_window(shape_, Domain::Flavor::interval, opts_);
        if (inf_real.value > opts_.window_inf_min) window_inf_real_ = inf_real.value;
        if (inf_compact.value > opts_.window_inf_min) window_inf_compact_ = inf_compact.value;
        if (!window_inf_real_ && !window_inf_compact_)
            throw VerificationError("kernel '" + shape_.name +
                                    "': window infimum not positive on either flavor");
        moments_[0.0] = generalized_moment(shape_, 0.0, opts_).value;
        const double b1 = std::min(1.0, shape_.declared_moment_order);
        moments_[b1] = generalized_moment(shape_, b1, opts_).value;
    }

    double operator()(double x) const { return eval_kernel(shape_, x); }

    const std::string& name() const { return shape_.name; }
    const KernelShape& shape() const { return shape_; }
    const KernelOptions& options() const { return opts_; }

    double sup_norm() const { return norms_.sup_norm; }
    double l1_norm() const { return norms_.l1_norm; }
    const NormEstimates& norms() const { return norms_; }

    std::optional<double> window_inf(Domain::Flavor flavor) const {
        return flavor == Domain::Flavor::real_line ? window_inf_real_ : window_inf_compact_;
    }

    double require_window_inf(Domain::Flavor flavor) const {
        auto v = window_inf(flavor);
        if (!v)
            throw VerificationError("kernel '" + shape_.name + "' rejected for " +
                                    (flavor == Domain::Flavor::real_line ? std::string("real-line")
                                                                         : std::string("compact")) +
                                    " use: window infimum below threshold");
        return *v;
    }

    /// Cached for the orders computed at construction; fresh otherwise.
    double moment(double beta) const {
        auto it = moments_.find(beta);
        if (it != moments_.end()) return it->second;
        return generalized_moment(shape_, beta, opts_).value;
    }

    const std::map<double, double>& cached_moments() const { return moments_; }

private:
    KernelShape shape_;
    KernelOptions opts_;
    NormEstimates norms_;
    std::optional<double> window_inf_real_;
    std::optional<double> window_inf_compact_;
    std::map<double, double> moments_;
};

// ---------------------------------------------------------------------------
// Built-in kernels

/// Fejer kernel F(x) = sinc^2(x/2) / 2 with sinc(u) = sin(pi u)/(pi u);
/// quadratic tail decay, |F(x)| <= (2/pi^2) x^-2.
inline KernelShape make_fejer_shape() {
    KernelShape k;
    k.name = "fejer";
    k.eval = [](double x) {
        const double u = 0.5 * M_PI * x;  // pi * (x/2)
        double s;
        if (std::abs(u) < 1e-4) {
            const double u2 = u * u;
            s = 1.0 - u2 / 6.0 * (1.0 - u2 / 20.0);
        } else {
            s = std::sin(u) / u;
        }
        return 0.5 * s * s;
    };
    k.decay_exponent = 2.0;
    k.decay_constant = 2.0 / (M_PI * M_PI);
    k.decay_from = 0.5;
    k.declared_moment_order = 1.0;
    return k;
}

/// Central B-spline of order m (hat function for m = 2), by the divided
/// difference formula; compactly supported on [-m/2, m/2].
inline KernelShape make_bspline_shape(int order) {
    if (order < 1 || order > 12) throw InputError("B-spline order must be in [1, 12]");
    KernelShape k;
    k.name = "bspline:" + std::to_string(order);
    const int m = order;
    if (m == 1) {
        k.eval = [](double x) { return (x >= -0.5 && x <= 0.5) ? 1.0 : 0.0; };
    } else {
        double fact = 1.0;
        for (int i = 2; i < m; ++i) fact *= i;  // (m-1)!
        k.eval = [m, fact](double x) {
            if (std::abs(x) >= 0.5 * m) return 0.0;
            double sum = 0.0;
            double binom = 1.0;
            for (int i = 0; i <= m; ++i) {
                const double t = 0.5 * m + x - i;
                if (t > 0.0) sum += (i % 2 ? -binom : binom) * std::pow(t, m - 1);
                binom = binom * (m - i) / (i + 1);
            }
            return std::max(sum / fact, 0.0);
        };
    }
    k.support = Interval{-0.5 * m, 0.5 * m};
    for (int j = 0; j <= m; ++j) k.breakpoints.push_back(-0.5 * m + j);
    k.declared_moment_order = 2.0;
    return k;
}

/// Tabulated kernel from CSV rows "x,value", linearly interpolated, zero
/// outside the table range.
inline KernelShape make_table_kernel_shape(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open kernel table '" + path + "'");
    std::vector<double> xs, vs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw IoError("bad row in '" + path + "': " + line);
        try {
            xs.push_back(std::stod(line.substr(0, comma)));
            vs.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::invalid_argument&) {
            throw IoError("bad number in '" + path + "': " + line);
        }
    }
    if (xs.size() < 2) throw IoError("kernel table '" + path + "' needs at least 2 rows");
    if (!std::is_sorted(xs.begin(), xs.end()))
        throw IoError("kernel table '" + path + "' must be sorted by x");

    auto x = std::make_shared<std::vector<double>>(std::move(xs));
    auto v = std::make_shared<std::vector<double>>(std::move(vs));
    KernelShape k;
    k.name = "file:" + path;
    k.eval = [x, v](double t) -> double {
        if (t <= x->front() || t >= x->back()) {
            return (t == x->front()) ? v->front() : (t == x->back() ? v->back() : 0.0);
        }
        auto it = std::upper_bound(x->begin(), x->end(), t);
        size_t i = static_cast<size_t>(it - x->begin());
        const double w = (t - (*x)[i - 1]) / ((*x)[i] - (*x)[i - 1]);
        return (1.0 - w) * (*v)[i - 1] + w * (*v)[i];
    };
    k.support = Interval{x->front(), x->back()};
    k.breakpoints = *x;
    k.declared_moment_order = 2.0;
    return k;
}

/// Parse "fejer", "bspline:<order>", "file:<path>" into a certified kernel.
inline Kernel parse_kernel(const std::string& s, const KernelOptions& opts = {}) {
    if (s == "fejer") return Kernel(make_fejer_shape(), opts);
    if (s.rfind("bspline:", 0) == 0) {
        try {
            return Kernel(make_bspline_shape(std::stoi(s.substr(8))), opts);
        } catch (const std::invalid_argument&) {
            throw InputError("bad B-spline order in '" + s + "'");
        }
    }
    if (s.rfind("file:", 0) == 0) return Kernel(make_table_kernel_shape(s.substr(5)), opts);
    throw InputError("unknown kernel spec '" + s + "' (use fejer, bspline:<m>, file:<path>)");
}

}  // namespace maxprod
