#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>
#include <vector>

#include "maxprod/common.hpp"
#include "maxprod/domain.hpp"
#include "maxprod/kernel.hpp"
#include "maxprod/quadrature.hpp"
#include "maxprod/signal.hpp"

namespace maxprod {

struct OperatorOptions {
    double guard_slack = 1e-8;          // denominator must reach window_inf - slack
    double cell_quad_tol = 1e-11;
    int check_grid = 512;               // x grid for the interval-flavor threshold check
    double fallback_halfwidth = 8.0;    // k-window (in x units) for signals without support
};

struct MeanValue {
    double value = 0.0;
    bool midpoint_fallback = false;  // adaptive quadrature failed; subdivided midpoint used
};

/// Kantorovich cell mean n * integral_{k/n}^{(k+1)/n} f(t) dt. Cells are
/// split at the signal's breakpoints; each smooth piece integrates to
/// machine accuracy. Signals without usable piece structure fall back to a
/// subdivided midpoint rule, flagged in the result.
inline MeanValue kantorovich_mean_checked(const Signal& f, long k, long n,
                                          const OperatorOptions& opts = {}) {
    if (n <= 0) throw InputError("kantorovich mean requires n >= 1");
    const double a = static_cast<double>(k) / n;
    const double b = static_cast<double>(k + 1) / n;

    QuadratureSpec qs;
    qs.abs_tol = opts.cell_quad_tol / n;
    auto res = integrate_segments(f.eval, segment_points(a, b, f.breakpoints), qs);
    if (res.ok()) return {res.value * n, false};
    if (!res.finite_integrand)
        return {midpoint_rule(f.eval, a, b, 64) * n, true};
    // Converged poorly (hidden kink or cusp): subdivided midpoint, flagged.
    return {midpoint_rule(f.eval, a, b, 64) * n, true};
}

inline double kantorovich_mean(const Signal& f, long k, long n,
                               const OperatorOptions& opts = {}) {
    return kantorovich_mean_checked(f, k, n, opts).value;
}

/// A kernel/n/domain triple with its resolved shift index set. On an
/// interval the index set is {ceil(na), ..., floor(nb)-1} and construction
/// refuses any n for which it is empty or for which the kernel maximum over
/// the set can dip below the certified window infimum on the check grid.
class OperatorInstance {
public:
    OperatorInstance(Kernel kernel, long n, Domain domain, OperatorOptions opts = {})
        : kernel_(std::move(kernel)), n_(n), domain_(domain), opts_(opts) {
        if (n <= 0) throw InputError("operator requires n >= 1");
        window_inf_ = kernel_.require_window_inf(domain.flavor);

        if (domain_.is_interval()) {
            j_lo_ = ceil_index(n * domain_.a);
            j_hi_ = floor_index(n * domain_.b) - 1;
            if (j_lo_ > j_hi_)
                throw VerificationError(
                    "operator n=" + std::to_string(n) + " too small on " + domain_.describe() +
                    ": empty shift index set (need ceil(na) <= floor(nb)-1)");
            // Threshold check: the kernel sup over the index set must reach
            // the window infimum everywhere on the evaluation grid.
            for (int i = 0; i <= opts_.check_grid; ++i) {
                const double x =
                    domain_.a + (domain_.b - domain_.a) * i / static_cast<double>(opts_.check_grid);
                if (denominator(x) < window_inf_ - opts_.guard_slack)
                    throw VerificationError(
                        "operator n=" + std::to_string(n) + " below threshold on " +
                        domain_.describe() + ": kernel max over the index set dips under the "
                        "window infimum at x=" + format_value(x));
            }
        } else {
            // Window half-width (in kernel argument units) that makes the
            // discrete sup exact: values beyond it are dominated by the
            // window infimum attained near nx.
            if (kernel_.shape().support) {
                denom_halfwidth_ = std::max(std::abs(kernel_.shape().support->lo),
                                            std::abs(kernel_.shape().support->hi)) + 1.0;
            } else {
                const double theta = *kernel_.shape().decay_exponent;
                const double C = kernel_.shape().decay_constant.value_or(kInf);
                double w = 2.0;
                while (std::isfinite(C) && C * std::pow(w, -theta) >= window_inf_ && w < 1e6)
                    w *= 2.0;
                denom_halfwidth_ = w + 1.0;
            }
        }
    }

    const Kernel& kernel() const { return kernel_; }
    long n() const { return n_; }
    const Domain& domain() const { return domain_; }
    const OperatorOptions& options() const { return opts_; }
    double window_inf() const { return window_inf_; }
    long index_lo() const { return j_lo_; }
    long index_hi() const { return j_hi_; }

    /// max_k chi(nx - k) over the instance's index set.
    double denominator(double x) const {
        long klo, khi;
        shift_range(x, klo, khi);
        double best = -kInf;
        for (long k = klo; k <= khi; ++k)
            best = std::max(best, kernel_(n_ * x - static_cast<double>(k)));
        return best;
    }

    void shift_range(double x, long& klo, long& khi) const {
        if (domain_.is_interval()) {
            klo = j_lo_;
            khi = j_hi_;
        } else {
            klo = ceil_index(n_ * x - denom_halfwidth_);
            khi = floor_index(n_ * x + denom_halfwidth_);
        }
    }

    /// Index range outside which the cell means of f vanish (exact for
    /// compactly supported signals; a configured window otherwise).
    void mean_range(const Signal& f, double x, long& klo, long& khi, bool& exact) const {
        if (domain_.is_interval()) {
            klo = j_lo_;
            khi = j_hi_;
            exact = true;
            return;
        }
        if (f.support) {
            klo = ceil_index(n_ * f.support->lo) - 1;
            khi = floor_index(n_ * f.support->hi);
            exact = true;
        } else {
            klo = ceil_index(n_ * (x - opts_.fallback_halfwidth));
            khi = floor_index(n_ * (x + opts_.fallback_halfwidth));
            exact = false;
        }
        long dlo, dhi;
        shift_range(x, dlo, dhi);
        klo = std::min(klo, dlo);
        khi = std::max(khi, dhi);
    }

private:
    Kernel kernel_;
    long n_;
    Domain domain_;
    OperatorOptions opts_;
    double window_inf_ = 0.0;
    long j_lo_ = 0, j_hi_ = -1;       // interval index set
    double denom_halfwidth_ = 8.0;    // real-line flavor
};

/// Smallest n accepted by the OperatorInstance constructor for this kernel
/// and domain (1 on the real line, where the index set is all of Z).
inline long min_valid_n(const Kernel& kernel, const Domain& domain,
                        const OperatorOptions& opts = {}, long n_cap = 4096) {
    if (!domain.is_interval()) return 1;
    for (long n = 1; n <= n_cap; ++n) {
        try {
            OperatorInstance probe(kernel, n, domain, opts);
            return n;
        } catch (const VerificationError&) {
            continue;
        }
    }
    throw VerificationError("no valid n up to " + std::to_string(n_cap) + " for kernel '" +
                            kernel.name() + "' on " + domain.describe());
}

namespace op_detail {

inline void require_nonneg(const Signal& f) {
    if (!f.nonneg && !(f.lower_bound && *f.lower_bound >= 0.0))
        throw ContractError("max-product operator requires a non-negative signal '" + f.name +
                            "'; wrap sign-changing signals with the shifted variant");
}

}  // namespace op_detail

/// Evaluates the max-product operator at points, caching cell means across
/// evaluations (the means depend on (f, n, k) only). Pure and self-contained:
/// distinct evaluators never share state.
class MaxProductEvaluator {
public:
    MaxProductEvaluator(const OperatorInstance& op, Signal f)
        : op_(&op), f_(std::move(f)) {
        op_detail::require_nonneg(f_);
    }

    double operator()(double x) const {
        require_finite(x, "evaluation point");
        const double denom = op_->denominator(x);
        if (denom < op_->window_inf() - op_->options().guard_slack)
            throw ContractError(
                "kernel max " + format_value(denom) + " under window infimum " +
                format_value(op_->window_inf()) +
                " at x=" + format_value(x) + ": window positivity/threshold violation");

        long klo, khi;
        bool exact = true;
        op_->mean_range(f_, x, klo, khi, exact);
        const long n = op_->n();
        double best = -kInf;
        for (long k = klo; k <= khi; ++k) {
            const double w = op_->kernel()(n * x - static_cast<double>(k));
            if (w == 0.0 && best >= 0.0) continue;
            best = std::max(best, w * mean(k));
        }
        return best / denom;
    }

    double mean(long k) const {
        auto it = means_.find(k);
        if (it != means_.end()) return it->second;
        const double v = kantorovich_mean(f_, k, op_->n(), op_->options());
        means_.emplace(k, v);
        return v;
    }

    const Signal& signal() const { return f_; }

private:
    const OperatorInstance* op_;
    Signal f_;
    mutable std::unordered_map<long, double> means_;
};

inline double max_product_apply(const OperatorInstance& op, const Signal& f, double x) {
    return MaxProductEvaluator(op, f)(x);
}

/// The sliding-mean companion operator on the real line. Its cell mean
/// n * integral f(t + x - k/n) dt over [k/n,(k+1)/n] equals
/// n * integral_x^{x+1/n} f and is independent of k, so for non-negative f
/// the kernel weights cancel against the denominator.
class SlidingMeanEvaluator {
public:
    SlidingMeanEvaluator(const OperatorInstance& op, Signal f)
        : op_(&op), f_(std::move(f)) {
        if (op.domain().is_interval())
            throw InputError("the sliding-mean companion operator is defined on the real line");
        op_detail::require_nonneg(f_);
    }

    double operator()(double x) const {
        require_finite(x, "evaluation point");
        const double denom = op_->denominator(x);
        if (denom < op_->window_inf() - op_->options().guard_slack)
            throw ContractError("kernel max under window infimum at x=" + format_value(x));
        const long n = op_->n();
        QuadratureSpec qs;
        qs.abs_tol = op_->options().cell_quad_tol / n;
        auto res = integrate_segments(f_.eval, segment_points(x, x + 1.0 / n, f_.breakpoints), qs);
        const double m = res.ok() ? res.value * n : midpoint_rule(f_.eval, x, x + 1.0 / n, 64) * n;
        return m;  // = (max_k chi(nx-k) * m) / max_k chi(nx-k) for m >= 0
    }

private:
    const OperatorInstance* op_;
    Signal f_;
};

inline double auxiliary_apply(const OperatorInstance& op, const Signal& f, double x) {
    return SlidingMeanEvaluator(op, f)(x);
}

/// Max-product operator extended to signals bounded below by a declared c:
/// apply to f - c and add c back.
class ShiftedEvaluator {
public:
    ShiftedEvaluator(const OperatorInstance& op, const Signal& f) : c_(0.0) {
        if (!f.lower_bound)
            throw ContractError("shifted operator needs a declared lower bound on '" + f.name + "'");
        c_ = *f.lower_bound;
        Signal g = f.base ? *f.base : sub_const_signal(f, c_);
        g.nonneg = true;
        g.lower_bound = 0.0;
        inner_ = std::make_unique<MaxProductEvaluator>(op, std::move(g));
    }

    double operator()(double x) const {
        const double v = (*inner_)(x);
        if (v < -1e-12)
            throw ContractError("signal dips below its declared lower bound near x=" +
                                format_value(x));
        return v + c_;
    }

    const MaxProductEvaluator& inner() const { return *inner_; }
    double lower_bound() const { return c_; }

private:
    double c_;
    std::unique_ptr<MaxProductEvaluator> inner_;
};

inline double shifted_apply(const OperatorInstance& op, const Signal& f, double x) {
    return ShiftedEvaluator(op, f)(x);
}

/// Linear sampling baseline: sum_k chi(nx-k) mean_k / sum_k chi(nx-k).
/// Exact for compactly supported kernels; decay kernels carry a reported
/// truncation bound and the denominator is guarded away from zero.
class LinearBaselineEvaluator {
public:
    LinearBaselineEvaluator(const OperatorInstance& op, Signal f)
        : op_(&op), f_(std::move(f)) {}

    double operator()(double x) const {
        long klo, khi;
        bool exact = true;
        op_->mean_range(f_, x, klo, khi, exact);
        long dlo, dhi;
        op_->shift_range(x, dlo, dhi);
        klo = std::min(klo, dlo);
        khi = std::max(khi, dhi);

        const long n = op_->n();
        double num = 0.0, den = 0.0;
        for (long k = klo; k <= khi; ++k) {
            const double w = op_->kernel()(n * x - static_cast<double>(k));
            if (w == 0.0) continue;
            den += w;
            num += w * means_(k);
        }
        if (std::abs(den) < 1e-8)
            throw VerificationError("linear baseline unavailable: kernel sum near zero at x=" +
                                    format_value(x));
        return num / den;
    }

    double denominator_sum(double x) const {
        long dlo, dhi;
        op_->shift_range(x, dlo, dhi);
        long klo = dlo, khi = dhi;
        if (!op_->domain().is_interval() && !op_->kernel().shape().support) {
            // widen so the truncated sum tail stays below ~1e-4 relative
            const long extra = 512;
            klo -= extra;
            khi += extra;
        }
        double den = 0.0;
        for (long k = klo; k <= khi; ++k)
            den += op_->kernel()(op_->n() * x - static_cast<double>(k));
        return den;
    }

private:
    double means_(long k) const {
        auto it = cache_.find(k);
        if (it != cache_.end()) return it->second;
        const double v = kantorovich_mean(f_, k, op_->n(), op_->options());
        cache_.emplace(k, v);
        return v;
    }

    const OperatorInstance* op_;
    Signal f_;
    mutable std::unordered_map<long, double> cache_;
};

inline double linear_baseline_apply(const OperatorInstance& op, const Signal& f, double x) {
    return LinearBaselineEvaluator(op, f)(x);
}

}  // namespace maxprod
