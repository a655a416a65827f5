#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "maxprod/common.hpp"

namespace maxprod {

struct QuadratureSpec {
    double abs_tol = 1e-9;     // absolute tolerance per integral
    int max_intervals = 400000;
    int max_depth = 52;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;   // accumulated error estimate
    bool converged = true;
    bool finite_integrand = true;
    long evals = 0;

    bool ok() const { return converged && finite_integrand; }
};

namespace quad_detail {

// Gauss 7 / Kronrod 15 node-weight table on [-1,1]:
// {abscissa, Gauss weight (0 for Kronrod-only nodes), Kronrod weight}.
inline constexpr double kG7K15[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0,               0.204432940075298},
    {0.586087235467691, 0.0,               0.169004726639267},
    {0.864864423359769, 0.0,               0.104790010322250},
    {0.991455371120813, 0.0,               0.022935322010529},
};

struct Gk15 {
    double value;
    double error;
    bool finite;
    long evals;
};

template <class F>
Gk15 gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);

    double y0 = f(c);
    long evals = 1;
    if (!std::isfinite(y0)) return {0.0, kInf, false, evals};

    double g7 = kG7K15[0][1] * y0;
    double k15 = kG7K15[0][2] * y0;
    for (int i = 1; i < 8; ++i) {
        const double dx = h * kG7K15[i][0];
        const double yl = f(c - dx);
        const double yr = f(c + dx);
        evals += 2;
        if (!std::isfinite(yl) || !std::isfinite(yr)) return {0.0, kInf, false, evals};
        const double ys = yl + yr;
        g7 += kG7K15[i][1] * ys;
        k15 += kG7K15[i][2] * ys;
    }
    g7 *= h;
    k15 *= h;

    // QUADPACK-style error heuristic.
    double err = std::abs(k15 - g7);
    err = 200.0 * err * std::sqrt(200.0 * err);
    if (err > std::abs(k15 - g7)) err = std::abs(k15 - g7) * 200.0;
    err = std::max(err, std::abs(k15) * 1e-15);
    return {k15, err, true, evals};
}

}  // namespace quad_detail

/// Adaptive Gauss-Kronrod integration of f over [a, b] to an absolute
/// tolerance. Bisection with proportional tolerance allocation; depth-capped
/// segments are accepted with their error kept in the budget, so integrable
/// endpoint singularities converge while divergent integrands exhaust the
/// interval budget and come back with converged == false.
template <class F>
QuadResult integrate_adaptive(const F& f, double a, double b, const QuadratureSpec& spec = {}) {
    QuadResult res;
    if (a == b) return res;
    if (a > b) std::swap(a, b);

    struct Seg {
        double a, b;
        int depth;
    };
    std::vector<Seg> stack;
    stack.push_back({a, b, 0});
    const double total_len = b - a;
    int used = 0;

    while (!stack.empty()) {
        Seg s = stack.back();
        stack.pop_back();
        ++used;
        if (used > spec.max_intervals) {
            res.converged = false;
            res.error = kInf;
            return res;
        }

        auto g = quad_detail::gk15(f, s.a, s.b);
        res.evals += g.evals;
        if (!g.finite) {
            res.finite_integrand = false;
            res.converged = false;
            res.error = kInf;
            return res;
        }

        const double local_tol = spec.abs_tol * std::max((s.b - s.a) / total_len, 1e-300);
        if (g.error <= local_tol || s.depth >= spec.max_depth) {
            res.value += g.value;
            res.error += g.error;
            if (s.depth >= spec.max_depth && g.error > local_tol) {
                // Accepted at the cap; keep the (possibly large) error visible.
                if (g.error > 1e3 * spec.abs_tol) res.converged = false;
            }
            continue;
        }
        const double mid = 0.5 * (s.a + s.b);
        stack.push_back({s.a, mid, s.depth + 1});
        stack.push_back({mid, s.b, s.depth + 1});
    }
    if (!std::isfinite(res.value)) {
        res.converged = false;
        res.finite_integrand = std::isfinite(res.value);
    }
    return res;
}

/// Integrate over [points.front(), points.back()] split at the interior
/// points (known kinks or jumps of the integrand).
template <class F>
QuadResult integrate_segments(const F& f, const std::vector<double>& points,
                              const QuadratureSpec& spec = {}) {
    QuadResult res;
    if (points.size() < 2) return res;
    const double total = points.back() - points.front();
    for (size_t i = 0; i + 1 < points.size(); ++i) {
        if (points[i + 1] <= points[i]) continue;
        QuadratureSpec local = spec;
        local.abs_tol = spec.abs_tol * std::max((points[i + 1] - points[i]) / total, 1e-6);
        QuadResult part = integrate_adaptive(f, points[i], points[i + 1], local);
        res.value += part.value;
        res.error += part.error;
        res.evals += part.evals;
        res.converged = res.converged && part.converged;
        res.finite_integrand = res.finite_integrand && part.finite_integrand;
        if (!res.finite_integrand) {
            res.error = kInf;
            return res;
        }
    }
    return res;
}

/// Merge breakpoints lying inside [a, b] into an integration point list.
inline std::vector<double> segment_points(double a, double b, const std::vector<double>& breaks) {
    std::vector<double> pts;
    pts.push_back(a);
    for (double t : breaks) {
        if (t > a && t < b) pts.push_back(t);
    }
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](double x, double y) { return std::abs(x - y) < 1e-15; }),
              pts.end());
    return pts;
}

/// Fixed-order midpoint rule on uniform subcells; the documented fallback
/// for cell means when nothing is known about the integrand.
template <class F>
double midpoint_rule(const F& f, double a, double b, int subcells = 64) {
    const double h = (b - a) / subcells;
    double sum = 0.0;
    for (int i = 0; i < subcells; ++i) sum += f(a + (i + 0.5) * h);
    return sum * h;
}

}  // namespace maxprod
