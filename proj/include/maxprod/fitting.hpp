#pragma once

#include <cmath>
#include <vector>

#include "maxprod/common.hpp"

namespace maxprod {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
    size_t points = 0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw InputError("line fit needs at least two (x, y) pairs");
    const size_t m = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < m; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) throw InputError("degenerate abscissae in line fit");
    LineFit fit;
    fit.slope = (m * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / m;
    double ss = 0.0;
    for (size_t i = 0; i < m; ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / m);
    fit.points = m;
    return fit;
}

/// Least-squares power law y = C x^p on positive samples: returns the fit of
/// log y against log x (slope = p, exp(intercept) = C).
inline LineFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
        if (xs[i] > 0.0 && ys[i] > 0.0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    }
    return fit_line(lx, ly);
}

}  // namespace maxprod
