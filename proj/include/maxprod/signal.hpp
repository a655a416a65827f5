#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maxprod/common.hpp"

namespace maxprod {

/// A real-valued function on R (or restricted to an interval), either a
/// closed-form evaluator or a piecewise-constant table. Metadata drives
/// exactness: known support keeps operator windows exact, breakpoints keep
/// cell quadrature exact, the nonneg flag and lower bound gate the
/// max-product contract.
struct Signal {
    std::string name;
    std::function<double(double)> eval;
    std::optional<Interval> support;  // evaluator must return 0 outside
    bool nonneg = false;
    std::optional<double> lower_bound;
    std::vector<double> breakpoints;  // kinks/jumps; pieces between are smooth
    bool smooth_pieces = true;

    // Optional analytic derivative, used for C1 witnesses.
    std::function<double(double)> deriv;
    std::optional<double> deriv_sup;

    // When set, f(x) = base(x) + *lower_bound with base non-negative and
    // compactly supported; keeps the shifted operator exact.
    std::shared_ptr<const Signal> base;

    double operator()(double t) const {
        if (!std::isfinite(t)) throw InputError("signal evaluated at non-finite point");
        return eval(t);
    }
};

// ---------------------------------------------------------------------------
// Built-in signals

inline Signal make_hat_signal() {
    Signal s;
    s.name = "hat";
    s.eval = [](double x) { return std::max(1.0 - std::abs(x), 0.0); };
    s.support = Interval{-1.0, 1.0};
    s.nonneg = true;
    s.lower_bound = 0.0;
    s.breakpoints = {-1.0, 0.0, 1.0};
    return s;
}

inline Signal make_indicator_signal(double a, double b) {
    if (!(a < b)) throw InputError("indicator signal requires a < b");
    Signal s;
    s.name = "indicator:" + format_value(a) + ":" + format_value(b);
    s.eval = [a, b](double x) { return (x >= a && x <= b) ? 1.0 : 0.0; };
    s.support = Interval{a, b};
    s.nonneg = true;
    s.lower_bound = 0.0;
    s.breakpoints = {a, b};
    return s;
}

inline Signal make_step_signal() {
    Signal s = make_indicator_signal(0.0, 1.0);
    s.name = "step";
    return s;
}

inline Signal make_const_signal(double c) {
    Signal s;
    s.name = "const:" + format_value(c);
    s.eval = [c](double) { return c; };
    s.nonneg = c >= 0.0;
    s.lower_bound = c;
    s.deriv = [](double) { return 0.0; };
    s.deriv_sup = 0.0;
    return s;
}

/// x(1-x) on [0,1], zero outside: the C1 witness on the unit interval.
inline Signal make_parabola_signal() {
    Signal s;
    s.name = "parabola";
    s.eval = [](double x) { return (x >= 0.0 && x <= 1.0) ? x * (1.0 - x) : 0.0; };
    s.support = Interval{0.0, 1.0};
    s.nonneg = true;
    s.lower_bound = 0.0;
    s.breakpoints = {0.0, 1.0};
    s.deriv = [](double x) { return (x >= 0.0 && x <= 1.0) ? 1.0 - 2.0 * x : 0.0; };
    s.deriv_sup = 1.0;  // sup over [0,1]
    return s;
}

/// sin(2 pi t) on [0,1], zero outside; sign-changing, bounded below by -1.
inline Signal make_sine_signal() {
    Signal s;
    s.name = "sine";
    s.eval = [](double x) {
        return (x >= 0.0 && x <= 1.0) ? std::sin(2.0 * M_PI * x) : 0.0;
    };
    s.support = Interval{0.0, 1.0};
    s.nonneg = false;
    s.lower_bound = -1.0;
    s.breakpoints = {0.0, 1.0};
    return s;
}

/// sqrt(2 log(1/x)) on (0,1], zero elsewhere; the classical unbounded member
/// of exponential Orlicz spaces.
inline Signal make_sqrtlog_signal() {
    Signal s;
    s.name = "sqrtlog";
    s.eval = [](double x) {
        if (x <= 0.0 || x > 1.0) return 0.0;
        return std::sqrt(2.0 * std::log(1.0 / x));
    };
    s.support = Interval{0.0, 1.0};
    s.nonneg = true;
    s.lower_bound = 0.0;
    s.breakpoints = {0.0, 1.0};
    s.smooth_pieces = false;  // unbounded near 0: integrate adaptively
    return s;
}

/// hat(x) - c everywhere (not compactly supported for c != 0); lower bound
/// -c, with the non-negative part hat(x) kept alongside so the shifted
/// operator stays exact.
inline Signal make_hat_minus_signal(double c) {
    Signal s;
    s.name = "hatminus:" + format_value(c);
    s.eval = [c](double x) { return std::max(1.0 - std::abs(x), 0.0) - c; };
    s.nonneg = c <= 0.0;
    s.lower_bound = -c;
    s.breakpoints = {-1.0, 0.0, 1.0};
    s.base = std::make_shared<Signal>(make_hat_signal());
    return s;
}

/// Piecewise-constant table from CSV rows "x,value": row i's value holds on
/// [x_i, x_{i+1}); the final row closes the support.
inline Signal make_table_signal(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open signal table '" + path + "'");
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
    if (xs.size() < 2) throw IoError("signal table '" + path + "' needs at least 2 rows");
    if (!std::is_sorted(xs.begin(), xs.end()))
        throw IoError("signal table '" + path + "' must be sorted by x");

    auto x = std::make_shared<std::vector<double>>(std::move(xs));
    auto v = std::make_shared<std::vector<double>>(std::move(vs));
    Signal s;
    s.name = "file:" + path;
    s.eval = [x, v](double t) -> double {
        if (t < x->front() || t >= x->back()) return 0.0;
        auto it = std::upper_bound(x->begin(), x->end(), t);
        size_t i = static_cast<size_t>(it - x->begin()) - 1;
        return (*v)[i];
    };
    s.support = Interval{x->front(), x->back()};
    s.breakpoints = *x;
    bool nn = true;
    double lo = kInf;
    for (size_t i = 0; i + 1 < v->size(); ++i) {
        nn = nn && (*v)[i] >= 0.0;
        lo = std::min(lo, (*v)[i]);
    }
    s.nonneg = nn;
    s.lower_bound = std::min(lo, 0.0);  // 0 outside the table
    return s;
}

// ---------------------------------------------------------------------------
// Combinators (metadata-propagating)

namespace signal_detail {

inline std::vector<double> merge_breaks(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out = a;
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double x, double y) { return std::abs(x - y) < 1e-15; }),
              out.end());
    return out;
}

inline std::optional<Interval> hull(const std::optional<Interval>& a,
                                    const std::optional<Interval>& b) {
    if (!a || !b) return std::nullopt;
    return Interval::hull(*a, *b);
}

}  // namespace signal_detail

inline Signal scale_signal(const Signal& f, double c) {
    Signal s = f;
    s.name = format_value(c) + "*" + f.name;
    auto base_eval = f.eval;
    s.eval = [base_eval, c](double t) { return c * base_eval(t); };
    s.nonneg = f.nonneg && c >= 0.0;
    s.lower_bound.reset();
    if (f.lower_bound && c >= 0.0) s.lower_bound = c * *f.lower_bound;
    s.deriv = nullptr;
    s.deriv_sup.reset();
    s.base = nullptr;
    return s;
}

inline Signal add_signals(const Signal& f, const Signal& g) {
    Signal s;
    s.name = f.name + "+" + g.name;
    auto fe = f.eval, ge = g.eval;
    s.eval = [fe, ge](double t) { return fe(t) + ge(t); };
    s.support = signal_detail::hull(f.support, g.support);
    s.nonneg = f.nonneg && g.nonneg;
    if (f.lower_bound && g.lower_bound) s.lower_bound = *f.lower_bound + *g.lower_bound;
    s.breakpoints = signal_detail::merge_breaks(f.breakpoints, g.breakpoints);
    s.smooth_pieces = f.smooth_pieces && g.smooth_pieces;
    return s;
}

inline Signal abs_diff_signal(const Signal& f, const Signal& g) {
    Signal s;
    s.name = "|" + f.name + "-" + g.name + "|";
    auto fe = f.eval, ge = g.eval;
    s.eval = [fe, ge](double t) { return std::abs(fe(t) - ge(t)); };
    s.support = signal_detail::hull(f.support, g.support);
    s.nonneg = true;
    s.lower_bound = 0.0;
    s.breakpoints = signal_detail::merge_breaks(f.breakpoints, g.breakpoints);
    // |.| introduces kinks at unknown sign crossings.
    s.smooth_pieces = false;
    return s;
}

inline Signal shift_signal(const Signal& f, double h) {
    Signal s = f;
    s.name = f.name + "(.+" + format_value(h) + ")";
    auto fe = f.eval;
    s.eval = [fe, h](double t) { return fe(t + h); };
    if (f.support) s.support = Interval{f.support->lo - h, f.support->hi - h};
    s.breakpoints.clear();
    for (double t : f.breakpoints) s.breakpoints.push_back(t - h);
    s.deriv = nullptr;
    s.deriv_sup.reset();
    s.base = nullptr;
    return s;
}

inline Signal sub_const_signal(const Signal& f, double c) {
    Signal s = f;
    s.name = f.name + "-" + format_value(c);
    auto fe = f.eval;
    s.eval = [fe, c](double t) { return fe(t) - c; };
    s.support = c == 0.0 ? f.support : std::nullopt;
    s.nonneg = f.lower_bound && *f.lower_bound >= c;
    if (f.lower_bound) s.lower_bound = *f.lower_bound - c;
    s.base = nullptr;
    return s;
}

// ---------------------------------------------------------------------------

/// Parse a signal spec: hat, step, const:<c>, parabola, sine, sqrtlog,
/// indicator:<a>:<b>, hatminus:<c>, file:<path>.
inline Signal parse_signal(const std::string& s) {
    if (s == "hat") return make_hat_signal();
    if (s == "step") return make_step_signal();
    if (s == "parabola") return make_parabola_signal();
    if (s == "sine") return make_sine_signal();
    if (s == "sqrtlog") return make_sqrtlog_signal();
    try {
        if (s.rfind("const:", 0) == 0) return make_const_signal(std::stod(s.substr(6)));
        if (s.rfind("hatminus:", 0) == 0) return make_hat_minus_signal(std::stod(s.substr(9)));
        if (s.rfind("indicator:", 0) == 0) {
            auto rest = s.substr(10);
            auto colon = rest.find(':');
            if (colon == std::string::npos)
                throw InputError("indicator signal needs two bounds");
            return make_indicator_signal(std::stod(rest.substr(0, colon)),
                                         std::stod(rest.substr(colon + 1)));
        }
    } catch (const std::invalid_argument&) {
        throw InputError("bad numeric parameter in signal spec '" + s + "'");
    }
    if (s.rfind("file:", 0) == 0) return make_table_signal(s.substr(5));
    throw InputError("unknown signal spec '" + s + "'");
}

}  // namespace maxprod
