#include "cbi/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "cbi/errors.hpp"

namespace cbi::ode {

namespace {

// Dormand–Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                 a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
constexpr double e1 = 5179.0 / 57600.0, e3 = 7571.0 / 16695.0,
                 e4 = 393.0 / 640.0, e5 = -92097.0 / 339200.0,
                 e6 = 187.0 / 2100.0, e7 = 1.0 / 40.0;

struct State {
    double y;
    double w;
};

struct StepOut {
    State y5;      // 5th order solution
    double err;    // scaled error estimate (already normalized)
    bool finite;
};

// One embedded step of the joint system (y, w), w' = g(y).
StepOut dp_step(const std::function<double(double)>& f,
                const std::function<double(double)>& g, const State& s,
                double h, double rel_tol, double abs_tol) {
    auto rhs = [&](double y) -> std::array<double, 2> {
        return {f(y), g ? g(y) : 0.0};
    };
    const auto k1 = rhs(s.y);
    const auto k2 = rhs(s.y + h * a21 * k1[0]);
    const auto k3 = rhs(s.y + h * (a31 * k1[0] + a32 * k2[0]));
    const auto k4 = rhs(s.y + h * (a41 * k1[0] + a42 * k2[0] + a43 * k3[0]));
    const auto k5 = rhs(s.y + h * (a51 * k1[0] + a52 * k2[0] + a53 * k3[0] + a54 * k4[0]));
    const auto k6 = rhs(s.y + h * (a61 * k1[0] + a62 * k2[0] + a63 * k3[0] +
                                   a64 * k4[0] + a65 * k5[0]));

    StepOut out{};
    double y5[2], y4[2];
    for (int c = 0; c < 2; ++c) {
        const double acc5 = b1 * k1[c] + b3 * k3[c] + b4 * k4[c] + b5 * k5[c] + b6 * k6[c];
        y5[c] = (c == 0 ? s.y : s.w) + h * acc5;
    }
    // 7th stage (FSAL) evaluated at the 5th-order result.
    const auto k7 = rhs(y5[0]);
    for (int c = 0; c < 2; ++c) {
        const double acc4 = e1 * k1[c] + e3 * k3[c] + e4 * k4[c] + e5 * k5[c] +
                            e6 * k6[c] + e7 * k7[c];
        y4[c] = (c == 0 ? s.y : s.w) + h * acc4;
    }

    out.y5 = {y5[0], y5[1]};
    out.finite = std::isfinite(y5[0]) && std::isfinite(y5[1]) &&
                 std::isfinite(y4[0]) && std::isfinite(y4[1]);
    if (!out.finite) return out;

    double err = 0.0;
    const double base[2] = {s.y, s.w};
    for (int c = 0; c < 2; ++c) {
        const double scale = abs_tol + rel_tol * std::max(std::abs(base[c]), std::abs(y5[c]));
        err = std::max(err, std::abs(y5[c] - y4[c]) / scale);
    }
    out.err = err;
    return out;
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double y0, double t_end,
                 const std::function<double(double)>& g, const Options& opts) {
    Result res;
    res.mark_times.assign(opts.marks.size(), cbi::inf);

    State s{y0, 0.0};
    double t = 0.0;
    res.t.push_back(t);
    res.y.push_back(s.y);
    if (g) res.w.push_back(s.w);

    const double fy0 = f(y0);
    double h = opts.h_init;
    if (h <= 0.0) {
        h = 1e-6 * std::max(1.0, t_end);
        if (std::isfinite(fy0) && fy0 != 0.0)
            h = std::min(h, 0.01 * (1.0 + std::abs(y0)) / std::abs(fy0));
    }
    const double h_cap = (opts.h_max > 0.0) ? opts.h_max : cbi::inf;
    h = std::min(h, h_cap);

    std::size_t next_mark = 0;  // marks assumed sorted increasing
    long steps = 0;

    // Resolve the time at which y crosses `level` inside (t0, t0+h_hit],
    // by bisection on the step length. Returns the refined state at the level.
    auto refine_crossing = [&](State from, double t0, double h_hit,
                               double level) -> std::pair<double, State> {
        double lo = 0.0, hi = h_hit;
        State at_hi{level, from.w};
        const double t_tol = std::max(1e-12, 1e-10 * std::max(1.0, t0 + h_hit));
        while (hi - lo > t_tol) {
            const double mid = 0.5 * (lo + hi);
            StepOut trial = dp_step(f, g, from, mid - lo, opts.rel_tol, opts.abs_tol);
            if (!trial.finite || trial.y5.y >= level) {
                hi = mid;
            } else {
                from = trial.y5;
                lo = mid;
            }
        }
        at_hi.y = level;
        at_hi.w = from.w;  // w varies O(t_tol) across the sliver
        return {t0 + hi, at_hi};
    };

    while (t < t_end) {
        if (++steps > opts.max_steps)
            throw StepSizeUnderflow("ode: step budget exhausted", t, s.y);
        h = std::min({h, h_cap, t_end - t});
        StepOut st = dp_step(f, g, s, h, opts.rel_tol, opts.abs_tol);

        if (!st.finite || st.err > 1.0) {
            res.rejected++;
            const double shrink = st.finite ? std::max(0.2, 0.9 * std::pow(st.err, -0.2)) : 0.5;
            h *= shrink;
            if (h < 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t))
                throw StepSizeUnderflow("ode: step size underflow", t, s.y);
            continue;
        }

        // Crossing bookkeeping before accepting the state.
        while (next_mark < opts.marks.size() && st.y5.y >= opts.marks[next_mark] &&
               s.y < opts.marks[next_mark]) {
            auto [tc, sc] = refine_crossing(s, t, h, opts.marks[next_mark]);
            res.mark_times[next_mark] = tc;
            ++next_mark;
            (void)sc;
        }
        if (st.y5.y >= opts.ceiling) {
            auto [tc, sc] = refine_crossing(s, t, h, opts.ceiling);
            res.ceiling_hit = true;
            res.t_ceiling = tc;
            res.t.push_back(tc);
            res.y.push_back(sc.y);
            if (g) res.w.push_back(sc.w);
            res.accepted++;
            return res;
        }

        t += h;
        s = st.y5;
        res.t.push_back(t);
        res.y.push_back(s.y);
        if (g) res.w.push_back(s.w);
        res.accepted++;

        const double grow = (st.err > 0.0) ? std::min(5.0, 0.9 * std::pow(st.err, -0.2)) : 5.0;
        h *= grow;
    }
    return res;
}

}  // namespace cbi::ode
