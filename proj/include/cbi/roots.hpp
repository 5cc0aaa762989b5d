#pragma once

#include <functional>

namespace cbi::roots {

struct Options {
    double x_tol = 1e-15;   // relative interval tolerance
    int max_iter = 200;
};

/// Brent-style bracketed root finder (bisection + secant + inverse quadratic).
/// Requires f(lo) and f(hi) of opposite sign (either may be zero).
double brent(const std::function<double(double)>& f, double lo, double hi,
             const Options& opts = {});

}  // namespace cbi::roots
