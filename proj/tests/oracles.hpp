#pragma once

// Test-only oracles, independent of the library's own numerics:
// boost quadrature, plain bisection, dense grid scans.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

// tanh_sinh probes extremely close to endpoints; clamp the (measure-zero)
// non-finite evaluations of integrable singularities to zero.
inline std::function<double(double)> finite_guard(std::function<double(double)> f) {
    return [f = std::move(f)](double z) {
        const double v = f(z);
        return std::isfinite(v) ? v : 0.0;
    };
}

// High-precision integral over (a, b), b finite.
inline double integrate(const std::function<double(double)>& f, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> integ;
    return integ.integrate(finite_guard(f), a, b, 1e-12);
}

// High-precision integral over (a, inf): tanh_sinh near the (possibly
// singular) lower endpoint, exp_sinh for the tail.
inline double integrate_tail(const std::function<double(double)>& f, double a) {
    boost::math::quadrature::tanh_sinh<double> head;
    boost::math::quadrature::exp_sinh<double> tail;
    const double split = a + 1.0;
    return head.integrate(finite_guard(f), a, split, 1e-12) +
           tail.integrate([&f, split](double z) { return f(split + z); }, 1e-12);
}

// Plain bisection to absolute tolerance.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double tol = 1e-13) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw std::invalid_argument("bisect: not bracketed");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Maximum of f over a uniform grid; returns the best value.
inline double grid_max(const std::function<double(double)>& f, double lo, double hi,
                       double step) {
    double best = -std::numeric_limits<double>::infinity();
    for (double y = lo; y <= hi; y += step) best = std::max(best, f(y));
    return best;
}

// Argmax over a uniform grid.
inline double grid_argmax(const std::function<double(double)>& f, double lo, double hi,
                          double step) {
    double best = -std::numeric_limits<double>::infinity();
    double arg = lo;
    for (double y = lo; y <= hi; y += step) {
        const double v = f(y);
        if (v > best) {
            best = v;
            arg = y;
        }
    }
    return arg;
}

// Central finite difference.
inline double fd1(const std::function<double(double)>& f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
