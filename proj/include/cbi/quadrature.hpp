#pragma once

#include <functional>

namespace cbi::quad {

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_subdivisions = 10000;
};

/// Adaptive Gauss–Kronrod (G7/K15) on a finite interval.
/// Throws QuadratureFailure when the tolerance is not met within budget.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opts = {});

/// Integral over (lo, inf) with the exponential substitution
/// z = lo - log(1 - s). The integrand must decay at least exponentially
/// (Levy exp-polynomial integrands do); algebraic tails belong to the
/// rational map below.
double integrate_exp_tail(const std::function<double(double)>& f, double lo,
                          const Options& opts = {});

/// Integral over (lo, inf) with the rational substitution u = lo + t/(1-t);
/// appropriate for algebraically decaying integrands such as 1/(R(u)+lambda).
double integrate_rational_tail(const std::function<double(double)>& f, double lo,
                               const Options& opts = {});

}  // namespace cbi::quad
