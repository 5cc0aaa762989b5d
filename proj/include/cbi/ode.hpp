#pragma once

#include <functional>
#include <vector>

#include "cbi/numeric.hpp"

namespace cbi::ode {

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double h_init = 0.0;        // 0 = choose automatically
    double h_max = 0.0;         // 0 = no cap
    double ceiling = cbi::inf;  // stop when y crosses this level from below
    std::vector<double> marks;  // record first crossing times of these levels
    long max_steps = 50'000'000;
};

/// Solution of an autonomous scalar ODE y' = f(y) together with the
/// companion integral w(t) = int_0^t g(y(s)) ds (w omitted when g is null).
struct Result {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> w;
    bool ceiling_hit = false;
    double t_ceiling = cbi::inf;
    std::vector<double> mark_times;  // aligned with Options::marks, inf if never crossed
    long accepted = 0;
    long rejected = 0;
};

/// Adaptive Dormand–Prince (4/5 embedded pair). The ceiling and the marks are
/// resolved by bisecting the final step, so crossing times carry the local
/// step accuracy, not the step size. Throws StepSizeUnderflow (with the last
/// valid state) if the controller stalls.
Result integrate(const std::function<double(double)>& f, double y0, double t_end,
                 const std::function<double(double)>& g = nullptr,
                 const Options& opts = {});

}  // namespace cbi::ode
