#pragma once

namespace cbi {

/// Upper incomplete gamma Gamma(a, x) for x > 0 and any real order a
/// (including a <= 0, where the usual library routines give up).
/// For a <= 0 uses the downward recurrence
///   Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a
/// seeded from a positive order, with Gamma(0, x) = E_1(x).
double upper_gamma(double a, double x);

/// Lower incomplete gamma gamma(a, x), requires a > 0.
double lower_gamma(double a, double x);

}  // namespace cbi
