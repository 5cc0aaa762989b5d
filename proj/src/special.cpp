#include "cbi/special.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace cbi {

double upper_gamma(double a, double x) {
    if (!(x > 0.0)) throw std::domain_error("upper_gamma: x must be positive");
    if (a > 0.0) return boost::math::tgamma(a, x);
    if (a == 0.0) return boost::math::expint(1, x);

    // Seed at a + n in (0, 1] and walk down. Only the seed order can land on
    // zero; intermediate divisors a + j are strictly negative.
    int n = static_cast<int>(std::ceil(-a));
    double seed_order = a + n;
    double val = (seed_order == 0.0) ? boost::math::expint(1, x)
                                     : boost::math::tgamma(seed_order, x);
    for (int j = 1; j <= n; ++j) {
        const double order = seed_order - j;
        // x^order e^{-x} in log space; underflow to 0 is fine.
        const double term = std::exp(order * std::log(x) - x);
        if (order == 0.0) {
            val = boost::math::expint(1, x);
        } else {
            val = (val - term) / order;
        }
    }
    return val;
}

double lower_gamma(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("lower_gamma: order must be positive");
    if (x <= 0.0) return 0.0;
    return boost::math::tgamma_lower(a, x);
}

}  // namespace cbi
