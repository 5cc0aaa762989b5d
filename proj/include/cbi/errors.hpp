#pragma once

#include <stdexcept>
#include <string>

namespace cbi {

/// Derivative/moment order outside the supported range.
struct InvalidOrder : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Adaptive quadrature did not reach the requested tolerance within budget.
struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of the operation.
struct OutOfDomain : std::domain_error {
    using std::domain_error::domain_error;
};

/// Second moments of the jump measures are not finite.
struct SecondMomentInfinite : std::domain_error {
    using std::domain_error::domain_error;
};

/// R is not strictly convex (sigma = 0 and mu = 0); use the pure-OU branch.
struct DegenerateR : std::domain_error {
    using std::domain_error::domain_error;
};

/// Requested simulation scheme is not valid for this model.
struct IncompatibleScheme : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Time step too large for the drift scale (dt*|beta| > 0.5).
struct StepTooCoarse : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Adaptive ODE step shrank below representable resolution.
/// Carries the last valid state.
struct StepSizeUnderflow : std::runtime_error {
    double t_last;
    double y_last;
    StepSizeUnderflow(const std::string& msg, double t, double y)
        : std::runtime_error(msg), t_last(t), y_last(y) {}
};

/// Exponential tilt not available (target exposure too close to the
/// critical one, or a jump measure family not closed under tilting).
struct TiltUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cbi
