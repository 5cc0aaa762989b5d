#pragma once

#include <string>

#include "json.hpp"

#include "cbi/levy_measure.hpp"

namespace cbi {

/// The pair (F, R) of Levy-Khinchine mechanisms of a subcritical CBI model:
///   F(u) = b u + int (e^{uz} - 1) nu(dz)                (immigration)
///   R(u) = beta u + sigma^2/2 u^2 + int (e^{uz}-1-uz) mu(dz)   (branching)
/// with b, sigma >= 0 and beta < 0. Values above the exponential-moment
/// thresholds gamma_F, gamma_R are +inf; the thresholds themselves are
/// evaluated by the measures' exact boundary convergence tests.
/// Immutable after construction; safe for concurrent reads.
class Mechanisms {
public:
    Mechanisms(double b, double beta, double sigma, LevyMeasure nu, LevyMeasure mu);

    double b() const { return b_; }
    double beta() const { return beta_; }
    double sigma() const { return sigma_; }
    double sigma2() const { return sigma_ * sigma_; }
    const LevyMeasure& nu() const { return nu_; }
    const LevyMeasure& mu() const { return mu_; }

    double gamma_F() const { return gamma_F_; }
    double gamma_R() const { return gamma_R_; }

    /// sigma^2 + int z^2 dmu > 0, i.e. R strictly convex.
    bool nondegenerate() const { return nondegenerate_; }
    /// F identically zero (b = 0 and nu = 0).
    bool immigration_zero() const { return b_ == 0.0 && nu_.is_zero(); }

    /// F, F', F'' as extended reals. order in {0,1,2}.
    double F(double u, int order = 0) const;
    /// R, R', R'' as extended reals. order in {0,1,2}.
    double R(double u, int order = 0) const;

    /// m = (-beta)^{-1} (b + int z nu(dz)) = -F'(0)/R'(0).
    double stationary_mean() const;

    /// rho^2 = (R''(0) m + F''(0)) / beta^2. Throws SecondMomentInfinite.
    double clt_variance() const;

    /// Symbolic form of F and R for logs.
    std::string describe() const;

    nlohmann::json to_json() const;
    static Mechanisms from_json(const nlohmann::json& j);

private:
    double b_, beta_, sigma_;
    LevyMeasure nu_, mu_;
    double gamma_F_, gamma_R_;
    bool nondegenerate_;
};

}  // namespace cbi
