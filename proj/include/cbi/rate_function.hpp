#pragma once

#include <iosfwd>
#include <vector>

#include "json.hpp"

#include "cbi/riccati.hpp"

namespace cbi {

/// Which large-deviation statement applies:
///   FullLdp          — boundary condition holds (steep), full LDP;
///   BoundedLowerLdp  — bounds only, lower bound restricted to (0, alpha);
///   DegenerateF0     — F = 0, rate is lambda_c * x with lower bound -inf.
enum class LdpRegime { FullLdp, BoundedLowerLdp, DegenerateF0 };

const char* to_string(LdpRegime r);

/// The rate function Lambda*(x) = sup_{y <= y_c} { -R(y) x - F(y) }, computed
/// in the y-variable (one concave maximization per x, no nested root-finds),
/// together with the limiting slope alpha and the steepness verdict.
/// Pure evaluator over an immutable profile; parallel maps are safe.
class RateFunction {
public:
    explicit RateFunction(RiccatiProfile profile);

    const RiccatiProfile& profile() const { return profile_; }
    LdpRegime regime() const { return regime_; }
    bool steep() const;          // throws OutOfDomain in the DegenerateF0 regime
    double alpha() const;        // sup of -F'(y(l))/R'(y(l)); >= m; +inf when steep
    double mean() const { return m_; }

    struct Point {
        double x = 0.0;
        double y_star = 0.0;       // maximizer (NaN when supremum not attained)
        double lambda_star = 0.0;  // -R(y_star) (NaN when y_star is NaN)
        double rate = 0.0;         // Lambda*(x)
        bool upper_bound_only = false;  // x >= alpha in a non-steep regime
    };

    double operator()(double x) const { return evaluate(x).rate; }
    Point evaluate(double x) const;

    struct Exponents {
        double lower;          // -inf over the effective open interval
        double upper;          // -inf over the closure
        bool lower_effective;  // false when (a1,a2) ∩ (0,alpha) is empty
    };
    /// LDP decay exponents for the interval [a1, a2] (a2 may be +inf).
    Exponents ldp_exponents(double a1, double a2) const;

    /// Table over an x-grid geometrically refined near m, covering
    /// [0, max(4m, m + 10 rho)].
    std::vector<Point> curve(std::size_t n_points = 121) const;
    static void write_curve_csv(const std::vector<Point>& pts, std::ostream& os);

    nlohmann::json summary_json() const;  // {m, alpha, lambda_c, steep, regime}

private:
    RiccatiProfile profile_;
    LdpRegime regime_;
    bool steep_ = false;
    double alpha_ = inf;
    double m_ = 0.0;
};

}  // namespace cbi
