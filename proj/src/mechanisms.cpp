#include "cbi/mechanisms.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cbi/errors.hpp"
#include "cbi/numeric.hpp"

namespace cbi {

Mechanisms::Mechanisms(double b, double beta, double sigma, LevyMeasure nu, LevyMeasure mu)
    : b_(b), beta_(beta), sigma_(sigma), nu_(std::move(nu)), mu_(std::move(mu)) {
    if (!(b >= 0.0)) throw std::invalid_argument("immigration drift b must be >= 0");
    if (!(beta < 0.0)) throw std::invalid_argument("subcriticality requires beta < 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("diffusion coefficient must be >= 0");
    nu_.validate_role(MeasureRole::Immigration);
    mu_.validate_role(MeasureRole::Branching);
    gamma_F_ = nu_.exp_threshold();
    gamma_R_ = mu_.exp_threshold();
    nondegenerate_ = sigma_ > 0.0 || (!mu_.is_zero() && mu_.moment(2) > 0.0);
}

double Mechanisms::F(double u, int order) const {
    if (order < 0 || order > 2) throw InvalidOrder("F: order must be 0, 1 or 2");
    if (u > gamma_F_) return inf;
    switch (order) {
        case 0:
            return xadd(b_ * u, nu_.exp_poly_integral(u, 0, true, MeasureRole::Immigration));
        case 1:
            return xadd(b_, nu_.exp_poly_integral(u, 1, false, MeasureRole::Immigration));
        default:
            return nu_.exp_poly_integral(u, 2, false, MeasureRole::Immigration);
    }
}

double Mechanisms::R(double u, int order) const {
    if (order < 0 || order > 2) throw InvalidOrder("R: order must be 0, 1 or 2");
    if (u > gamma_R_) return inf;
    const double s2 = sigma_ * sigma_;
    switch (order) {
        case 0:
            return xadd(beta_ * u + 0.5 * s2 * u * u,
                        mu_.exp_poly_integral(u, 0, true, MeasureRole::Branching));
        case 1:
            return xadd(beta_ + s2 * u,
                        mu_.exp_poly_integral(u, 1, true, MeasureRole::Branching));
        default:
            return xadd(s2, mu_.exp_poly_integral(u, 2, false, MeasureRole::Branching));
    }
}

double Mechanisms::stationary_mean() const {
    const double first = nu_.moment(1);
    if (std::isinf(first))
        throw std::domain_error("stationary mean needs int z nu(dz) < inf");
    return (b_ + first) / (-beta_);
}

double Mechanisms::clt_variance() const {
    const double nu2 = nu_.moment(2);
    const double mu2 = mu_.moment(2);
    if (std::isinf(nu2) || std::isinf(mu2))
        throw SecondMomentInfinite("clt_variance requires finite second moments of nu and mu");
    const double m = stationary_mean();
    return ((sigma_ * sigma_ + mu2) * m + nu2) / (beta_ * beta_);
}

std::string Mechanisms::describe() const {
    std::ostringstream os;
    os << "F(u) = " << b_ << "*u + int(e^{uz}-1) dnu,  nu = " << nu_.describe() << "\n";
    os << "R(u) = " << beta_ << "*u + " << 0.5 * sigma_ * sigma_
       << "*u^2 + int(e^{uz}-1-uz) dmu,  mu = " << mu_.describe() << "\n";
    os << "gamma_F = " << gamma_F_ << ", gamma_R = " << gamma_R_;
    return os.str();
}

nlohmann::json Mechanisms::to_json() const {
    return {{"b", b_},
            {"beta", beta_},
            {"sigma", sigma_},
            {"nu", nu_.to_json()},
            {"mu", mu_.to_json()}};
}

Mechanisms Mechanisms::from_json(const nlohmann::json& j) {
    return Mechanisms(j.at("b").get<double>(), j.at("beta").get<double>(),
                      j.at("sigma").get<double>(),
                      LevyMeasure::from_json(j.at("nu")),
                      LevyMeasure::from_json(j.at("mu")));
}

}  // namespace cbi
