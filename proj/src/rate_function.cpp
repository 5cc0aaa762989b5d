#include "cbi/rate_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "cbi/errors.hpp"
#include "cbi/roots.hpp"

namespace cbi {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

// psi_x(y) = -R(y) x - F(y); its supremum over y <= y_c is Lambda*(x).
double psi(const Mechanisms& mech, double x, double y) {
    const double r = mech.R(y, 0);
    const double f = mech.F(y, 0);
    if (std::isinf(f)) return -inf;  // only possible at the boundary y = y_c
    return -r * x - f;
}

// psi_x'(y) = -R'(y) x - F'(y), extended real.
double dpsi(const Mechanisms& mech, double x, double y) {
    const double rp = mech.R(y, 1);
    const double fp = mech.F(y, 1);
    if (std::isinf(fp)) return -inf;
    return -rp * x - fp;
}

}  // namespace

const char* to_string(LdpRegime r) {
    switch (r) {
        case LdpRegime::FullLdp: return "FullLDP";
        case LdpRegime::BoundedLowerLdp: return "BoundedLowerLDP";
        default: return "DegenerateF0";
    }
}

RateFunction::RateFunction(RiccatiProfile profile) : profile_(std::move(profile)) {
    const Mechanisms& mech = profile_.mechanisms();
    if (!(mech.gamma_F() > 0.0))
        throw OutOfDomain("RateFunction requires gamma_F > 0");
    m_ = mech.stationary_mean();

    if (mech.immigration_zero()) {
        regime_ = LdpRegime::DegenerateF0;
        return;
    }

    // Steepness of the limit log-MGF at lambda_c. With y_c = u_c interior the
    // denominator R'(u_c) vanishes; otherwise divergence needs F'(y_c) = +inf,
    // an exact boundary test on nu.
    const double yc = profile_.y_c();
    bool rprime_vanishes = false;
    if (!profile_.pure_ou() && yc == profile_.u_c())
        rprime_vanishes = std::abs(mech.R(yc, 1)) <= 1e-10 * (1.0 + std::abs(mech.beta()));
    const double fp_boundary = mech.F(yc, 1);
    if (std::isinf(yc)) {
        // lambda_c = inf (pure-OU with gamma_F = inf): F' -> inf unless nu = 0.
        steep_ = !mech.nu().is_zero();
        alpha_ = steep_ ? inf : mech.b() / (-mech.beta());
    } else if (rprime_vanishes) {
        steep_ = fp_boundary > 0.0;  // F' > 0 everywhere once F != 0
        alpha_ = inf;
    } else if (std::isinf(fp_boundary)) {
        steep_ = true;
        alpha_ = inf;
    } else {
        steep_ = false;
        alpha_ = fp_boundary / std::abs(mech.R(yc, 1));
    }
    regime_ = steep_ ? LdpRegime::FullLdp : LdpRegime::BoundedLowerLdp;
}

bool RateFunction::steep() const {
    if (regime_ == LdpRegime::DegenerateF0)
        throw OutOfDomain("steepness is undefined for F = 0");
    return steep_;
}

double RateFunction::alpha() const {
    if (regime_ == LdpRegime::DegenerateF0)
        throw OutOfDomain("alpha is undefined for F = 0");
    return alpha_;
}

RateFunction::Point RateFunction::evaluate(double x) const {
    if (!(x >= 0.0)) throw std::invalid_argument("rate function domain is [0, inf)");
    const Mechanisms& mech = profile_.mechanisms();
    Point pt;
    pt.x = x;

    if (regime_ == LdpRegime::DegenerateF0) {
        const double lc = profile_.lambda_c();
        pt.rate = (x == 0.0) ? 0.0 : lc * x;  // 0 * inf := 0
        pt.y_star = nan;
        pt.lambda_star = nan;
        return pt;
    }
    pt.upper_bound_only = !steep_ && x >= alpha_;

    if (x == m_) {
        pt.y_star = 0.0;
        pt.lambda_star = 0.0;
        pt.rate = 0.0;
        return pt;
    }

    const double yc = profile_.y_c();
    auto slope = [&mech, x](double y) { return dpsi(mech, x, y); };

    if (x > m_) {
        // Stationary point right of 0 if the (decreasing) slope turns negative
        // before y_c; otherwise the supremum sits at the boundary.
        double hi = nan;
        if (std::isinf(yc)) {
            double cand = 1.0;
            for (int j = 0; j < 80 && !(cand > 1e12); ++j, cand *= 2.0)
                if (slope(cand) < 0.0) { hi = cand; break; }
        } else {
            double frac = 0.0;  // ladder y_c * (1 - 2^-j)
            for (int j = 1; j <= 60; ++j) {
                frac = std::pow(0.5, j);
                const double cand = yc * (1.0 - frac);
                if (slope(cand) < 0.0) { hi = cand; break; }
            }
        }
        if (std::isnan(hi)) {
            // psi increasing on the whole ray: supremum at the boundary,
            // evaluated in extended reals (monotone limit of psi).
            pt.y_star = nan;
            pt.lambda_star = nan;
            pt.rate = std::isinf(yc) ? inf : std::max(psi(mech, x, yc), 0.0);
            return pt;
        }
        const double y_star = roots::brent(slope, 0.0, hi);
        pt.y_star = y_star;
        pt.lambda_star = -mech.R(y_star, 0);
        pt.rate = std::max(psi(mech, x, y_star), 0.0);
        return pt;
    }

    // x < m: stationary point left of 0, or a monotone limit as y -> -inf.
    double lo = nan;
    double L = 1.0;
    for (int j = 0; j < 49; ++j, L *= 2.0) {
        if (slope(-L) > 0.0) { lo = -L; break; }
    }
    if (!std::isnan(lo)) {
        const double y_star = roots::brent(slope, lo, 0.0);
        pt.y_star = y_star;
        pt.lambda_star = -mech.R(y_star, 0);
        pt.rate = std::max(psi(mech, x, y_star), 0.0);
        return pt;
    }
    // No stationary point: psi is decreasing in y, so the supremum is the
    // y -> -inf limit: +inf if psi still grows along the ladder, else the
    // plateau value (e.g. Lambda*(0) = b*inf + nu((0,inf))).
    pt.y_star = nan;
    pt.lambda_star = nan;
    double prev = psi(mech, x, -1.0);
    for (int j = 1; j < 49; ++j) {
        const double cur = psi(mech, x, -std::pow(2.0, j));
        if (std::abs(cur - prev) <= 1e-10 * (1.0 + std::abs(cur))) {
            pt.rate = std::max(cur, 0.0);
            return pt;
        }
        prev = cur;
    }
    pt.rate = inf;
    return pt;
}

RateFunction::Exponents RateFunction::ldp_exponents(double a1, double a2) const {
    if (!(a1 < a2)) throw std::invalid_argument("ldp_exponents needs a1 < a2");
    a1 = std::max(a1, 0.0);

    // inf of a convex function with minimum at m over an interval.
    auto inf_over = [this](double lo, double hi) -> double {
        if (lo <= m_ && m_ <= hi) return 0.0;
        if (lo > m_) return (*this)(lo);
        return std::isinf(hi) ? inf : (*this)(hi);
    };

    Exponents ex;
    ex.upper = -inf_over(a1, a2);

    if (regime_ == LdpRegime::DegenerateF0) {
        // Zero-immigration regime: the lower bound always collapses to -inf.
        ex.lower = -inf;
        ex.lower_effective = false;
        return ex;
    }
    const double lo = std::max(a1, 0.0);
    const double hi = std::min(a2, alpha_);
    if (!(lo < hi)) {
        ex.lower = -inf;
        ex.lower_effective = false;
        return ex;
    }
    ex.lower = -inf_over(lo, hi);
    ex.lower_effective = true;
    return ex;
}

std::vector<RateFunction::Point> RateFunction::curve(std::size_t n_points) const {
    const Mechanisms& mech = profile_.mechanisms();
    double spread = std::max(1.0, m_);
    try {
        spread = 10.0 * std::sqrt(mech.clt_variance());
    } catch (const SecondMomentInfinite&) {
        // keep the fallback spread
    }
    const double x_max = std::max(4.0 * m_, m_ + spread);

    std::set<double> xs;
    xs.insert(0.0);
    xs.insert(m_);
    xs.insert(x_max);
    // Geometric refinement near m on both sides.
    for (int j = 0; j < 14; ++j) {
        const double d = x_max * std::pow(0.5, j + 2);
        if (m_ - d > 0.0) xs.insert(m_ - d);
        xs.insert(m_ + d);
    }
    const std::size_t uniform = (n_points > xs.size()) ? n_points - xs.size() : 0;
    for (std::size_t i = 1; i <= uniform; ++i)
        xs.insert(x_max * double(i) / double(uniform + 1));

    std::vector<Point> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(evaluate(x));
    return out;
}

void RateFunction::write_curve_csv(const std::vector<Point>& pts, std::ostream& os) {
    os << "x,y_star,lambda_star,rate,upper_bound_only\n";
    for (const auto& p : pts)
        os << p.x << "," << p.y_star << "," << p.lambda_star << "," << p.rate << ","
           << (p.upper_bound_only ? 1 : 0) << "\n";
}

nlohmann::json RateFunction::summary_json() const {
    auto ext = [](double v) -> nlohmann::json {
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return v;
    };
    nlohmann::json j{{"m", m_},
                     {"lambda_c", ext(profile_.lambda_c())},
                     {"regime", to_string(regime_)}};
    if (regime_ != LdpRegime::DegenerateF0) {
        j["alpha"] = ext(alpha_);
        j["steep"] = steep_;
    }
    return j;
}

}  // namespace cbi
