#include "cbi/riccati.hpp"

#include <cassert>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "cbi/errors.hpp"
#include "cbi/ode.hpp"
#include "cbi/quadrature.hpp"
#include "cbi/roots.hpp"

namespace cbi {

CriticalPoints find_u_c(const Mechanisms& mech) {
    if (!mech.nondegenerate())
        throw DegenerateR("find_u_c: R is linear (sigma = 0, mu = 0); use the pure-OU branch");
    const double gr = mech.gamma_R();
    if (!(gr > 0.0)) throw OutOfDomain("find_u_c requires gamma_R > 0");

    // Case split: interior minimum iff R' becomes positive before gamma_R.
    // Phi(gamma_R) <= -beta is exactly R'(gamma_R) <= 0 (Case 2).
    const double rp_boundary = std::isinf(gr) ? inf : mech.R(gr, 1);

    double u_c;
    if (rp_boundary > 0.0) {
        // Case 1: unique zero of R' in (0, gamma_R). R'(0) = beta < 0.
        double hi;
        if (std::isinf(gr)) {
            hi = 1.0;
            while (mech.R(hi, 1) <= 0.0) {
                hi *= 2.0;
                if (hi > 1e12)
                    throw std::runtime_error("find_u_c: R' stayed negative up to 1e12");
            }
        } else if (std::isfinite(rp_boundary)) {
            hi = gr;
        } else {
            // R'(gamma_R) = +inf: approach the boundary on a halving ladder
            // until R' turns positive (monotone convergence guarantees it does).
            hi = gr;
            double frac = 0.5;
            for (int j = 0; j < 100; ++j) {
                hi = gr * (1.0 - frac);
                const double v = mech.R(hi, 1);
                if (std::isfinite(v) && v > 0.0) break;
                frac *= 0.5;
            }
        }
        u_c = roots::brent([&mech](double u) { return mech.R(u, 1); }, 0.0, hi);
        const double resid = std::abs(mech.R(u_c, 1));
        if (!(resid <= 1e-12 * (1.0 + std::abs(mech.beta()))))
            throw std::runtime_error("find_u_c: root residual above tolerance");
    } else {
        // Case 2: R decreasing up to gamma_R; minimum at the boundary.
        // Phi -> inf when gamma_R = inf under nondegeneracy, so gamma_R < inf here.
        assert(std::isfinite(gr) && "Case 2 with gamma_R = inf cannot occur");
        u_c = gr;
    }

    const double lambda_R = -mech.R(u_c, 0);
    if (!(lambda_R > 0.0) || !std::isfinite(lambda_R))
        throw std::runtime_error("find_u_c: lambda_R = -R(u_c) must lie in (0, inf)");
    return {u_c, lambda_R};
}

RiccatiProfile::RiccatiProfile(Mechanisms mech) : mech_(std::move(mech)) {
    const double gf = mech_.gamma_F();
    if (!(mech_.gamma_R() > 0.0))
        throw OutOfDomain("RiccatiProfile requires gamma_R > 0");
    if (mech_.nondegenerate()) {
        const CriticalPoints cp = find_u_c(mech_);
        u_c_ = cp.u_c;
        lambda_R_ = cp.lambda_R;
        lambda_F_ = (gf >= u_c_) ? inf : -mech_.R(gf, 0);
        lambda_c_ = std::min(lambda_F_, lambda_R_);
        y_c_ = std::min(u_c_, gf);
    } else {
        // Pure-jump OU: R(u) = beta u, y(lambda) = lambda/|beta| for all lambda.
        pure_ou_ = true;
        u_c_ = inf;
        lambda_R_ = inf;
        lambda_F_ = std::isinf(gf) ? inf : -mech_.beta() * gf;
        lambda_c_ = lambda_F_;
        y_c_ = gf;
    }
}

// lambda_R itself carries root-finding rounding; comparisons against it use
// this slack so that the mathematically exact critical value lands on the
// boundary branch rather than the exploding one.
static double critical_slack(double lambda_R) {
    return 1e-10 * (1.0 + std::abs(lambda_R));
}

double RiccatiProfile::resolvent_root(double lambda) const {
    if (pure_ou_) return lambda / (-mech_.beta());
    if (lambda > lambda_R_ + critical_slack(lambda_R_))
        throw OutOfDomain("resolvent_root: no solution for lambda > lambda_R");
    if (lambda == 0.0) return 0.0;
    // Double root at lambda_R makes the bracket ill-conditioned; snap to u_c.
    if (lambda_R_ - lambda < 1e-8) return u_c_;

    auto g = [this, lambda](double y) { return mech_.R(y, 0) + lambda; };
    if (lambda > 0.0) return roots::brent(g, 0.0, u_c_);

    // lambda < 0: R(u) >= |beta||u| on u < 0 guarantees the bracket.
    double L = std::max(1.0, 2.0 * std::abs(lambda / mech_.beta()));
    while (!(g(-L) > 0.0)) {
        L *= 2.0;
        if (L > 1e300) throw std::runtime_error("resolvent_root: bracket expansion failed");
    }
    return roots::brent(g, -L, 0.0);
}

RiccatiSolution RiccatiProfile::solve_A(double lambda, double t_end,
                                        const SolverOptions& opts) const {
    if (!(t_end > 0.0)) throw std::invalid_argument("solve_A: t_end must be positive");

    RiccatiSolution sol;
    sol.lambda = lambda;
    auto rhs = [this, lambda](double a) { return mech_.R(a, 0) + lambda; };

    ode::Options oopts;
    oopts.rel_tol = opts.rel_tol;
    oopts.abs_tol = opts.abs_tol;

    const bool exploding =
        !pure_ou_ && lambda > lambda_R_ + critical_slack(lambda_R_);
    const double gr = mech_.gamma_R();
    bool finite_ceiling = false;
    if (exploding) {
        if (std::isfinite(gr)) {
            // Stay strictly below gamma_R: R is +inf past it, and the sliver
            // [ceiling, gamma_R] contributes <= 1e-9*gamma_R/(lambda-lambda_R)
            // to the crossing time.
            oopts.ceiling = gr * (1.0 - 1e-9);
            finite_ceiling = true;
        } else {
            oopts.ceiling = opts.a_max;
            oopts.marks = {opts.a_max * 1e-2, opts.a_max * 1e-1};
        }
    }

    const ode::Result r = ode::integrate(rhs, 0.0, t_end, nullptr, oopts);
    sol.t = r.t;
    sol.a = r.y;
    sol.accepted_steps = r.accepted;
    sol.rejected_steps = r.rejected;

    if (exploding) {
        sol.status = RiccatiSolution::Status::Exploding;
        if (r.ceiling_hit) {
            if (finite_ceiling) {
                sol.explosion_time = r.t_ceiling;
            } else {
                // T(C) ~ T - kappa/C for superlinear R; eliminate the 1/C term
                // with the two largest ceilings.
                const double c1 = oopts.marks[1], c2 = oopts.ceiling;
                const double t1 = r.mark_times[1], t2 = r.t_ceiling;
                sol.explosion_time =
                    std::isfinite(t1) ? (c2 * t2 - c1 * t1) / (c2 - c1) : t2;
            }
        }
    } else {
        sol.status = RiccatiSolution::Status::Global;
        sol.limit = resolvent_root(lambda);
    }
    return sol;
}

double RiccatiProfile::explosion_time(double lambda) const {
    if (pure_ou_ || !(lambda > lambda_R_))
        throw OutOfDomain("explosion_time: defined only for lambda > lambda_R");
    const double gr = mech_.gamma_R();
    auto f = [this, lambda](double u) { return 1.0 / (mech_.R(u, 0) + lambda); };
    quad::Options qopts;
    qopts.rel_tol = 1e-10;
    double T;
    if (std::isfinite(gr)) {
        T = quad::integrate(f, 0.0, gr, qopts);
        // T(lambda) <= gamma_R/(lambda - lambda_R); quadrature should honor it to rounding.
        assert(T <= gr / (lambda - lambda_R_) * (1.0 + 1e-8));
    } else {
        T = quad::integrate_rational_tail(f, 0.0, qopts);
    }
    return T;
}

double RiccatiProfile::integrated_log_mgf(double x0, double t, double lambda,
                                          const SolverOptions& opts) const {
    if (!(t > 0.0)) throw std::invalid_argument("integrated_log_mgf: t must be positive");
    if (!(x0 >= 0.0)) throw std::invalid_argument("integrated_log_mgf: x0 must be >= 0");
    if (lambda == 0.0) return 0.0;

    auto rhs = [this, lambda](double a) { return mech_.R(a, 0) + lambda; };
    auto g = [this](double a) { return mech_.F(a, 0); };

    ode::Options oopts;
    oopts.rel_tol = opts.rel_tol;
    oopts.abs_tol = opts.abs_tol;
    if (lambda > 0.0) {
        // The trajectory is increasing; the first of {gamma_F, gamma_R, a_max}
        // it would cross decides the outcome. Crossing gamma_F makes
        // F(A(s)) = +inf on a set of positive measure; crossing the explosion
        // ceiling means t >= T(lambda). Either way the value is +inf.
        double ceil = opts.a_max;
        const double gr = mech_.gamma_R();
        const double gf = mech_.gamma_F();
        if (std::isfinite(gr)) ceil = std::min(ceil, gr * (1.0 - 1e-9));
        if (std::isfinite(gf)) ceil = std::min(ceil, gf * (1.0 - 1e-12));
        // Saturation: once F(A) approaches the double range the companion
        // integral blows past 1e300 within the remaining pre-explosion time,
        // so crossing this level already means +inf. The cap stays a factor
        // of two below the overflow so RK stages remain evaluable.
        double sat = ceil;
        for (double probe = 1.0; probe < 2.0 * ceil; probe *= 2.0) {
            if (!(mech_.F(probe, 0) < 1e280)) {
                sat = 0.5 * probe;
                break;
            }
            if (probe >= ceil) break;
        }
        oopts.ceiling = std::min(ceil, sat);
    }

    const ode::Result r = ode::integrate(rhs, 0.0, t, g, oopts);
    if (r.ceiling_hit) return inf;
    return x0 * r.y.back() + r.w.back();
}

double RiccatiProfile::limit_mgf(double lambda) const {
    const double slack = critical_slack(lambda_c_);
    if (std::isfinite(lambda_c_) && lambda > lambda_c_ + slack) return inf;
    const bool at_edge = std::isfinite(lambda_c_) && lambda >= lambda_c_ - slack;
    const double y = at_edge ? y_c_ : resolvent_root(lambda);
    return mech_.F(y, 0);
}

double RiccatiProfile::transition_log_laplace(double x0, double t, double lambda,
                                              const SolverOptions& opts) const {
    if (!(lambda <= 0.0))
        throw std::invalid_argument("transition_log_laplace: lambda must be <= 0");
    if (!(t > 0.0)) throw std::invalid_argument("transition_log_laplace: t must be positive");
    if (lambda == 0.0) return 0.0;

    auto rhs = [this](double v) { return mech_.R(v, 0); };
    auto g = [this](double v) { return mech_.F(v, 0); };
    ode::Options oopts;
    oopts.rel_tol = opts.rel_tol;
    oopts.abs_tol = opts.abs_tol;
    const ode::Result r = ode::integrate(rhs, lambda, t, g, oopts);
    return x0 * r.y.back() + r.w.back();
}

void RiccatiSolution::write_csv(std::ostream& os) const {
    os << "t,A\n";
    for (std::size_t i = 0; i < t.size(); ++i) os << t[i] << "," << a[i] << "\n";
}

namespace {
nlohmann::json json_extended(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}
}  // namespace

nlohmann::json RiccatiProfile::summary_json() const {
    return {{"pure_ou", pure_ou_},
            {"u_c", json_extended(u_c_)},
            {"lambda_R", json_extended(lambda_R_)},
            {"lambda_F", json_extended(lambda_F_)},
            {"lambda_c", json_extended(lambda_c_)},
            {"y_c", json_extended(y_c_)},
            {"gamma_F", json_extended(mech_.gamma_F())},
            {"gamma_R", json_extended(mech_.gamma_R())}};
}

}  // namespace cbi
