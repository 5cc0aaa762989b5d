#pragma once

#include <iosfwd>
#include <vector>

#include "json.hpp"

#include "cbi/mechanisms.hpp"
#include "cbi/numeric.hpp"

namespace cbi {

/// Location and value of the global minimum of R:
/// u_c in (0, gamma_R], lambda_R = -R(u_c) in (0, inf).
struct CriticalPoints {
    double u_c;
    double lambda_R;
};

/// u_c and lambda_R for a strictly convex R (Case 1: interior zero of R';
/// Case 2: minimum at gamma_R when R' stays negative). Throws DegenerateR
/// when sigma = 0 and mu = 0; the profile handles that branch separately.
CriticalPoints find_u_c(const Mechanisms& mech);

/// Solution record of A' = R(A) + lambda, A(0) = 0, on the stored grid.
struct RiccatiSolution {
    enum class Status { Global, Exploding };

    double lambda = 0.0;
    std::vector<double> t;
    std::vector<double> a;
    Status status = Status::Global;
    double limit = 0.0;            // y(lambda) for Global solutions
    double explosion_time = inf;   // detected blow-up time; inf if not reached
                                   // within the requested horizon
    long accepted_steps = 0;
    long rejected_steps = 0;

    void write_csv(std::ostream& os) const;  // columns: t, A
};

struct SolverOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double a_max = 1e8;  // blow-up ceiling when gamma_R = inf
};

/// Critical constants of the model and the Riccati/resolvent machinery built
/// on them. For degenerate R (sigma = mu = 0, pure-jump OU) the profile uses
/// the linear branch R(u) = beta u, with u_c = lambda_R = +inf.
/// Immutable; solve operations are pure, safe to run in parallel.
class RiccatiProfile {
public:
    explicit RiccatiProfile(Mechanisms mech);

    const Mechanisms& mechanisms() const { return mech_; }
    bool pure_ou() const { return pure_ou_; }

    double u_c() const { return u_c_; }
    double lambda_R() const { return lambda_R_; }
    double lambda_F() const { return lambda_F_; }
    double lambda_c() const { return lambda_c_; }
    double y_c() const { return y_c_; }

    /// Smallest solution y(lambda) of R(y) + lambda = 0, lambda <= lambda_R.
    /// y(0) = 0 exactly; strictly increasing; y(lambda_R) = u_c.
    /// Throws OutOfDomain above lambda_R.
    double resolvent_root(double lambda) const;

    /// Integrates A' = R(A) + lambda from 0 over [0, t_end]; detects blow-up
    /// for lambda > lambda_R (crossing of gamma_R, or of a_max with Richardson
    /// extrapolation over ceilings {a_max/100, a_max/10, a_max} when
    /// gamma_R = inf).
    RiccatiSolution solve_A(double lambda, double t_end, const SolverOptions& opts = {}) const;

    /// T(lambda) = int_0^{gamma_R} du / (R(u) + lambda), lambda > lambda_R.
    /// This quadrature is the authoritative explosion time.
    double explosion_time(double lambda) const;

    /// log E[e^{lambda int_0^t X_s ds}] = x0 A(t,lambda) + int_0^t F(A(s,lambda)) ds,
    /// +inf when the exponential moment blows up (t >= T(lambda), or A crosses
    /// gamma_F so that F(A(s)) = +inf on a set of positive measure).
    double integrated_log_mgf(double x0, double t, double lambda,
                              const SolverOptions& opts = {}) const;

    /// Limit scaled cumulant generating function:
    /// F(y(lambda)) for lambda <= lambda_c (extended real at the boundary),
    /// +inf for lambda > lambda_c.
    double limit_mgf(double lambda) const;

    /// log E[e^{lambda X_t}] for lambda <= 0 via v' = R(v), v(0) = lambda:
    /// x0 v(t) + int_0^t F(v(s)) ds. Validates the simulator's marginal law.
    double transition_log_laplace(double x0, double t, double lambda,
                                  const SolverOptions& opts = {}) const;

    nlohmann::json summary_json() const;

private:
    Mechanisms mech_;
    bool pure_ou_ = false;
    double u_c_ = inf;
    double lambda_R_ = inf;
    double lambda_F_ = inf;
    double lambda_c_ = inf;
    double y_c_ = inf;
};

}  // namespace cbi
