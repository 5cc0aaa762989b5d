#include "doctest.h"

#include <cmath>
#include <sstream>

#include "cbi/errors.hpp"
#include "cbi/riccati.hpp"
#include "oracles.hpp"

using cbi::LevyMeasure;
using cbi::Mechanisms;
using cbi::RiccatiProfile;
using cbi::RiccatiSolution;
using cbi::find_u_c;
using cbi::inf;

namespace {

Mechanisms cir(double b, double beta, double sigma2, LevyMeasure nu = LevyMeasure::zero()) {
    return Mechanisms(b, beta, std::sqrt(sigma2), std::move(nu), LevyMeasure::zero());
}

// Jump-diffusion CIR closed form: y(l) = (|beta| - sqrt(beta^2 - 2 sigma^2 l)) / sigma^2.
double cir_y(double beta, double sigma2, double l) {
    return (std::abs(beta) - std::sqrt(beta * beta - 2.0 * sigma2 * l)) / sigma2;
}

// CIR explosion time: int_0^inf du / (sigma^2/2 u^2 + beta u + l), l > beta^2/(2 sigma^2).
double cir_T(double beta, double sigma2, double l) {
    const double D = std::sqrt(2.0 * l / sigma2 - beta * beta / (sigma2 * sigma2));
    return (2.0 / (sigma2 * D)) * (M_PI / 2.0 + std::atan(std::abs(beta) / (sigma2 * D)));
}

const LevyMeasure tempered_mu = LevyMeasure::tempered_power_law(1.0, 1.0, 2.5, 0.0);

}  // namespace

TEST_CASE("find_u_c: CIR closed forms") {
    auto cp = find_u_c(cir(1.0, -1.0, 2.0));
    CHECK(cp.u_c == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(cp.lambda_R == doctest::Approx(0.25).epsilon(1e-10));
    auto cp2 = find_u_c(cir(1.0, -2.0, 2.0));
    CHECK(cp2.u_c == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(cp2.lambda_R == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("find_u_c: tempered-stable branching vs grid-scan oracle") {
    Mechanisms m(1.0, -1.0, 0.0, LevyMeasure::zero(), tempered_mu);
    auto cp = find_u_c(m);
    CHECK(cp.u_c > 0.0);
    CHECK(cp.u_c < 1.0);
    // dense scan of R on (0,1)
    double best = inf, arg = 0.0;
    for (double u = 1e-5; u < 1.0; u += 1e-5) {
        const double v = m.R(u, 0);
        if (v < best) {
            best = v;
            arg = u;
        }
    }
    CHECK(std::abs(cp.u_c - arg) <= 1.5e-5);
    CHECK(cp.lambda_R == doctest::Approx(-best).epsilon(1e-8));
    CHECK(std::abs(m.R(cp.u_c, 1)) <= 1e-12 * (1.0 + 1.0));
}

TEST_CASE("find_u_c: boundary minimum (Case 2) and degenerate R") {
    // Small tempered-stable branching part: R' stays negative up to gamma_R = 1.
    Mechanisms m(1.0, -1.0, 0.0, LevyMeasure::zero(),
                 LevyMeasure::tempered_power_law(0.2, 1.0, 2.5, 0.0));
    CHECK(m.R(1.0, 1) < 0.0);
    auto cp = find_u_c(m);
    CHECK(cp.u_c == 1.0);
    CHECK(cp.lambda_R == doctest::Approx(-m.R(1.0, 0)));
    CHECK(cp.lambda_R > 0.0);
    // sigma = 0, mu = 0: degenerate
    CHECK_THROWS_AS(find_u_c(Mechanisms(1.0, -1.0, 0.0, LevyMeasure::zero(),
                                        LevyMeasure::zero())),
                    cbi::DegenerateR);
}

TEST_CASE("resolvent root: CIR closed form and bisection oracle") {
    RiccatiProfile prof(cir(1.0, -1.0, 2.0));
    CHECK(prof.resolvent_root(0.0) == 0.0);
    CHECK(prof.resolvent_root(prof.lambda_R()) == doctest::Approx(0.5));
    // closed form on a grid of 50 lambdas in [-5, 0.25]
    for (int i = 0; i < 50; ++i) {
        const double l = -5.0 + (0.25 + 5.0) * double(i) / 49.0;
        CHECK(prof.resolvent_root(l) ==
              doctest::Approx(cir_y(-1.0, 2.0, l)).epsilon(1e-8));
    }
    // lambda = -4, evaluated from the printed formula and a bisection oracle
    const double want = cir_y(-1.0, 2.0, -4.0);
    const double via_bisect = oracle::bisect(
        [&prof](double y) { return prof.mechanisms().R(y, 0) + (-4.0); }, -5.0, 0.0, 1e-12);
    CHECK(prof.resolvent_root(-4.0) == doctest::Approx(want).epsilon(1e-10));
    CHECK(prof.resolvent_root(-4.0) == doctest::Approx(via_bisect).epsilon(1e-10));
    CHECK_THROWS_AS(prof.resolvent_root(0.26), cbi::OutOfDomain);
    // near-critical snap
    CHECK(prof.resolvent_root(prof.lambda_R() - 1e-9) == prof.u_c());
}

TEST_CASE("resolvent root: strictly increasing and derivative identity") {
    Mechanisms m(1.0, -1.0, 0.0, LevyMeasure::zero(), tempered_mu);
    RiccatiProfile prof(m);
    double prev = -inf;
    for (double l = -3.0; l < prof.lambda_R() - 0.02; l += 0.05) {
        const double y = prof.resolvent_root(l);
        CHECK(y > prev);
        prev = y;
        // y'(l) = -1/R'(y(l)) via central differences
        const double h = 1e-6;
        const double yp = (prof.resolvent_root(l + h) - prof.resolvent_root(l - h)) / (2 * h);
        CHECK(std::abs(yp * m.R(y, 1) + 1.0) <= 1e-6 * (1.0 + std::abs(yp)));
    }
}

TEST_CASE("critical lambdas") {
    // CIR with gamma_F = inf: lambda_c = lambda_R
    RiccatiProfile p1(cir(1.0, -1.0, 2.0));
    CHECK(p1.lambda_F() == inf);
    CHECK(p1.lambda_c() == doctest::Approx(0.25).epsilon(1e-10));
    // gamma_F = 0.25 < u_c = 0.5: lambda_c = 0.25 - (0.0625) = 0.1875
    RiccatiProfile p2(cir(1.0, -1.0, 2.0,
                          LevyMeasure::tempered_power_law(1.0, 0.25, 2.0, 1.0)));
    CHECK(p2.lambda_F() == doctest::Approx(0.1875).epsilon(1e-10));
    CHECK(p2.lambda_c() == doctest::Approx(0.1875).epsilon(1e-10));
    CHECK(p2.y_c() == doctest::Approx(0.25));
    // pure-jump OU: lambda_c = |beta| gamma_F
    Mechanisms ou(1.0, -2.0, 0.0, LevyMeasure::tempered_power_law(1.0, 1.0, 2.0, 1.0),
                  LevyMeasure::zero());
    RiccatiProfile p3(ou);
    CHECK(p3.pure_ou());
    CHECK(p3.lambda_c() == doctest::Approx(2.0));
    CHECK(p3.resolvent_root(1.3) == doctest::Approx(0.65));
}

TEST_CASE("solve_A: zero forcing stays at zero") {
    RiccatiProfile prof(cir(1.0, -1.0, 2.0));
    const auto sol = prof.solve_A(0.0, 10.0);
    CHECK(sol.status == RiccatiSolution::Status::Global);
    for (double a : sol.a) CHECK(a == 0.0);
}

TEST_CASE("solve_A: global solutions obey the sign table and converge") {
    Mechanisms models[] = {cir(1.0, -1.0, 2.0),
                           Mechanisms(1.0, -1.0, 0.0, LevyMeasure::zero(), tempered_mu)};
    for (const auto& m : models) {
        RiccatiProfile prof(m);
        for (double frac : {-4.0, -0.5, 0.4, 0.8}) {
            const double l = (frac < 0) ? frac : frac * prof.lambda_R();
            const double y = prof.resolvent_root(l);
            const double rate = std::abs(m.R(y, 1));
            const double t_end = std::min(200.0, 25.0 / rate);
            const auto sol = prof.solve_A(l, t_end);
            REQUIRE(sol.status == RiccatiSolution::Status::Global);
            const double slack = 1e-9 * (1.0 + std::abs(y));
            for (std::size_t i = 0; i < sol.a.size(); ++i) {
                if (l < 0) {
                    CHECK(sol.a[i] <= slack);
                    CHECK(sol.a[i] > y - slack);
                    if (i) CHECK(sol.a[i] <= sol.a[i - 1] + slack);
                } else {
                    CHECK(sol.a[i] >= -slack);
                    CHECK(sol.a[i] < y + slack);
                    if (i) CHECK(sol.a[i] >= sol.a[i - 1] - slack);
                }
            }
            CHECK(std::abs(sol.a.back() - y) < 1e-6);
            // residual |R(A)+l| decreases along the grid
            double prev_resid = inf;
            for (std::size_t i = 0; i < sol.a.size(); i += std::max<std::size_t>(1, sol.a.size() / 8)) {
                const double resid = std::abs(m.R(sol.a[i], 0) + l);
                CHECK(resid <= prev_resid * (1.0 + 1e-6) + 1e-12);
                prev_resid = resid;
            }
        }
    }
}

TEST_CASE("solve_A: separation of variables") {
    // H(A(t)) = int_0^{A(t)} du/(R(u)+l) = t at interior times.
    Mechanisms m = cir(1.0, -1.0, 2.0);
    RiccatiProfile prof(m);
    const double l = 0.2;
    const auto sol = prof.solve_A(l, 8.0);
    const std::size_t n = sol.t.size();
    for (std::size_t pick = 1; pick <= 5; ++pick) {
        const std::size_t i = pick * (n - 1) / 6;
        if (sol.t[i] <= 0.0) continue;
        const double lhs = oracle::integrate(
            [&m, l](double u) { return 1.0 / (m.R(u, 0) + l); }, 0.0, sol.a[i]);
        CHECK(std::abs(lhs - sol.t[i]) <= 1e-6 * (1.0 + sol.t[i]));
    }
}

TEST_CASE("solve_A: lambda exactly at lambda_R converges to u_c (slowly)") {
    RiccatiProfile prof(cir(1.0, -2.0, 2.0));  // lambda_R = 1, u_c = 1
    const double t_end = 2.0 / (2.0 * 1e-4);   // double-root rate: u_c - A ~ 2/(R'' t)
    const auto sol = prof.solve_A(1.0, t_end);
    CHECK(sol.status == RiccatiSolution::Status::Global);
    CHECK(std::abs(sol.a.back() - 1.0) < 2e-4);
    for (double a : sol.a) CHECK(a < 1.0 + 1e-12);
}

TEST_CASE("pure-OU Riccati flow is the explicit linear solution") {
    Mechanisms ou(1.0, -2.0, 0.0, LevyMeasure::point_mass(1.0, 1.0), LevyMeasure::zero());
    RiccatiProfile prof(ou);
    for (double l : {-1.0, 0.5, 2.0}) {
        const auto sol = prof.solve_A(l, 6.0);
        CHECK(sol.status == RiccatiSolution::Status::Global);
        for (std::size_t i = 0; i < sol.t.size(); ++i) {
            const double want = l * (1.0 - std::exp(-2.0 * sol.t[i])) / 2.0;
            CHECK(sol.a[i] == doctest::Approx(want).epsilon(1e-8));
        }
    }
}

TEST_CASE("explosion: quadrature vs closed form and vs the ODE") {
    RiccatiProfile prof(cir(1.0, -1.0, 2.0));  // lambda_R = 0.25, gamma_R = inf
    CHECK_THROWS_AS(prof.explosion_time(0.2), cbi::OutOfDomain);
    for (double l : {0.5, 1.0, 3.0}) {
        CHECK(prof.explosion_time(l) ==
              doctest::Approx(cir_T(-1.0, 2.0, l)).epsilon(1e-8));
    }
    // monotone: T decreases as lambda grows
    CHECK(prof.explosion_time(0.5) > prof.explosion_time(0.75));
    CHECK(prof.explosion_time(0.75) > prof.explosion_time(1.0));
    // ODE blow-up estimate with ceiling extrapolation (gamma_R = inf): 1e-3
    for (double l : {0.5, 2.0}) {
        const double T = prof.explosion_time(l);
        const auto sol = prof.solve_A(l, 3.0 * T);
        REQUIRE(sol.status == RiccatiSolution::Status::Exploding);
        CHECK(std::isfinite(sol.explosion_time));
        CHECK(std::abs(sol.explosion_time - T) / T < 1e-3);
    }
}

TEST_CASE("explosion with finite gamma_R") {
    Mechanisms m(1.0, -1.0, 0.0, LevyMeasure::zero(), tempered_mu);  // gamma_R = 1
    RiccatiProfile prof(m);
    const double lr = prof.lambda_R();
    for (double l : {1.5 * lr, 3.0 * lr}) {
        const double T = prof.explosion_time(l);
        CHECK(std::isfinite(T));
        CHECK(T <= 1.0 / (l - lr) * (1.0 + 1e-9));  // T bound with gamma_R = 1
        const auto sol = prof.solve_A(l, 3.0 * T);
        REQUIRE(sol.status == RiccatiSolution::Status::Exploding);
        CHECK(std::abs(sol.explosion_time - T) / T < 1e-4);
    }
    // pure-OU never explodes
    Mechanisms ou(1.0, -2.0, 0.0, LevyMeasure::point_mass(1.0, 1.0), LevyMeasure::zero());
    CHECK_THROWS_AS(RiccatiProfile(ou).explosion_time(5.0), cbi::OutOfDomain);
}

namespace {

// Independent route for int_0^t F(A(s)) ds: 4th-order composite Simpson on the
// stored ODE grid with cubic-Hermite midpoints.
double grid_log_mgf(const RiccatiProfile& prof, const RiccatiSolution& sol, double x0) {
    const Mechanisms& m = prof.mechanisms();
    const double l = sol.lambda;
    double w = 0.0;
    for (std::size_t i = 0; i + 1 < sol.t.size(); ++i) {
        const double h = sol.t[i + 1] - sol.t[i];
        if (h <= 0.0) continue;
        const double a0 = sol.a[i], a1 = sol.a[i + 1];
        const double f0 = m.R(a0, 0) + l, f1 = m.R(a1, 0) + l;
        const double amid = 0.5 * (a0 + a1) + 0.125 * h * (f0 - f1);
        w += h / 6.0 * (m.F(a0, 0) + 4.0 * m.F(amid, 0) + m.F(a1, 0));
    }
    return x0 * sol.a.back() + w;
}

}  // namespace

TEST_CASE("integrated log-MGF") {
    Mechanisms m = cir(1.0, -1.0, 2.0, LevyMeasure::point_mass(0.5, 1.0));
    RiccatiProfile prof(m);
    CHECK(prof.integrated_log_mgf(1.0, 2.0, 0.0) == 0.0);
    // negative exposure: in (-inf, 0]
    const double neg = prof.integrated_log_mgf(1.0, 2.0, -1.0);
    CHECK(neg < 0.0);
    CHECK(std::isfinite(neg));
    // two independent routes agree
    for (double l : {-1.0, 0.1, 0.2}) {
        for (double t : {1.0, 2.0, 5.0}) {
            const auto sol = prof.solve_A(l, t);
            const double via_grid = grid_log_mgf(prof, sol, 1.0);
            const double via_joint = prof.integrated_log_mgf(1.0, t, l);
            CHECK(via_joint == doctest::Approx(via_grid).epsilon(1e-8));
        }
    }
    // beyond the explosion time the moment is infinite
    const double T = prof.explosion_time(0.5);
    CHECK(prof.integrated_log_mgf(1.0, T * 2.0, 0.5) == inf);
    CHECK(std::isfinite(prof.integrated_log_mgf(1.0, T * 0.2, 0.5)));
}

TEST_CASE("integrated log-MGF: immigration threshold crossing") {
    // gamma_F = 0.25 < u_c; lambda in (lambda_F, lambda_R] pushes A past gamma_F.
    Mechanisms m = cir(1.0, -1.0, 2.0, LevyMeasure::tempered_power_law(1.0, 0.25, 2.0, 1.0));
    RiccatiProfile prof(m);
    const double l = 0.22;
    REQUIRE(l > prof.lambda_F());
    REQUIRE(l < prof.lambda_R());
    CHECK(std::isfinite(prof.integrated_log_mgf(1.0, 0.5, l)));
    CHECK(prof.integrated_log_mgf(1.0, 30.0, l) == inf);
}

TEST_CASE("limit MGF") {
    RiccatiProfile prof(cir(1.0, -1.0, 2.0));
    CHECK(prof.limit_mgf(0.0) == 0.0);
    CHECK(prof.limit_mgf(0.26) == inf);
    CHECK(prof.limit_mgf(0.25) == doctest::Approx(0.5));  // F(y) = b*y at u_c
    CHECK(prof.limit_mgf(-1.0) == doctest::Approx(cir_y(-1.0, 2.0, -1.0)).epsilon(1e-9));

    // pure-jump OU: Lambda(l) = F(l/|beta|)
    Mechanisms ou(1.0, -2.0, 0.0, LevyMeasure::tempered_power_law(1.0, 1.0, 3.0, 1.0),
                  LevyMeasure::zero());
    RiccatiProfile pou(ou);
    for (double l : {-1.0, 0.5, 1.9}) CHECK(pou.limit_mgf(l) == ou.F(l / 2.0, 0));

    // boundary value: finite for eta = 1.5, infinite for eta = 0.8
    Mechanisms fin = cir(1.0, -1.0, 2.0, LevyMeasure::tempered_power_law(1.0, 0.25, 1.5, 1.0));
    RiccatiProfile pfin(fin);
    const double at_edge = pfin.limit_mgf(pfin.lambda_c());
    CHECK(std::isfinite(at_edge));
    const double tail = oracle::integrate_tail(
        [](double z) { return (1.0 - std::exp(-0.25 * z)) * std::pow(z, -1.5); }, 1.0);
    CHECK(at_edge == doctest::Approx(0.25 + tail).epsilon(1e-7));
    Mechanisms dvg = cir(1.0, -1.0, 2.0, LevyMeasure::tempered_power_law(1.0, 0.25, 0.8, 1.0));
    RiccatiProfile pdvg(dvg);
    CHECK(pdvg.limit_mgf(pdvg.lambda_c()) == inf);
    CHECK(std::isfinite(pdvg.limit_mgf(pdvg.lambda_c() - 1e-3)));
}

TEST_CASE("transition log-Laplace") {
    RiccatiProfile prof(cir(1.0, -1.0, 2.0));
    CHECK(prof.transition_log_laplace(1.0, 1.0, 0.0) == 0.0);
    CHECK_THROWS(prof.transition_log_laplace(1.0, 1.0, 0.5));
    // continuity at t -> 0+: value -> x0 * lambda
    CHECK(prof.transition_log_laplace(2.0, 1e-8, -1.0) ==
          doctest::Approx(-2.0).epsilon(1e-6));
    const double v = prof.transition_log_laplace(1.0, 1.0, -1.0);
    CHECK(v < 0.0);
    CHECK(std::isfinite(v));
}

TEST_CASE("solution export and profile summary") {
    RiccatiProfile prof(cir(1.0, -1.0, 2.0));
    const auto sol = prof.solve_A(0.2, 5.0);
    std::ostringstream os;
    sol.write_csv(os);
    CHECK(os.str().rfind("t,A\n", 0) == 0);
    const auto j = prof.summary_json();
    CHECK(j.at("lambda_R").get<double>() == doctest::Approx(0.25));
    CHECK(j.at("gamma_R").get<std::string>() == "inf");
}
