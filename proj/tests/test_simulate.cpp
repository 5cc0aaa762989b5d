#include "doctest.h"

#include <cmath>
#include <sstream>

#include "cbi/errors.hpp"
#include "cbi/riccati.hpp"
#include "cbi/simulate.hpp"

using cbi::LevyMeasure;
using cbi::Mechanisms;
using cbi::PathBatch;
using cbi::PathConfig;
using cbi::Scheme;
using cbi::simulate_batch;

namespace {

Mechanisms cir(double b, double beta, double sigma2, LevyMeasure nu = LevyMeasure::zero(),
               LevyMeasure mu = LevyMeasure::zero()) {
    return Mechanisms(b, beta, std::sqrt(sigma2), std::move(nu), std::move(mu));
}

PathConfig cfg_of(double x0, double t_end, double dt, std::vector<double> cps,
                  std::uint64_t seed = 7) {
    PathConfig c;
    c.x0 = x0;
    c.t_end = t_end;
    c.dt = dt;
    c.checkpoints = std::move(cps);
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("zero model stays at zero") {
    Mechanisms m = cir(0.0, -1.0, 1.0);
    const auto batch = simulate_batch(m, cfg_of(0.0, 5.0, 0.01, {1.0, 5.0}), 100);
    for (std::size_t p = 0; p < batch.n_paths; ++p)
        for (std::size_t j = 0; j < batch.times.size(); ++j) {
            CHECK(batch.at(batch.x, p, j) == 0.0);
            CHECK(batch.at(batch.y, p, j) == 0.0);
        }
}

TEST_CASE("deterministic drift model solves the linear ODE") {
    Mechanisms m = cir(1.0, -1.0, 0.0);
    const auto batch = simulate_batch(m, cfg_of(0.0, 2.0, 1e-3, {1.0, 2.0}), 3);
    for (std::size_t p = 0; p < 3; ++p) {
        CHECK(batch.at(batch.x, p, 0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(2e-3));
        CHECK(batch.at(batch.x, p, 1) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(2e-3));
    }
}

TEST_CASE("config validation") {
    Mechanisms m = cir(1.0, -2.0, 1.0);
    CHECK_THROWS_AS(simulate_batch(m, cfg_of(0.0, 1.0, 0.3, {1.0}), 10), cbi::StepTooCoarse);
    CHECK_THROWS(simulate_batch(m, cfg_of(-1.0, 1.0, 0.01, {1.0}), 10));
    // eps above the smallest atom
    Mechanisms ma = cir(1.0, -1.0, 1.0, LevyMeasure::point_mass(1.0, 0.5));
    PathConfig bad = cfg_of(0.0, 1.0, 0.01, {1.0});
    bad.jump_eps = 0.6;
    CHECK_THROWS(simulate_batch(ma, bad, 10));
    // ExactCir constraints
    PathConfig ex = cfg_of(1.0, 1.0, 0.01, {1.0});
    ex.scheme = Scheme::ExactCir;
    Mechanisms with_mu = cir(1.0, -1.0, 1.0, LevyMeasure::zero(),
                             LevyMeasure::point_mass(1.0, 1.0));
    CHECK_THROWS_AS(simulate_batch(with_mu, ex, 10), cbi::IncompatibleScheme);
    Mechanisms heavy_nu = cir(1.0, -1.0, 1.0,
                              LevyMeasure::tempered_power_law(1.0, 1.0, 1.5, 0.0));
    CHECK_THROWS_AS(simulate_batch(heavy_nu, ex, 10), cbi::IncompatibleScheme);
}

TEST_CASE("reproducibility is bit-exact and thread-count independent") {
    Mechanisms m = cir(1.0, -2.0, 2.0, LevyMeasure::point_mass(0.5, 1.0),
                       LevyMeasure::point_mass(0.5, 0.5));
    PathConfig c = cfg_of(0.3, 2.0, 0.01, {1.0, 2.0}, 123);
    c.n_threads = 2;
    const auto b1 = simulate_batch(m, c, 500);
    const auto b2 = simulate_batch(m, c, 500);
    CHECK(b1.x == b2.x);
    CHECK(b1.y == b2.y);
    CHECK(b1.mart == b2.mart);
    c.n_threads = 1;
    const auto b3 = simulate_batch(m, c, 500);
    CHECK(b1.x == b3.x);
    CHECK(b1.qv_mu == b3.qv_mu);
}

TEST_CASE("conditional mean matches the affine formula") {
    // E[X_t] = x0 e^{bt} + m(1 - e^{bt}) at t = 1, 5, 20
    Mechanisms m = cir(1.0, -2.0, 2.0, LevyMeasure::point_mass(0.5, 1.0));
    const double mean = m.stationary_mean();
    const std::size_t n = 20000;
    const auto batch = simulate_batch(m, cfg_of(0.0, 20.0, 0.01, {1.0, 5.0, 20.0}), n);
    CHECK(batch.truncated_fraction < 0.01);
    for (std::size_t j = 0; j < batch.times.size(); ++j) {
        const double t = batch.times[j];
        const auto [mx, vx] = batch.column_stats(batch.x, j);
        const double want = mean * (1.0 - std::exp(-2.0 * t));
        const double se = std::sqrt(vx / double(n));
        CHECK(std::abs(mx - want) <= 3.0 * se + 2e-3);
    }
    // martingale part has mean ~ 0
    const auto [mm, vm] = batch.column_stats(batch.mart, batch.times.size() - 1);
    CHECK(std::abs(mm) <= 3.0 * std::sqrt(vm / double(n)));
}

TEST_CASE("weak order: halving dt moves the mean by less than one SE") {
    Mechanisms m = cir(1.0, -2.0, 2.0, LevyMeasure::point_mass(0.3, 1.0));
    const std::size_t n = 40000;
    const auto coarse = simulate_batch(m, cfg_of(0.0, 5.0, 0.02, {5.0}, 11), n);
    const auto fine = simulate_batch(m, cfg_of(0.0, 5.0, 0.01, {5.0}, 12), n);
    const auto [m1, v1] = coarse.column_stats(coarse.y, 0);
    const auto [m2, v2] = fine.column_stats(fine.y, 0);
    const double se = std::sqrt(v1 / double(n) + v2 / double(n));
    CHECK(std::abs(m1 - m2) <= se);
}

TEST_CASE("LLN: variance of Y_t decays like 1/t") {
    Mechanisms m = cir(1.0, -2.0, 2.0);
    const std::size_t n = 4000;
    const auto batch = simulate_batch(m, cfg_of(0.5, 200.0, 0.02, {100.0, 200.0}), n);
    const auto [y1, v1] = batch.column_stats(batch.y, 0);
    const auto [y2, v2] = batch.column_stats(batch.y, 1);
    CHECK(std::abs(y2 - 0.5) < 0.02);
    // MSE(100)/MSE(200) ~ 2 within 30%
    CHECK(v1 / v2 == doctest::Approx(2.0).epsilon(0.30));
}

TEST_CASE("qv diagnostics: jump-free model has zero jump components") {
    Mechanisms m = cir(1.0, -2.0, 2.0);
    const auto batch = simulate_batch(m, cfg_of(0.5, 10.0, 0.01, {10.0}), 200);
    const auto rep = qv_diagnostics(m, batch);
    CHECK(rep.rows.back().mu_rate == 0.0);
    CHECK(rep.rows.back().nu_rate == 0.0);
    CHECK(rep.target_mu == 0.0);
    CHECK(rep.target_nu == 0.0);
}

TEST_CASE("qv diagnostics: atom immigration QV rate -> int z^2 nu") {
    Mechanisms m = cir(0.5, -1.0, 1.0, LevyMeasure::point_mass(1.0, 1.0));
    const std::size_t n = 4000;
    const auto batch = simulate_batch(m, cfg_of(0.0, 50.0, 0.01, {25.0, 50.0}), n);
    const auto rep = qv_diagnostics(m, batch);
    const auto& row = rep.rows.back();
    CHECK(rep.target_nu == doctest::Approx(1.0));
    CHECK(std::abs(row.nu_rate - 1.0) <= 3.0 * row.nu_se);
    // QV components are nonnegative and nondecreasing in t, pathwise
    for (std::size_t p = 0; p < n; ++p) {
        CHECK(batch.at(batch.qv_diff, p, 0) >= 0.0);
        CHECK(batch.at(batch.qv_diff, p, 1) >= batch.at(batch.qv_diff, p, 0));
        CHECK(batch.at(batch.qv_nu, p, 1) >= batch.at(batch.qv_nu, p, 0));
    }
}

TEST_CASE("infinite-activity branching: thinning plus small-jump corrections") {
    // Tempered-stable mu with x0 = 0 exercises the compensator and the
    // matched-variance Gaussian for the sub-eps jumps.
    Mechanisms m(1.0, -1.0, 0.0, LevyMeasure::zero(),
                 LevyMeasure::tempered_power_law(1.0, 1.0, 2.5, 0.0));
    const std::size_t n = 8000;
    PathConfig c = cfg_of(1.0, 10.0, 0.005, {2.0, 10.0});
    c.jump_eps = 0.01;
    const auto batch = simulate_batch(m, c, n);
    for (std::size_t j = 0; j < batch.times.size(); ++j) {
        const auto [mx, vx] = batch.column_stats(batch.x, j);
        const double se = std::sqrt(vx / double(n));
        CHECK(std::abs(mx - 1.0) <= 3.0 * se + 5e-3);  // x0 = m = 1
    }
    const auto rep = qv_diagnostics(m, batch);
    const auto& row = rep.rows.back();
    CHECK(std::abs(row.mu_rate - rep.target_mu) <= 3.0 * row.mu_se + 0.01 * rep.target_mu);
}

TEST_CASE("qv diagnostics: full model total matches rho^2 within 5%") {
    Mechanisms m = cir(1.0, -2.0, 2.0, LevyMeasure::point_mass(0.5, 1.0),
                       LevyMeasure::point_mass(0.5, 0.5));
    const double rho2 = m.clt_variance();
    const std::size_t n = 10000;
    const auto batch = simulate_batch(m, cfg_of(m.stationary_mean(), 100.0, 0.01, {100.0}), n);
    const auto rep = qv_diagnostics(m, batch);
    CHECK(rep.rows.back().total_over_beta2 == doctest::Approx(rho2).epsilon(0.05));
}

TEST_CASE("exact CIR scheme agrees with Euler and the affine formula") {
    Mechanisms m = cir(1.0, -1.0, 2.0, LevyMeasure::point_mass(0.4, 0.8));
    const std::size_t n = 20000;
    PathConfig ex = cfg_of(1.0, 2.0, 0.02, {2.0}, 5);
    ex.scheme = Scheme::ExactCir;
    const auto be = simulate_batch(m, ex, n);
    PathConfig eu = cfg_of(1.0, 2.0, 0.002, {2.0}, 6);
    const auto bu = simulate_batch(m, eu, n);
    const auto [me, ve] = be.column_stats(be.x, 0);
    const auto [mu_, vu] = bu.column_stats(bu.x, 0);
    const double se = std::sqrt(ve / double(n) + vu / double(n));
    CHECK(std::abs(me - mu_) <= 4.0 * se);
    // exact mean from the moment formula
    const double want = 1.0 * std::exp(-2.0) + m.stationary_mean() * (1.0 - std::exp(-2.0));
    CHECK(std::abs(me - want) <= 4.0 * std::sqrt(ve / double(n)) + 1e-3);
}

TEST_CASE("marginal law validates transition_log_laplace") {
    Mechanisms m = cir(1.0, -1.0, 2.0, LevyMeasure::point_mass(0.4, 0.8));
    cbi::RiccatiProfile prof(m);
    const double want = prof.transition_log_laplace(1.0, 1.0, -1.0);
    const std::size_t n = 50000;
    const auto batch = simulate_batch(m, cfg_of(1.0, 1.0, 1e-3, {1.0}), n);
    double mean = 0.0;
    for (std::size_t p = 0; p < n; ++p) mean += std::exp(-batch.at(batch.x, p, 0));
    mean /= double(n);
    double var = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double d = std::exp(-batch.at(batch.x, p, 0)) - mean;
        var += d * d;
    }
    var /= double(n - 1);
    const double se_log = std::sqrt(var / double(n)) / mean;
    CHECK(std::abs(std::log(mean) - want) <= 4.0 * se_log);
}

TEST_CASE("batch csv embeds the config echo") {
    Mechanisms m = cir(1.0, -2.0, 1.0);
    const auto batch = simulate_batch(m, cfg_of(0.0, 1.0, 0.01, {0.5, 1.0}), 50);
    std::ostringstream os;
    batch.write_csv(os, "unit-test-config");
    CHECK(os.str().find("# config: unit-test-config") != std::string::npos);
    CHECK(os.str().find("t,mean_x,mean_y,var_y") != std::string::npos);
}
