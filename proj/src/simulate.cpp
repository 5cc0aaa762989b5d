#include "cbi/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

#include "cbi/errors.hpp"
#include "cbi/numeric.hpp"

namespace cbi {

namespace {

struct JumpPlan {
    // nu (immigration): state-independent compound Poisson above eps.
    double nu_rate = 0.0;        // nu((eps, inf))
    double nu_small_drift = 0.0; // int_(x0,eps] z dnu
    double nu_small_qv = 0.0;    // int_(x0,eps] z^2 dnu
    // mu (branching): thinned at rate X * mu_rate, compensated.
    double mu_rate = 0.0;        // mu((eps, inf))
    double mu_tail_mean = 0.0;   // int_(eps,inf) z dmu (compensator density)
    double mu_small_var = 0.0;   // int_(x0,eps] z^2 dmu (diffusion proxy)
    double b_hat = inf;          // b + int z dnu (martingale drift)
};

JumpPlan make_plan(const Mechanisms& mech, double eps) {
    JumpPlan plan;
    const LevyMeasure& nu = mech.nu();
    const LevyMeasure& mu = mech.mu();
    if (!nu.is_zero()) {
        plan.nu_rate = nu.tail_mass(eps);
        plan.nu_small_drift = nu.small_moment(eps, 1);
        plan.nu_small_qv = nu.small_moment(eps, 2);
        if (std::isinf(plan.nu_rate))
            throw std::invalid_argument("simulate: nu((eps,inf)) must be finite");
    }
    if (!mu.is_zero()) {
        plan.mu_rate = mu.tail_mass(eps);
        plan.mu_tail_mean = mu.tail_moment(eps, 1);
        plan.mu_small_var = mu.small_moment(eps, 2);
        if (std::isinf(plan.mu_rate) || std::isinf(plan.mu_tail_mean))
            throw std::invalid_argument("simulate: mu tail statistics must be finite");
    }
    const double nu1 = nu.is_zero() ? 0.0 : nu.moment(1);
    plan.b_hat = std::isinf(nu1) ? inf : mech.b() + nu1;
    return plan;
}

long poisson_draw(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<long> pois(mean);
    return pois(rng);
}

struct PathAccum {
    double x;
    double y_int = 0.0;     // trapezoid of X
    double drift_int = 0.0; // left sums of (b_hat + beta X)
    double qv_diff = 0.0;
    double qv_mu = 0.0;
    double qv_nu = 0.0;
    long clipped = 0;
};

}  // namespace

std::pair<double, double> PathBatch::column_stats(const std::vector<double>& field,
                                                  std::size_t cp) const {
    const std::size_t nc = times.size();
    double mean = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) mean += field[p * nc + cp];
    mean /= double(n_paths);
    double var = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        const double d = field[p * nc + cp] - mean;
        var += d * d;
    }
    var /= double(n_paths > 1 ? n_paths - 1 : 1);
    return {mean, var};
}

void PathBatch::write_csv(std::ostream& os, const std::string& config_echo) const {
    os << "# config: " << config_echo << "\n";
    os << "t,mean_x,mean_y,var_y,mean_qv_diff,mean_qv_mu,mean_qv_nu\n";
    for (std::size_t j = 0; j < times.size(); ++j) {
        const auto [mx, vx] = column_stats(x, j);
        const auto [my, vy] = column_stats(y, j);
        const auto [qd, vd] = column_stats(qv_diff, j);
        const auto [qm, vm] = column_stats(qv_mu, j);
        const auto [qn, vn] = column_stats(qv_nu, j);
        (void)vx; (void)vd; (void)vm; (void)vn;
        os << times[j] << "," << mx << "," << my << "," << vy << "," << qd << ","
           << qm << "," << qn << "\n";
    }
}

PathBatch simulate_batch(const Mechanisms& mech, const PathConfig& cfg,
                         std::size_t n_paths) {
    if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0) || cfg.dt > cfg.t_end)
        throw std::invalid_argument("simulate: need 0 < dt <= t_end");
    if (cfg.dt * std::abs(mech.beta()) > 0.5)
        throw StepTooCoarse("simulate: dt*|beta| > 0.5");
    if (!(cfg.x0 >= 0.0)) throw std::invalid_argument("simulate: x0 must be >= 0");
    const double atom_floor =
        std::min(mech.nu().min_support(), mech.mu().min_support());
    if (std::isfinite(atom_floor) && atom_floor > 0.0 && cfg.jump_eps >= atom_floor)
        throw std::invalid_argument("simulate: jump_eps must lie below the smallest jump support");

    if (cfg.scheme == Scheme::ExactCir) {
        if (!mech.mu().is_zero())
            throw IncompatibleScheme("ExactCir requires mu = 0");
        if (!(mech.sigma() > 0.0))
            throw IncompatibleScheme("ExactCir requires sigma > 0");
        if (!mech.nu().is_zero() &&
            (!(mech.nu().min_support() > 0.0) || std::isinf(mech.nu().total_mass())))
            throw IncompatibleScheme(
                "ExactCir requires compound-Poisson nu (positive support bound, finite mass)");
    }

    const long n_steps = std::lround(cfg.t_end / cfg.dt);
    if (!(n_steps >= 1) || std::abs(n_steps * cfg.dt - cfg.t_end) > 1e-9 * cfg.t_end + 1e-12)
        throw std::invalid_argument("simulate: t_end must be an integer multiple of dt");

    // Snap checkpoints to step indices.
    std::vector<double> cps = cfg.checkpoints.empty()
                                  ? std::vector<double>{cfg.t_end}
                                  : cfg.checkpoints;
    std::vector<long> cp_steps;
    cp_steps.reserve(cps.size());
    for (double c : cps) {
        long k = std::lround(c / cfg.dt);
        k = std::clamp(k, 1L, n_steps);
        cp_steps.push_back(k);
    }
    if (!std::is_sorted(cp_steps.begin(), cp_steps.end()))
        throw std::invalid_argument("simulate: checkpoints must be sorted");

    PathBatch batch;
    batch.n_paths = n_paths;
    batch.times.resize(cps.size());
    for (std::size_t j = 0; j < cps.size(); ++j) batch.times[j] = cp_steps[j] * cfg.dt;
    const std::size_t nc = batch.times.size();
    batch.x.assign(n_paths * nc, 0.0);
    batch.y.assign(n_paths * nc, 0.0);
    batch.mart.assign(n_paths * nc, 0.0);
    batch.qv_diff.assign(n_paths * nc, 0.0);
    batch.qv_mu.assign(n_paths * nc, 0.0);
    batch.qv_nu.assign(n_paths * nc, 0.0);

    const JumpPlan plan = make_plan(mech, cfg.jump_eps);
    const double b = mech.b(), beta = mech.beta(), sigma = mech.sigma();
    const double dt = cfg.dt, sqdt = std::sqrt(cfg.dt);
    const bool exact_cir = (cfg.scheme == Scheme::ExactCir);

    // Exact CIR transition constants (kappa = -beta, dimension d = 4b/sigma^2).
    const double kappa = -beta;
    const double exp_kdt = std::exp(-kappa * dt);
    const double cir_c = exact_cir ? sigma * sigma * (1.0 - exp_kdt) / (4.0 * kappa) : 0.0;
    const double cir_d = exact_cir ? 4.0 * b / (sigma * sigma) : 0.0;

    std::atomic<long> clipped_total{0};

    auto run_range = [&](std::size_t p_begin, std::size_t p_end) {
        long clipped_local = 0;
        for (std::size_t p = p_begin; p < p_end; ++p) {
            std::mt19937_64 rng(mix64(cfg.seed + 0x9E3779B97F4A7C15ULL * (p + 1)));
            std::normal_distribution<double> gauss(0.0, 1.0);
            PathAccum acc;
            acc.x = cfg.x0;
            std::size_t next_cp = 0;
            for (long step = 1; step <= n_steps; ++step) {
                const double x_old = acc.x;
                const double x_pos = std::max(x_old, 0.0);
                double x_new;

                if (exact_cir) {
                    // Noncentral chi-square via Poisson-gamma mixture.
                    const double lam = x_pos * exp_kdt / cir_c;
                    const long n_mix = poisson_draw(rng, 0.5 * lam);
                    const double shape = 0.5 * (cir_d + 2.0 * n_mix);
                    double core = 0.0;
                    if (shape > 0.0) {
                        std::gamma_distribution<double> gamma(shape, 2.0);
                        core = gamma(rng);
                    }
                    x_new = cir_c * core;
                    acc.qv_diff += sigma * sigma * x_pos * dt;
                } else {
                    x_new = x_old + (b + beta * x_old) * dt +
                            sigma * std::sqrt(x_pos) * sqdt * gauss(rng);
                    acc.qv_diff += sigma * sigma * x_pos * dt;
                    // Small mu-jumps: matched-variance Gaussian, QV tracked as
                    // its compensator.
                    if (plan.mu_small_var > 0.0) {
                        const double v = x_pos * dt * plan.mu_small_var;
                        x_new += std::sqrt(v) * gauss(rng);
                        acc.qv_mu += v;
                    }
                    // Small nu-jumps enter through their drift.
                    if (plan.nu_small_drift > 0.0) {
                        x_new += plan.nu_small_drift * dt;
                        acc.qv_nu += plan.nu_small_qv * dt;
                    }
                    // Thinned mu-jumps (state-dependent intensity) minus compensator.
                    if (plan.mu_rate > 0.0) {
                        const long n = poisson_draw(rng, x_pos * plan.mu_rate * dt);
                        for (long i = 0; i < n; ++i) {
                            const double z = mech.mu().sample_tail(cfg.jump_eps, rng);
                            x_new += z;
                            acc.qv_mu += z * z;
                        }
                        x_new -= x_pos * plan.mu_tail_mean * dt;
                    }
                }
                // nu-jumps above eps (state-independent), both schemes.
                if (plan.nu_rate > 0.0) {
                    const long n = poisson_draw(rng, plan.nu_rate * dt);
                    for (long i = 0; i < n; ++i) {
                        const double z = mech.nu().sample_tail(cfg.jump_eps, rng);
                        x_new += z;
                        acc.qv_nu += z * z;
                    }
                }

                if (x_new < 0.0) {
                    x_new = 0.0;
                    ++clipped_local;
                }
                acc.y_int += 0.5 * (x_old + x_new) * dt;
                acc.drift_int += (plan.b_hat + beta * x_old) * dt;
                acc.x = x_new;

                while (next_cp < nc && cp_steps[next_cp] == step) {
                    const double t = batch.times[next_cp];
                    const std::size_t idx = p * nc + next_cp;
                    batch.x[idx] = acc.x;
                    batch.y[idx] = acc.y_int / t;
                    batch.mart[idx] = acc.x - cfg.x0 - acc.drift_int;
                    batch.qv_diff[idx] = acc.qv_diff;
                    batch.qv_mu[idx] = acc.qv_mu;
                    batch.qv_nu[idx] = acc.qv_nu;
                    ++next_cp;
                }
            }
        }
        clipped_total.fetch_add(clipped_local, std::memory_order_relaxed);
    };

    std::size_t n_threads = cfg.n_threads ? cfg.n_threads
                                          : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<std::size_t>(n_threads, n_paths ? n_paths : 1);
    if (n_threads <= 1) {
        run_range(0, n_paths);
    } else {
        std::vector<std::thread> workers;
        const std::size_t chunk = (n_paths + n_threads - 1) / n_threads;
        for (std::size_t w = 0; w < n_threads; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(n_paths, lo + chunk);
            if (lo >= hi) break;
            workers.emplace_back(run_range, lo, hi);
        }
        for (auto& th : workers) th.join();
    }

    batch.truncated_fraction =
        double(clipped_total.load()) / double(std::max<long>(1, n_steps) * std::max<std::size_t>(1, n_paths));
    return batch;
}

QvReport qv_diagnostics(const Mechanisms& mech, const PathBatch& batch) {
    QvReport rep;
    const double m = mech.stationary_mean();
    const double mu2 = mech.mu().is_zero() ? 0.0 : mech.mu().moment(2);
    const double nu2 = mech.nu().is_zero() ? 0.0 : mech.nu().moment(2);
    if (std::isinf(mu2) || std::isinf(nu2))
        throw SecondMomentInfinite("qv_diagnostics requires finite second moments");
    rep.target_diff = mech.sigma2() * m;
    rep.target_mu = m * mu2;
    rep.target_nu = nu2;
    rep.target_rho2 = (rep.target_diff + rep.target_mu + rep.target_nu) / (mech.beta() * mech.beta());

    const double n = double(batch.n_paths);
    for (std::size_t j = 0; j < batch.times.size(); ++j) {
        const double t = batch.times[j];
        const auto [md, vd] = batch.column_stats(batch.qv_diff, j);
        const auto [mm, vm] = batch.column_stats(batch.qv_mu, j);
        const auto [mn, vn] = batch.column_stats(batch.qv_nu, j);
        QvReport::Row row;
        row.t = t;
        row.diff_rate = md / t;
        row.mu_rate = mm / t;
        row.nu_rate = mn / t;
        row.diff_se = std::sqrt(vd / n) / t;
        row.mu_se = std::sqrt(vm / n) / t;
        row.nu_se = std::sqrt(vn / n) / t;
        row.total_over_beta2 = (md + mm + mn) / (t * mech.beta() * mech.beta());
        rep.rows.push_back(row);
    }
    return rep;
}

nlohmann::json QvReport::to_json() const {
    nlohmann::json rows_j = nlohmann::json::array();
    for (const auto& r : rows) {
        rows_j.push_back({{"t", r.t},
                          {"diff_rate", r.diff_rate},
                          {"mu_rate", r.mu_rate},
                          {"nu_rate", r.nu_rate},
                          {"diff_se", r.diff_se},
                          {"mu_se", r.mu_se},
                          {"nu_se", r.nu_se},
                          {"total_over_beta2", r.total_over_beta2}});
    }
    return {{"targets",
             {{"diff", target_diff}, {"mu", target_mu}, {"nu", target_nu}, {"rho2", target_rho2}}},
            {"rows", rows_j}};
}

}  // namespace cbi
