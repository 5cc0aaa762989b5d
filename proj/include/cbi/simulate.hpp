#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cbi/mechanisms.hpp"

namespace cbi {

enum class Scheme { Euler, ExactCir };

struct PathConfig {
    double x0 = 0.0;
    double t_end = 1.0;
    double dt = 1e-2;
    double jump_eps = 1e-3;      // small-jump truncation level
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::Euler;
    /// Recording times (snapped to step multiples); defaults to {t_end}.
    std::vector<double> checkpoints;
    std::size_t n_threads = 0;   // 0 = hardware concurrency
};

/// Per-path records at the checkpoint times. Row-major [path][checkpoint].
/// The batch is bit-identical for identical (seed, config) regardless of the
/// thread count: path p draws from its own counter-derived RNG stream and the
/// reduction below is a fixed sequential pass over path indices.
class PathBatch {
public:
    std::vector<double> times;           // checkpoint times (snapped)
    std::size_t n_paths = 0;
    std::vector<double> x;               // X_t
    std::vector<double> y;               // Y_t = (1/t) int_0^t X ds (trapezoid)
    std::vector<double> mart;            // M_t = X_t - x0 - int (b^ + beta X) ds
    std::vector<double> qv_diff;         // sigma^2 int X ds
    std::vector<double> qv_mu;           // sum of mu-jump^2 (+ small-jump proxy)
    std::vector<double> qv_nu;           // sum of nu-jump^2 (+ small-jump proxy)
    double truncated_fraction = 0.0;     // share of steps clipped at 0

    double at(const std::vector<double>& field, std::size_t path, std::size_t cp) const {
        return field[path * times.size() + cp];
    }
    /// Mean and (unbiased) variance of a field column.
    std::pair<double, double> column_stats(const std::vector<double>& field,
                                           std::size_t cp) const;

    /// Checkpoint CSV: t, mean X, mean Y, var Y, mean QV components.
    void write_csv(std::ostream& os, const std::string& config_echo) const;
};

/// Simulates n_paths of the CBI SDE. Euler with jump thinning: compound-
/// Poisson jumps above jump_eps, drift correction for small nu-jumps,
/// a matched-variance Gaussian for small mu-jumps, compensator subtracted
/// for the mu-integral, states clipped at zero. ExactCir (mu = 0, finite-
/// activity nu with a positive support bound) advances with the exact CIR
/// transition between steps.
PathBatch simulate_batch(const Mechanisms& mech, const PathConfig& cfg,
                         std::size_t n_paths);

/// Empirical [M]_t / t per component vs the targets sigma^2 m, m int z^2 dmu,
/// int z^2 dnu, and the normalized total vs beta^2 rho^2.
struct QvReport {
    struct Row {
        double t;
        double diff_rate, mu_rate, nu_rate;      // empirical means of [M]_t/t
        double diff_se, mu_se, nu_se;            // standard errors
        double total_over_beta2;                 // [M]_t/(t beta^2)
    };
    std::vector<Row> rows;
    double target_diff, target_mu, target_nu;    // component targets
    double target_rho2;                          // rho^2
    nlohmann::json to_json() const;
};

QvReport qv_diagnostics(const Mechanisms& mech, const PathBatch& batch);

}  // namespace cbi
