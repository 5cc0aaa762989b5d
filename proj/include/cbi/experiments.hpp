#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "cbi/mechanisms.hpp"

namespace cbi {

/// One experiment run: a model block plus an experiment-specific parameter
/// block, a seed and an output directory. The JSON document looks like
///   { "model": {...}, "seed": 1, "out_dir": "out", "lln": {...}, ... }
/// and the experiment tag selects which parameter block applies. Missing
/// parameters fall back to the shipped defaults (the acceptance settings).
struct ExperimentConfig {
    nlohmann::json raw;
    std::string experiment;
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    static ExperimentConfig load(const std::string& path, const std::string& experiment);
    static ExperimentConfig from_json(nlohmann::json doc, const std::string& experiment);

    Mechanisms model() const;
    nlohmann::json params() const;  // block for this experiment ({} if absent)
    std::uint64_t config_hash() const;
};

struct Report {
    bool passed = false;
    nlohmann::json summary;
};

Report run_lln(const ExperimentConfig& cfg);
Report run_clt(const ExperimentConfig& cfg);
Report run_mgf_check(const ExperimentConfig& cfg);
Report run_riccati_diag(const ExperimentConfig& cfg);
Report run_rate_curve(const ExperimentConfig& cfg);
Report run_ldp_tail(const ExperimentConfig& cfg);
Report run_moment_check(const ExperimentConfig& cfg);

/// Dispatch on cfg.experiment; writes <experiment>_summary.json and the
/// experiment's CSV tables into cfg.out_dir.
Report run_experiment(const ExperimentConfig& cfg);

}  // namespace cbi
