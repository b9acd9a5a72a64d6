#pragma once

// Experiment driver behind the command-line tool: structured JSON configs,
// named presets for the standard figure sweeps, deterministic CSV output.

#include <cstdint>
#include <string>
#include <vector>

#include "cogjam/fading.hpp"
#include "cogjam/metrics.hpp"

namespace cogjam {

enum class Scenario { rayleigh, geometric_colocated, geometric_separate };

struct OnlineSection {
    std::size_t n_blocks = 100000;
    double tau_init_factor = 2.0;    // tau(1) = factor * Q
    double chi_factor = 1e-3;        // chi = factor * Q
    double probe_tol = 1e-3;
    double probe_cap_factor = 1e6;   // cap = factor * Q
};

struct ExperimentConfig {
    Scenario scenario = Scenario::rayleigh;
    std::size_t n_states = 10000;
    std::uint64_t seed = 7;
    double p_db = 20.0;       // dB for the Rayleigh scenario, dBm otherwise
    double noise0_db = 0.0;
    double noise1_db = 0.0;
    std::vector<double> q_sweep_db;
    std::vector<double> p_sweep_db;
    double q_db = 20.0;       // budget for beta-scan and the online trace
    std::vector<std::string> solvers;  // outage | outage_si | fixed | wf
    bool baselines = true;
    int beta_grid = 32;
    bool beta_refine = false;
    double t_tol = 1e-3;
    OnlineSection online;
    RayleighConfig rayleigh;
    GeometryConfig geometry;
    std::string out_prefix = "run";
};

/// Parse a JSON config document. Unknown scenario names, non-positive sizes
/// and malformed sections raise ConfigError.
ExperimentConfig parse_config_json(const std::string& text);

std::vector<std::string> preset_names();
bool has_preset(const std::string& name);
ExperimentConfig load_preset(const std::string& name);
std::string preset_json(const std::string& name);

struct RunOptions {
    std::string out_dir = "out";
    int threads = 1;
    bool seed_override = false;
    std::uint64_t seed = 0;
};

StateEnsemble build_ensemble(const ExperimentConfig& config);
NoiseModel noise_model(const ExperimentConfig& config);

/// One EvalReport row per (scheme, Q); cognitive schemes are kept monotone
/// across the sweep by carrying a better smaller-budget policy forward.
void run_sweep_q(const ExperimentConfig& config, const RunOptions& options);

/// Relative rates of the fixed-power and water-filling solvers across the
/// transmit-power sweep at the configured budget.
void run_sweep_p(const ExperimentConfig& config, const RunOptions& options);

/// Relative-rate-versus-beta scan at one (P, Q).
void run_beta_scan(const ExperimentConfig& config, const RunOptions& options);

/// Online trace at the configured budget plus a per-Q comparison against
/// the offline solvers and the baselines.
void run_online_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Emit the scenario's fading ensemble as CSV.
void run_gen_ensemble(const ExperimentConfig& config, const RunOptions& options);

}  // namespace cogjam
