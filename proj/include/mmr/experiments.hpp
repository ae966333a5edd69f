#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <mmr/jump_model.hpp>
#include <mmr/markov.hpp>
#include <mmr/types.hpp>

namespace mmr {

enum class Scenario { SyntheticSweep, PerturbationSweep, Robot };

Scenario scenario_from_string(const std::string& name);
std::string to_string(Scenario scenario);

struct ExperimentConfig {
    Scenario scenario = Scenario::SyntheticSweep;
    Index n = 10;
    Index r = 3;
    Index n_a = 3;
    Index n_c = 2;
    double noise_max = 0.1;
    double K = 0.7;          // robot feedback gain
    double noise_var = 0.1;  // robot Gaussian noise variance
    long N = 100000;
    std::vector<long> N_grid;       // sweep over trajectory length
    std::vector<Index> r_grid;      // sweep over cluster count
    std::vector<double> noise_grid; // sweep over noise half-width
    std::vector<double> alpha_grid; // sweep over Dirichlet concentration
    long replications = 1;
    std::uint64_t rng_seed = 0;
    std::filesystem::path output_dir;
    int threads = 1;
    // Replications that exceed this wall-clock budget are aborted and
    // recorded as failures.  Checked between pipeline stages.
    double budget_seconds = 120.0;

    void validate() const;
};

// Parse a JSON object whose keys mirror the ExperimentConfig field names.
// Unknown keys, type mismatches and invalid values throw invalid_argument.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);
std::string config_to_json(const ExperimentConfig& cfg);

struct SampledInstance {
    JumpModel model;
    StochasticMatrix P;       // simulated chain (perturbed when alpha > 0)
    Partition truth;          // ground-truth clustering
    DistributionVector pi0;
    double delta_norm = 0.0;  // ||P - P_bar||_2 (0 when unperturbed)
    SimulateOptions options;  // input/noise settings matching the scenario
};

// Sampling stages of one replication: partition, cluster rows, optional
// Dirichlet perturbation (alpha > 0), initial distribution, dynamics.
// Deterministic in (cfg, alpha, rep_seed).  The trajectory itself is drawn
// separately: simulate(..., derive_seed(rep_seed, 6)).
SampledInstance sample_instance(const ExperimentConfig& cfg,
                                double alpha,
                                std::uint64_t rep_seed);

struct ReplicationRow {
    long grid_index = 0;  // position within the active grid
    double x = 0.0;       // grid value (N, r, n_max or alpha)
    long replication = 0;
    bool failed = false;
    std::string failure;  // reason when failed
    double ce = 0.0;
    double stationary_l1_diff = 0.0;
    double mr = 0.0;
    double eta = 0.0;         // mode-estimation mistake rate
    double delta_norm = 0.0;  // ||Delta||_2 of the sampled chain
    double wall_seconds = 0.0;
};

struct GridAggregate {
    double x = 0.0;
    long completed = 0;
    long failed = 0;
    double mean_ce = 0.0;
    double mean_stationary_l1_diff = 0.0;
    double mean_mr = 0.0;
};

struct ExperimentRecord {
    ExperimentConfig config;
    std::string x_label;  // "N", "r", "n_max" or "delta_norm"
    std::vector<ReplicationRow> rows;  // sorted by (grid_index, replication)
    std::vector<GridAggregate> aggregates;
    long failed_count = 0;
};

ExperimentRecord run_synthetic_sweep(const ExperimentConfig& cfg);
ExperimentRecord run_perturbation_sweep(const ExperimentConfig& cfg);
ExperimentRecord run_robot(const ExperimentConfig& cfg);
// Dispatch on cfg.scenario.
ExperimentRecord run_experiment(const ExperimentConfig& cfg);

enum class PlotKind { Line, Scatter };

// Write plot-ready CSVs into record.config.output_dir:
//   <scenario>_ce.csv, <scenario>_stationary_l1.csv   (line: one row per grid
//     point with aggregate mean; scatter: one row per completed replication)
//   <scenario>_rows.csv                               (full replication dump)
//   <scenario>_config.json                            (config echo)
// Returns the paths written.  Emission is deterministic: writing the same
// record twice produces byte-identical files.
std::vector<std::filesystem::path> emit_plot_data(const ExperimentRecord& record,
                                                  PlotKind kind);

// Run fn(0..jobs-1) on a pool of `threads` workers (inline when threads <= 1).
// Jobs must write to disjoint state; exceptions escape to the caller.
void run_jobs(long jobs, int threads, const std::function<void(long)>& fn);

}  // namespace mmr
