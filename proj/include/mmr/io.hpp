#pragma once

// On-disk formats for every artifact the CLI exchanges.  All matrices are CSV
// with a single `# <kind> key=value ...` header line; doubles are written with
// 17 significant digits so a save/load round trip is bit-exact.
//
// Stochastic matrices read back with slightly off row sums (deviation below
// 1e-6) are renormalized; anything worse is rejected.

#include "mmr/estimation.hpp"
#include "mmr/jump_model.hpp"
#include "mmr/markov.hpp"
#include "mmr/reduction.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace mmr {

void save_stochastic(const std::filesystem::path& file, const StochasticMatrix& P);
StochasticMatrix load_stochastic(const std::filesystem::path& file);

void save_distribution(const std::filesystem::path& file, const DistributionVector& d);
DistributionVector load_distribution(const std::filesystem::path& file);

void save_trajectory(const std::filesystem::path& file, const Trajectory& traj,
                     Index n_a, Index n_c);
struct LoadedTrajectory {
    Trajectory traj;
    Index n_a = 0;
    Index n_c = 0;
};
LoadedTrajectory load_trajectory(const std::filesystem::path& file);

void save_partition(const std::filesystem::path& file, const Partition& p);
Partition load_partition(const std::filesystem::path& file);

void save_counts(const std::filesystem::path& file, const TransitionCounts& c);
TransitionCounts load_counts(const std::filesystem::path& file);

void save_model(const std::filesystem::path& file, const JumpModel& m);
JumpModel load_model(const std::filesystem::path& file);

// r x n cluster rows with the partition stored alongside (two files).
void save_reduced(const std::filesystem::path& rows_file,
                  const std::filesystem::path& partition_file, const ReducedModel& m);
ReducedModel load_reduced(const std::filesystem::path& rows_file,
                          const std::filesystem::path& partition_file);

// Bound reports serialize to JSON; +/-inf and NaN become the strings "inf",
// "-inf", "nan" since JSON has no literals for them.
nlohmann::json bound_report_to_json(const BoundReport& rep);
BoundReport bound_report_from_json(const nlohmann::json& j);
void save_bound_report(const std::filesystem::path& file, const BoundReport& rep);

// %.17g formatting shared by every writer (and the experiment CSV emitters).
std::string format_double(double v);

}  // namespace mmr
