#pragma once

// Empirical transition statistics from (estimated) mode sequences.  Counts are
// kept as integers and merge associatively, so long trajectories can be
// counted in chunks and combined.

#include "mmr/markov.hpp"
#include "mmr/types.hpp"

#include <span>

namespace mmr {

struct TransitionCounts {
    IntMatrix pair_counts;  // (i, j) -> #{t : X_t = i, X_{t+1} = j}
    IntVector visit_counts; // i -> #{t < N : X_t = i}   (row sums of pair_counts)
    long total_steps = 0;   // N = number of transitions counted

    Index states() const { return pair_counts.rows(); }
};

// Count the N transitions of a mode sequence of length N + 1 over n states.
TransitionCounts count_transitions(std::span<const int> modes, Index n);

// Combine counts from disjoint chunks of the same chain.
TransitionCounts merge(const TransitionCounts& a, const TransitionCounts& b);

// Maximum-likelihood transition matrix: row i is pair_counts(i,:) / visits(i).
// States that were never visited get the uniform row 1/n.
StochasticMatrix empirical_matrix(const TransitionCounts& counts);

struct EmpiricalFrequency {
    Matrix pair_freq;   // pair_counts / N; entries sum to 1
    Vector visit_freq;  // visit_counts / N
};

EmpiricalFrequency empirical_frequency(const TransitionCounts& counts);

struct PerturbationStats {
    long mismatches = 0;  // N' = #{t : estimate_t != truth_t} over all t = 0..N
    double rate = 0.0;    // eta = N' / N
};

// Compare an estimated mode sequence against ground truth of equal length.
PerturbationStats perturbation_stats(std::span<const int> truth, std::span<const int> estimate);

}  // namespace mmr
