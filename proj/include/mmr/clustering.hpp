#pragma once

// k-means on embedded rows plus the two partition-distance metrics used to
// score recovered mode groupings.  Both metrics minimize over cluster
// relabelings with an exact assignment solver, so reported values are the true
// minima rather than greedy approximations.

#include "mmr/markov.hpp"
#include "mmr/types.hpp"

#include <cstdint>
#include <vector>

namespace mmr {

struct KMeansConfig {
    Index restarts = 50;    // independent seedings; best final cost wins
    Index max_iters = 300;  // Lloyd iterations per restart
    double rel_tol = 1e-9;  // relative cost-improvement stopping threshold
};

struct KMeansResult {
    Partition partition;
    Matrix centroids;  // r x d
    double cost;       // sum of squared distances to assigned centroids
    Index restarts_used;
};

// Lloyd's algorithm with D^2 (k-means++) seeding and deterministic
// tie-breaking; ties between restarts keep the earliest one.  Empty clusters
// are re-seeded at the point farthest from the offending centroid.
KMeansResult kmeans(const Matrix& points, Index r, const KMeansConfig& cfg, std::uint64_t seed);

// Minimum-cost assignment on a square cost matrix (Hungarian algorithm).
// Returns the optimal total cost; optionally reports the matched column for
// each row.
double solve_assignment(const Matrix& cost, std::vector<int>* matching = nullptr);

// Misclustering rate: min over cluster bijections of
//   sum_j |Omega_j \ Omega_hat_{sigma(j)}| / |Omega_j|.
// Ranges over [0, r]; zero iff the partitions agree up to relabeling.
double misclustering_rate(const Partition& truth, const Partition& estimate);

// Clustering error: min over bijections of misplaced-state count / n.
double clustering_error(const Partition& truth, const Partition& estimate);

struct EpsilonCertificate {
    double epsilon;      // cost / optimal_cost - 1, clamped at >= 0
    double optimal_cost; // exact optimum when exact, else best cost found
    bool exact;          // true when the optimum was computed by enumeration
};

// Quality certificate for a k-means solution.  For n <= 12 the optimum is
// found by enumerating all partitions into at most r non-empty blocks;
// otherwise a 10^4-restart search stands in and the result is flagged inexact.
EpsilonCertificate kmeans_epsilon_certificate(const Matrix& points,
                                              const KMeansResult& result,
                                              Index r);

// n x r one-hot membership matrix of a partition.
Matrix to_membership(const Partition& partition);

// Inverse of to_membership; rows must be exactly one-hot.
Partition from_membership(const Matrix& membership);

}  // namespace mmr
