#pragma once

// Reduced-model construction and the error bounds that certify it.  The
// reduced chain P_tilde shares one estimated row across every state of a
// cluster, so it is rank r by construction and supports O(rn) propagation.

#include "mmr/clustering.hpp"
#include "mmr/estimation.hpp"
#include "mmr/jump_model.hpp"
#include "mmr/markov.hpp"
#include "mmr/spectral.hpp"
#include "mmr/types.hpp"

#include <map>
#include <optional>
#include <string>

namespace mmr {

struct ReducedProvenance {
    long total_steps = 0;              // transitions behind the estimate
    std::optional<double> eta;         // mode-mistake rate, when ground truth was seen
};

struct ReducedModel {
    Partition partition;
    Matrix cluster_rows;      // r x n; row k is the pooled row of cluster k
    StochasticMatrix dense;   // expanded n x n matrix (row i = cluster row of i)
    ReducedProvenance provenance;
};

// Pool transition counts within each cluster and normalize once per cluster.
// A cluster with zero pooled visits falls back to the uniform row.
ReducedModel aggregate_reestimate(const TransitionCounts& counts,
                                  const Partition& partition,
                                  std::optional<double> eta = std::nullopt);

// mu' P_tilde using the factored form: O(rn) instead of O(n^2).
DistributionVector reduced_multiply(const ReducedModel& model, const DistributionVector& mu);

// Stationary distribution of the reduced chain via the factored multiply.
DistributionVector reduced_stationary(const ReducedModel& model,
                                      double tol = 1e-10,
                                      long max_iters = 1000000);

// Uniform report shape shared by the bound calculators, ready for JSON export.
struct BoundReport {
    std::string name;
    double value = 0.0;                    // +inf allowed; meaningless when !applicable
    bool applicable = true;                // stated preconditions of the bound hold
    bool vacuous = false;                  // bound exceeds the trivial cap
    std::map<std::string, double> inputs;  // echoed inputs and intermediates
    std::string note;
};

// Stationary-distribution gap ||pi - pi_tilde||_1 bounded through the
// non-unit eigenvalues of P:  sum_i |1/(1 - lambda_i(P))| * ||P - P_tilde||_inf.
// Also evaluates the actual gap (inputs["actual_l1_diff"]).  Vacuous above 2.
BoundReport bound_stationary_diff(const StochasticMatrix& P, const StochasticMatrix& P_tilde);

struct MrBoundInputs {
    Index n = 0;                // states
    Index r = 0;                // clusters
    double eps1 = 0.0;          // k-means approximation ratio
    double eps2 = 0.0;          // empirical-matrix concentration level
    double eta = 0.0;           // mode-mistake rate
    double delta_norm = 0.0;    // ||Delta||_2
    double sigma1_pbar = 0.0;   // sigma_1(P_bar)
    double sigma_r_pbar = 0.0;  // sigma_r(P_bar)
    double pi_min = 0.0;        // min_i pi(i)
    double pi_max = 0.0;        // max_i pi(i)
    double tau_star = 0.0;      // mixing time tau(1/4)
    double omega_largest = 0.0;   // |Omega_(1)|
    double omega_smallest = 0.0;  // |Omega_(r)|
    long N = 0;                 // trajectory transitions
};

// Misclustering-rate bound.  Checks the perturbation-size and mistake-rate
// preconditions; when they fail the report is marked not applicable.  Also
// reports the minimum N for the advertised confidence and the success
// probability at the given N.  Vacuous above r (MR can never exceed r).
BoundReport bound_mr(const MrBoundInputs& in);

struct PDiffBoundInputs {
    Index n = 0;
    double pi_min = 0.0;
    double sigma1_p = 0.0;      // sigma_1(P)
    double eps2 = 0.0;
    double eta = 0.0;
    double delta_inf_norm = 0.0;  // ||Delta||_inf
    double mr = 0.0;              // achieved misclustering rate; bound needs 0
};

// Row-wise estimation error ||P - P_tilde||_inf after exact clustering.
// Not applicable unless MR = 0.  Vacuous above 2.
BoundReport bound_p_diff(const PDiffBoundInputs& in);

struct PipelineResult {
    ModeEstimate estimate;
    TransitionCounts counts;
    StochasticMatrix p_hat;
    TruncatedBasis basis;
    KMeansResult clustering;
    ReducedModel reduced;
};

// Full chain: estimate modes -> count -> empirical matrix -> truncated SVD ->
// k-means on U_r rows -> pooled re-estimation.
PipelineResult run_pipeline(const JumpModel& model,
                            const Trajectory& traj,
                            Index r,
                            const KMeansConfig& kmeans_cfg,
                            std::uint64_t seed);

}  // namespace mmr
