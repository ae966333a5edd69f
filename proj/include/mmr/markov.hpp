#pragma once

// Finite-state Markov chain core: validated stochastic matrices and
// distributions, stationary/transient analysis, mixing times, trajectory
// sampling, and construction/sampling of aggregatable (low-rank) chains.
//
// Conventions: states and cluster ids are 0-based everywhere; rows of a
// stochastic matrix are the outgoing distributions.

#include "mmr/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mmr {

// Row tolerance for "sums to one" validation.
inline constexpr double kRowSumTol = 1e-9;

// Row-stochastic matrix; construction validates shape, nonnegativity and row sums.
class StochasticMatrix {
public:
    explicit StochasticMatrix(Matrix rows);
    static StochasticMatrix uniform(Index n);

    Index size() const { return rows_.rows(); }
    const Matrix& matrix() const { return rows_; }
    double operator()(Index i, Index j) const { return rows_(i, j); }
    auto row(Index i) const { return rows_.row(i); }

    bool operator==(const StochasticMatrix& other) const { return rows_ == other.rows_; }

private:
    Matrix rows_;
};

// Probability vector over states; validates nonnegativity and total mass.
class DistributionVector {
public:
    explicit DistributionVector(Vector probs);
    static DistributionVector uniform(Index n);
    static DistributionVector point_mass(Index n, Index state);

    Index size() const { return probs_.size(); }
    const Vector& probs() const { return probs_; }
    double operator()(Index i) const { return probs_(i); }

    bool operator==(const DistributionVector& other) const { return probs_ == other.probs_; }

private:
    Vector probs_;
};

// Surjective assignment of n states onto r clusters; every cluster non-empty.
class Partition {
public:
    Partition(Index clusters, std::vector<int> assignment);
    static Partition identity(Index n);

    Index states() const { return static_cast<Index>(assignment_.size()); }
    Index clusters() const { return r_; }
    int cluster_of(Index state) const { return assignment_[static_cast<std::size_t>(state)]; }
    const std::vector<int>& assignment() const { return assignment_; }

    std::vector<std::vector<Index>> groups() const;
    IntVector sizes() const;
    // Cardinality of the k-th largest cluster (rank 1 = largest, rank r = smallest).
    Index size_of_rank(Index rank) const;

    bool operator==(const Partition& other) const {
        return r_ == other.r_ && assignment_ == other.assignment_;
    }

private:
    Index r_;
    std::vector<int> assignment_;
};

struct SpectralSummary {
    Vector singular_values;    // descending
    ComplexVector eigenvalues; // sorted by descending modulus (ties: real, then imag)
};

// --- chain analysis ------------------------------------------------------

// Stationary distribution by power iteration on pi' = pi P.  The returned
// iterate satisfies ||pi P - pi||_1 <= tol; throws ConvergenceError (carrying
// the final residual) if max_iters is exhausted first.  The chain is assumed
// ergodic; callers may pre-check with is_ergodic.
DistributionVector stationary_distribution(const StochasticMatrix& P,
                                           double tol = 1e-10,
                                           long max_iters = 1000000);

// pi0' P^t by t sequential vector-matrix multiplies.
DistributionVector transient_distribution(const StochasticMatrix& P,
                                          const DistributionVector& pi0,
                                          long t);

// Smallest k with max_i 0.5 ||P^k(i,:) - pi||_1 <= eps.  Matrix powers are
// formed by repeated squaring; search is exponential-then-binary using the
// monotonicity of the worst-row TV distance in k.  Throws ConvergenceError
// (carrying the TV distance at max_k) if even P^max_k has not mixed.
long mixing_time(const StochasticMatrix& P, double eps, long max_k = 10000);

// Mode/state path of length N+1: X_0 ~ pi0, X_{t+1} ~ P(X_t, .).
std::vector<int> sample_trajectory(const StochasticMatrix& P,
                                   const DistributionVector& pi0,
                                   long N,
                                   std::uint64_t seed);

// Expand r cluster rows into an n-state matrix whose row i is the row of
// cluster_of(i).  Requires rank(cluster_rows) = r, checked via sigma_r > 1e-9.
StochasticMatrix build_aggregatable(const Partition& partition, const Matrix& cluster_rows);

// count x n matrix of iid Dirichlet(alpha) rows.
Matrix sample_dirichlet_rows(const Vector& alpha, Index count, std::uint64_t seed);

struct PerturbedSample {
    StochasticMatrix P;          // sampled perturbed chain
    Matrix delta;                // P - P_bar
    double delta_spectral_norm;  // ||delta||_2
};

// Row-wise Dirichlet(alpha_scale * P_bar(i,:)) resampling of an aggregatable
// base chain.  Rows keep their cluster's mean; larger alpha_scale means a
// smaller perturbation.  All base entries must be strictly positive.
PerturbedSample sample_perturbed(const StochasticMatrix& P_bar,
                                 const Partition& partition,
                                 double alpha_scale,
                                 std::uint64_t seed);

// Singular values plus eigenvalues of a square matrix, sorted for stable reporting.
SpectralSummary spectral_summary(const Matrix& M);

// Primitivity (irreducible + aperiodic) of the positive-entry pattern.
bool is_ergodic(const StochasticMatrix& P);

// ||M||_2 (largest singular value).
double spectral_norm(const Matrix& M);

// Induced infinity norm: max absolute row sum.
double inf_norm(const Matrix& M);

// 0.5 * max_i ||P^k(i,:) - pi||_1 given a precomputed power; exposed for tests.
double worst_row_tv(const Matrix& P_power, const Vector& pi);

}  // namespace mmr
