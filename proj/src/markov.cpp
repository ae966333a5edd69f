#include "mmr/markov.hpp"

#include "mmr/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmr {

StochasticMatrix::StochasticMatrix(Matrix rows) : rows_(std::move(rows)) {
    if (rows_.rows() == 0 || rows_.rows() != rows_.cols())
        throw std::invalid_argument("StochasticMatrix: need a non-empty square matrix");
    if ((rows_.array() < 0.0).any())
        throw std::invalid_argument("StochasticMatrix: negative entry");
    for (Index i = 0; i < rows_.rows(); ++i) {
        double s = rows_.row(i).sum();
        if (std::abs(s - 1.0) > kRowSumTol)
            throw std::invalid_argument("StochasticMatrix: row " + std::to_string(i) +
                                        " sums to " + std::to_string(s));
    }
}

StochasticMatrix StochasticMatrix::uniform(Index n) {
    return StochasticMatrix(Matrix::Constant(n, n, 1.0 / static_cast<double>(n)));
}

DistributionVector::DistributionVector(Vector probs) : probs_(std::move(probs)) {
    if (probs_.size() == 0)
        throw std::invalid_argument("DistributionVector: empty");
    if ((probs_.array() < 0.0).any())
        throw std::invalid_argument("DistributionVector: negative entry");
    if (std::abs(probs_.sum() - 1.0) > kRowSumTol)
        throw std::invalid_argument("DistributionVector: mass is " + std::to_string(probs_.sum()));
}

DistributionVector DistributionVector::uniform(Index n) {
    return DistributionVector(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

DistributionVector DistributionVector::point_mass(Index n, Index state) {
    if (state < 0 || state >= n)
        throw std::invalid_argument("DistributionVector::point_mass: state out of range");
    Vector v = Vector::Zero(n);
    v(state) = 1.0;
    return DistributionVector(std::move(v));
}

Partition::Partition(Index clusters, std::vector<int> assignment)
    : r_(clusters), assignment_(std::move(assignment)) {
    const Index n = static_cast<Index>(assignment_.size());
    if (r_ < 1 || n < r_)
        throw std::invalid_argument("Partition: need 1 <= r <= n");
    std::vector<Index> counts(static_cast<std::size_t>(r_), 0);
    for (int c : assignment_) {
        if (c < 0 || c >= r_)
            throw std::invalid_argument("Partition: cluster id out of range");
        ++counts[static_cast<std::size_t>(c)];
    }
    for (Index k = 0; k < r_; ++k)
        if (counts[static_cast<std::size_t>(k)] == 0)
            throw std::invalid_argument("Partition: cluster " + std::to_string(k) + " is empty");
}

Partition Partition::identity(Index n) {
    std::vector<int> a(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = static_cast<int>(i);
    return Partition(n, std::move(a));
}

std::vector<std::vector<Index>> Partition::groups() const {
    std::vector<std::vector<Index>> g(static_cast<std::size_t>(r_));
    for (Index i = 0; i < states(); ++i)
        g[static_cast<std::size_t>(assignment_[static_cast<std::size_t>(i)])].push_back(i);
    return g;
}

IntVector Partition::sizes() const {
    IntVector s = IntVector::Zero(r_);
    for (int c : assignment_) ++s(c);
    return s;
}

Index Partition::size_of_rank(Index rank) const {
    if (rank < 1 || rank > r_)
        throw std::invalid_argument("Partition::size_of_rank: rank out of range");
    IntVector s = sizes();
    std::vector<std::int64_t> v(s.data(), s.data() + s.size());
    std::sort(v.begin(), v.end(), std::greater<>());
    return static_cast<Index>(v[static_cast<std::size_t>(rank - 1)]);
}

// --- analysis -------------------------------------------------------------

DistributionVector stationary_distribution(const StochasticMatrix& P, double tol, long max_iters) {
    if (!(tol > 0.0))
        throw std::invalid_argument("stationary_distribution: tol must be positive");
    if (max_iters < 1)
        throw std::invalid_argument("stationary_distribution: max_iters must be >= 1");
    const Matrix Pt = P.matrix().transpose();
    Vector cur = Vector::Constant(P.size(), 1.0 / static_cast<double>(P.size()));
    double residual = std::numeric_limits<double>::infinity();
    for (long it = 0; it < max_iters; ++it) {
        Vector next = Pt * cur;
        residual = (next - cur).lpNorm<1>();
        if (residual <= tol)
            return DistributionVector(cur);  // cur itself meets the contract
        next /= next.sum();  // counter drift from accumulated rounding
        cur.swap(next);
    }
    throw ConvergenceError("stationary_distribution: no convergence after " +
                               std::to_string(max_iters) + " iterations",
                           residual);
}

DistributionVector transient_distribution(const StochasticMatrix& P,
                                          const DistributionVector& pi0,
                                          long t) {
    if (pi0.size() != P.size())
        throw std::invalid_argument("transient_distribution: dimension mismatch");
    if (t < 0)
        throw std::invalid_argument("transient_distribution: t must be >= 0");
    Vector cur = pi0.probs();
    const Matrix Pt = P.matrix().transpose();
    for (long s = 0; s < t; ++s) cur = Pt * cur;
    return DistributionVector(std::move(cur));
}

double worst_row_tv(const Matrix& P_power, const Vector& pi) {
    double worst = 0.0;
    for (Index i = 0; i < P_power.rows(); ++i)
        worst = std::max(worst, 0.5 * (P_power.row(i).transpose() - pi).lpNorm<1>());
    return worst;
}

namespace {

// P^k assembled from cached binary powers pows[j] = P^(2^j).
Matrix power_from_bits(const std::vector<Matrix>& pows, long k) {
    Matrix result;
    bool have = false;
    for (std::size_t j = 0; j < pows.size() && (k >> j) != 0; ++j) {
        if ((k >> j) & 1) {
            result = have ? Matrix(result * pows[j]) : pows[j];
            have = true;
        }
    }
    return result;
}

}  // namespace

long mixing_time(const StochasticMatrix& P, double eps, long max_k) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("mixing_time: eps must lie in (0,1)");
    if (max_k < 1)
        throw std::invalid_argument("mixing_time: max_k must be >= 1");
    const Vector pi = stationary_distribution(P, 1e-12).probs();

    std::vector<Matrix> pows;
    pows.push_back(P.matrix());
    while ((1L << (pows.size() - 1)) < max_k) pows.push_back(pows.back() * pows.back());

    auto tv_at = [&](long k) { return worst_row_tv(power_from_bits(pows, k), pi); };

    double tv1 = tv_at(1);
    if (tv1 <= eps) return 1;
    if (max_k == 1)
        throw ConvergenceError("mixing_time: TV distance still above eps at max_k", tv1);
    // Exponential phase: find the first power of two (capped at max_k) that mixes.
    long lo = 1, hi = 2;
    while (hi < max_k && tv_at(hi) > eps) {
        lo = hi;
        hi = std::min(2 * hi, max_k);
    }
    double tv_hi = tv_at(hi);
    if (tv_hi > eps)
        throw ConvergenceError("mixing_time: TV distance still above eps at max_k", tv_hi);
    // Worst-row TV is nonincreasing in k, so binary search on (lo, hi].
    while (lo + 1 < hi) {
        long mid = lo + (hi - lo) / 2;
        if (tv_at(mid) <= eps)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

std::vector<int> sample_trajectory(const StochasticMatrix& P,
                                   const DistributionVector& pi0,
                                   long N,
                                   std::uint64_t seed) {
    if (pi0.size() != P.size())
        throw std::invalid_argument("sample_trajectory: dimension mismatch");
    if (N < 1)
        throw std::invalid_argument("sample_trajectory: N must be >= 1");
    Rng rng(seed);
    std::vector<int> modes(static_cast<std::size_t>(N) + 1);
    modes[0] = static_cast<int>(rng.discrete(pi0.probs()));
    for (long t = 0; t < N; ++t) {
        const Vector row = P.row(modes[static_cast<std::size_t>(t)]).transpose();
        modes[static_cast<std::size_t>(t) + 1] = static_cast<int>(rng.discrete(row));
    }
    return modes;
}

StochasticMatrix build_aggregatable(const Partition& partition, const Matrix& cluster_rows) {
    const Index n = partition.states();
    const Index r = partition.clusters();
    if (cluster_rows.rows() != r || cluster_rows.cols() != n)
        throw std::invalid_argument("build_aggregatable: cluster_rows must be r x n");
    Eigen::JacobiSVD<Matrix> svd(cluster_rows);
    if (svd.singularValues()(r - 1) <= 1e-9)
        throw DegeneracyError("build_aggregatable: cluster rows are rank deficient (sigma_r = " +
                              std::to_string(svd.singularValues()(r - 1)) + ")");
    Matrix expanded(n, n);
    for (Index i = 0; i < n; ++i) expanded.row(i) = cluster_rows.row(partition.cluster_of(i));
    return StochasticMatrix(std::move(expanded));
}

Matrix sample_dirichlet_rows(const Vector& alpha, Index count, std::uint64_t seed) {
    if (count < 1)
        throw std::invalid_argument("sample_dirichlet_rows: count must be >= 1");
    if (alpha.size() == 0 || (alpha.array() <= 0.0).any())
        throw std::invalid_argument("sample_dirichlet_rows: alpha must be strictly positive");
    Rng rng(seed);
    Matrix rows(count, alpha.size());
    for (Index i = 0; i < count; ++i) rows.row(i) = rng.dirichlet(alpha).transpose();
    return rows;
}

PerturbedSample sample_perturbed(const StochasticMatrix& P_bar,
                                 const Partition& partition,
                                 double alpha_scale,
                                 std::uint64_t seed) {
    if (partition.states() != P_bar.size())
        throw std::invalid_argument("sample_perturbed: partition/matrix size mismatch");
    if (!(alpha_scale > 0.0))
        throw std::invalid_argument("sample_perturbed: alpha_scale must be positive");
    if ((P_bar.matrix().array() <= 0.0).any())
        throw std::invalid_argument(
            "sample_perturbed: base rows must be strictly positive; smooth the base chain first");
    Rng rng(seed);
    const Index n = P_bar.size();
    Matrix rows(n, n);
    for (Index i = 0; i < n; ++i) {
        Vector a = alpha_scale * P_bar.row(i).transpose();
        rows.row(i) = rng.dirichlet(a).transpose();
    }
    Matrix delta = rows - P_bar.matrix();
    double norm = spectral_norm(delta);
    return PerturbedSample{StochasticMatrix(std::move(rows)), std::move(delta), norm};
}

SpectralSummary spectral_summary(const Matrix& M) {
    if (M.rows() == 0 || M.rows() != M.cols())
        throw std::invalid_argument("spectral_summary: need a non-empty square matrix");
    Eigen::BDCSVD<Matrix> svd(M);
    Eigen::EigenSolver<Matrix> eig(M, /*computeEigenvectors=*/false);
    if (eig.info() != Eigen::Success)
        throw NumericalError("spectral_summary: eigen decomposition failed");
    ComplexVector lambda = eig.eigenvalues();
    std::vector<Index> order(static_cast<std::size_t>(lambda.size()));
    for (Index i = 0; i < lambda.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        double ma = std::abs(lambda(a)), mb = std::abs(lambda(b));
        if (ma != mb) return ma > mb;
        if (lambda(a).real() != lambda(b).real()) return lambda(a).real() > lambda(b).real();
        return lambda(a).imag() > lambda(b).imag();
    });
    ComplexVector sorted(lambda.size());
    for (Index i = 0; i < lambda.size(); ++i) sorted(i) = lambda(order[static_cast<std::size_t>(i)]);
    return SpectralSummary{svd.singularValues(), std::move(sorted)};
}

bool is_ergodic(const StochasticMatrix& P) {
    // Wielandt: a nonnegative n x n matrix is primitive iff A^((n-1)^2 + 1) > 0.
    const Index n = P.size();
    Matrix A = (P.matrix().array() > 0.0).cast<double>();
    long target = (n - 1) * (n - 1) + 1;
    long covered = 1;
    Matrix acc = A;
    while (covered < target) {
        acc = acc * acc;
        acc = (acc.array() > 0.0).cast<double>();  // keep entries 0/1 to avoid overflow
        covered *= 2;
    }
    return (acc.array() > 0.0).all();
}

double spectral_norm(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    return Eigen::BDCSVD<Matrix>(M).singularValues()(0);
}

double inf_norm(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    return M.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace mmr
