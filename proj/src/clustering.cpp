#include "mmr/clustering.hpp"

#include "mmr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace mmr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LloydRun {
    std::vector<int> assign;
    Matrix centroids;
    double cost = kInf;
};

// Squared distance of every point to its nearest centroid; ties pick the
// lowest centroid index.
void assign_points(const Matrix& points, const Matrix& centroids, std::vector<int>& assign,
                   double& cost) {
    const Index n = points.rows(), r = centroids.rows();
    cost = 0.0;
    for (Index i = 0; i < n; ++i) {
        int best = 0;
        double best_d = (points.row(i) - centroids.row(0)).squaredNorm();
        for (Index k = 1; k < r; ++k) {
            double d = (points.row(i) - centroids.row(k)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        assign[static_cast<std::size_t>(i)] = best;
        cost += best_d;
    }
}

// Hand cluster k the farthest point whose current cluster can spare a member.
// Keeps earlier claims intact even when many centroids coincide.
void claim_point_for(const Matrix& points, const Matrix& centroids, std::vector<int>& assign,
                     Index k) {
    IntVector sizes = IntVector::Zero(centroids.rows());
    for (int a : assign) ++sizes(a);
    Index far = -1;
    double far_d = -1.0;
    for (Index i = 0; i < points.rows(); ++i) {
        if (sizes(assign[static_cast<std::size_t>(i)]) < 2) continue;
        double d = (points.row(i) - centroids.row(k)).squaredNorm();
        if (d > far_d) {
            far_d = d;
            far = i;
        }
    }
    if (far >= 0) assign[static_cast<std::size_t>(far)] = static_cast<int>(k);
}

LloydRun lloyd_once(const Matrix& points, Index r, const KMeansConfig& cfg, Rng& rng) {
    const Index n = points.rows();
    LloydRun run;
    run.centroids.resize(r, points.cols());
    run.assign.assign(static_cast<std::size_t>(n), 0);

    // D^2 seeding
    run.centroids.row(0) = points.row(rng.below(n));
    Vector dist2(n);
    for (Index i = 0; i < n; ++i)
        dist2(i) = (points.row(i) - run.centroids.row(0)).squaredNorm();
    for (Index k = 1; k < r; ++k) {
        Index pick = dist2.sum() > 0.0 ? rng.discrete(dist2) : rng.below(n);
        run.centroids.row(k) = points.row(pick);
        for (Index i = 0; i < n; ++i)
            dist2(i) = std::min(dist2(i), (points.row(i) - run.centroids.row(k)).squaredNorm());
    }

    double prev_cost = kInf;
    for (Index it = 0; it < cfg.max_iters; ++it) {
        assign_points(points, run.centroids, run.assign, run.cost);

        // re-seed empty clusters at the point farthest from the empty centroid
        for (Index round = 0; round <= r; ++round) {
            IntVector sizes = IntVector::Zero(r);
            for (int a : run.assign) ++sizes(a);
            Index empty = -1;
            for (Index k = 0; k < r; ++k)
                if (sizes(k) == 0) {
                    empty = k;
                    break;
                }
            if (empty < 0) break;
            Index far = 0;
            double far_d = -1.0;
            for (Index i = 0; i < n; ++i) {
                double d = (points.row(i) - run.centroids.row(empty)).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            run.centroids.row(empty) = points.row(far);
            assign_points(points, run.centroids, run.assign, run.cost);
            // coincident centroids can keep the cluster empty; claim a point outright
            if (std::none_of(run.assign.begin(), run.assign.end(),
                             [&](int a) { return a == static_cast<int>(empty); }))
                claim_point_for(points, run.centroids, run.assign, empty);
        }

        // Lloyd cost never increases between assignment phases
        if (run.cost > prev_cost * (1.0 + 1e-9) + 1e-12)
            throw NumericalError("kmeans: cost increased across an iteration");
        bool converged = prev_cost < kInf &&
                         (prev_cost - run.cost) <= cfg.rel_tol * std::max(prev_cost, 1e-300);
        prev_cost = run.cost;
        if (converged) break;

        // centroid update: mean of each cluster's members
        Matrix sums = Matrix::Zero(r, points.cols());
        IntVector sizes = IntVector::Zero(r);
        for (Index i = 0; i < n; ++i) {
            sums.row(run.assign[static_cast<std::size_t>(i)]) += points.row(i);
            ++sizes(run.assign[static_cast<std::size_t>(i)]);
        }
        for (Index k = 0; k < r; ++k)
            if (sizes(k) > 0) run.centroids.row(k) = sums.row(k) / static_cast<double>(sizes(k));
    }
    // final cost must reflect the final centroids/assignment
    assign_points(points, run.centroids, run.assign, run.cost);
    return run;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, Index r, const KMeansConfig& cfg, std::uint64_t seed) {
    const Index n = points.rows();
    if (n < 1 || points.cols() < 1)
        throw std::invalid_argument("kmeans: empty point set");
    if (r < 1 || r > n)
        throw std::invalid_argument("kmeans: need 1 <= r <= n");
    if (cfg.restarts < 1 || cfg.max_iters < 1 || cfg.rel_tol < 0.0)
        throw std::invalid_argument("kmeans: bad configuration");

    std::optional<LloydRun> best;
    for (Index s = 0; s < cfg.restarts; ++s) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        LloydRun run = lloyd_once(points, r, cfg, rng);
        if (!best || run.cost < best->cost) best = std::move(run);  // ties keep earlier restart
    }
    // guarantee a valid partition even in degenerate duplicate-point cases
    for (Index k = 0; k < r; ++k) {
        if (std::any_of(best->assign.begin(), best->assign.end(),
                        [&](int a) { return a == static_cast<int>(k); }))
            continue;
        claim_point_for(points, best->centroids, best->assign, k);
    }
    double final_cost = 0.0;
    for (Index i = 0; i < n; ++i)
        final_cost +=
            (points.row(i) - best->centroids.row(best->assign[static_cast<std::size_t>(i)]))
                .squaredNorm();
    return KMeansResult{Partition(r, best->assign), best->centroids, final_cost, cfg.restarts};
}

double solve_assignment(const Matrix& cost, std::vector<int>* matching) {
    const Index n = cost.rows();
    if (n < 1 || cost.cols() != n)
        throw std::invalid_argument("solve_assignment: need a square cost matrix");
    // Hungarian algorithm with row/column potentials; indices are 1-based with
    // column 0 as the auxiliary root.
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0),
        v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            int i0 = p[static_cast<std::size_t>(j0)], j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                             v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    if (matching) matching->assign(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) {
        int i = p[static_cast<std::size_t>(j)];
        total += cost(i - 1, j - 1);
        if (matching) (*matching)[static_cast<std::size_t>(i) - 1] = j - 1;
    }
    return total;
}

namespace {

// |Omega_j ∩ Omega_hat_k| for every (true cluster, estimated cluster) pair.
Matrix intersection_counts(const Partition& truth, const Partition& estimate) {
    Matrix inter = Matrix::Zero(truth.clusters(), estimate.clusters());
    for (Index i = 0; i < truth.states(); ++i)
        inter(truth.cluster_of(i), estimate.cluster_of(i)) += 1.0;
    return inter;
}

void require_comparable(const Partition& truth, const Partition& estimate, const char* who) {
    if (truth.states() != estimate.states())
        throw std::invalid_argument(std::string(who) + ": partitions cover different state sets");
    if (truth.clusters() != estimate.clusters())
        throw std::invalid_argument(std::string(who) + ": partitions have different cluster counts");
}

}  // namespace

double misclustering_rate(const Partition& truth, const Partition& estimate) {
    require_comparable(truth, estimate, "misclustering_rate");
    const Index r = truth.clusters();
    Matrix inter = intersection_counts(truth, estimate);
    IntVector sizes = truth.sizes();
    Matrix cost(r, r);
    for (Index j = 0; j < r; ++j)
        for (Index k = 0; k < r; ++k)
            cost(j, k) = (static_cast<double>(sizes(j)) - inter(j, k)) / static_cast<double>(sizes(j));
    return solve_assignment(cost);
}

double clustering_error(const Partition& truth, const Partition& estimate) {
    require_comparable(truth, estimate, "clustering_error");
    const Index r = truth.clusters();
    Matrix inter = intersection_counts(truth, estimate);
    IntVector sizes = truth.sizes();
    Matrix cost(r, r);
    for (Index j = 0; j < r; ++j)
        for (Index k = 0; k < r; ++k) cost(j, k) = static_cast<double>(sizes(j)) - inter(j, k);
    return solve_assignment(cost) / static_cast<double>(truth.states());
}

namespace {

// k-means cost of a block structure via sum-of-squares identity:
//   cost = sum_i ||x_i||^2 - sum_b ||sum_b||^2 / |b|
double partition_cost(const Matrix& points, const std::vector<int>& rgs, Index blocks) {
    Matrix sums = Matrix::Zero(blocks, points.cols());
    IntVector sizes = IntVector::Zero(blocks);
    double total = 0.0;
    for (Index i = 0; i < points.rows(); ++i) {
        total += points.row(i).squaredNorm();
        sums.row(rgs[static_cast<std::size_t>(i)]) += points.row(i);
        ++sizes(rgs[static_cast<std::size_t>(i)]);
    }
    for (Index b = 0; b < blocks; ++b)
        total -= sums.row(b).squaredNorm() / static_cast<double>(sizes(b));
    return total;
}

// Exhaustive minimum over partitions into at most r non-empty blocks,
// enumerated as restricted growth strings.
double exact_optimum(const Matrix& points, Index r) {
    const Index n = points.rows();
    std::vector<int> rgs(static_cast<std::size_t>(n), 0);
    double best = kInf;
    auto recurse = [&](auto&& self, Index pos, Index used) -> void {
        if (pos == n) {
            best = std::min(best, partition_cost(points, rgs, used));
            return;
        }
        for (Index b = 0; b < std::min(used + 1, r); ++b) {
            rgs[static_cast<std::size_t>(pos)] = static_cast<int>(b);
            self(self, pos + 1, std::max(used, b + 1));
        }
    };
    recurse(recurse, 1, 1);  // point 0 always opens block 0
    return best;
}

}  // namespace

EpsilonCertificate kmeans_epsilon_certificate(const Matrix& points,
                                              const KMeansResult& result,
                                              Index r) {
    if (points.rows() != result.partition.states())
        throw std::invalid_argument("kmeans_epsilon_certificate: result does not match points");
    EpsilonCertificate cert;
    if (points.rows() <= 12) {
        cert.exact = true;
        cert.optimal_cost = exact_optimum(points, r);
    } else {
        cert.exact = false;
        KMeansConfig heavy;
        heavy.restarts = 10000;
        KMeansResult search = kmeans(points, r, heavy, 0xC0FFEEull);
        cert.optimal_cost = std::min(search.cost, result.cost);
    }
    if (cert.optimal_cost <= 0.0) {
        // an exact-zero optimum certifies epsilon 0 only if the result matches it
        cert.epsilon = result.cost <= 1e-12 ? 0.0 : kInf;
    } else {
        cert.epsilon = std::max(0.0, result.cost / cert.optimal_cost - 1.0);
    }
    return cert;
}

Matrix to_membership(const Partition& partition) {
    Matrix M = Matrix::Zero(partition.states(), partition.clusters());
    for (Index i = 0; i < partition.states(); ++i) M(i, partition.cluster_of(i)) = 1.0;
    return M;
}

Partition from_membership(const Matrix& membership) {
    const Index n = membership.rows(), r = membership.cols();
    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (Index i = 0; i < n; ++i) {
        for (Index k = 0; k < r; ++k) {
            double v = membership(i, k);
            if (v == 1.0) {
                if (assign[static_cast<std::size_t>(i)] != -1)
                    throw std::invalid_argument("from_membership: row has multiple ones");
                assign[static_cast<std::size_t>(i)] = static_cast<int>(k);
            } else if (v != 0.0) {
                throw std::invalid_argument("from_membership: entries must be 0 or 1");
            }
        }
        if (assign[static_cast<std::size_t>(i)] == -1)
            throw std::invalid_argument("from_membership: row has no one");
    }
    return Partition(r, std::move(assign));
}

}  // namespace mmr
