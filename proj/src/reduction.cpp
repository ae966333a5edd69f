#include "mmr/reduction.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace mmr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

ReducedModel aggregate_reestimate(const TransitionCounts& counts,
                                  const Partition& partition,
                                  std::optional<double> eta) {
    const Index n = counts.states();
    const Index r = partition.clusters();
    if (partition.states() != n)
        throw std::invalid_argument("aggregate_reestimate: partition/counts size mismatch");
    Matrix rows = Matrix::Zero(r, n);
    IntVector pooled_visits = IntVector::Zero(r);
    for (Index i = 0; i < n; ++i) {
        int k = partition.cluster_of(i);
        rows.row(k) += counts.pair_counts.row(i).cast<double>();
        pooled_visits(k) += counts.visit_counts(i);
    }
    for (Index k = 0; k < r; ++k) {
        if (pooled_visits(k) > 0)
            rows.row(k) /= static_cast<double>(pooled_visits(k));
        else
            rows.row(k).setConstant(1.0 / static_cast<double>(n));
    }
    Matrix dense(n, n);
    for (Index i = 0; i < n; ++i) dense.row(i) = rows.row(partition.cluster_of(i));
    ReducedModel m{partition, std::move(rows), StochasticMatrix(std::move(dense)),
                   ReducedProvenance{counts.total_steps, eta}};
    return m;
}

DistributionVector reduced_multiply(const ReducedModel& model, const DistributionVector& mu) {
    const Index n = model.partition.states();
    if (mu.size() != n)
        throw std::invalid_argument("reduced_multiply: dimension mismatch");
    // mu' P_tilde = sum_k (sum_{i in cluster k} mu_i) * row_k  -- O(rn)
    Vector mass = Vector::Zero(model.partition.clusters());
    for (Index i = 0; i < n; ++i) mass(model.partition.cluster_of(i)) += mu(i);
    Vector out = model.cluster_rows.transpose() * mass;
    return DistributionVector(std::move(out));
}

DistributionVector reduced_stationary(const ReducedModel& model, double tol, long max_iters) {
    if (!(tol > 0.0))
        throw std::invalid_argument("reduced_stationary: tol must be positive");
    if (max_iters < 1)
        throw std::invalid_argument("reduced_stationary: max_iters must be >= 1");
    const Index n = model.partition.states();
    const Index r = model.partition.clusters();
    // Same iteration as stationary_distribution, in the factored representation.
    Vector cur = Vector::Constant(n, 1.0 / static_cast<double>(n));
    double residual = kInf;
    for (long it = 0; it < max_iters; ++it) {
        Vector mass = Vector::Zero(r);
        for (Index i = 0; i < n; ++i) mass(model.partition.cluster_of(i)) += cur(i);
        Vector next = model.cluster_rows.transpose() * mass;
        residual = (next - cur).lpNorm<1>();
        if (residual <= tol) return DistributionVector(cur);
        next /= next.sum();
        cur.swap(next);
    }
    throw ConvergenceError("reduced_stationary: no convergence after " +
                               std::to_string(max_iters) + " iterations",
                           residual);
}

BoundReport bound_stationary_diff(const StochasticMatrix& P, const StochasticMatrix& P_tilde) {
    if (P.size() != P_tilde.size())
        throw std::invalid_argument("bound_stationary_diff: size mismatch");
    const Index n = P.size();
    Eigen::EigenSolver<Matrix> eig(P.matrix(), /*computeEigenvectors=*/false);
    if (eig.info() != Eigen::Success)
        throw NumericalError("bound_stationary_diff: eigen decomposition failed");
    ComplexVector lambda = eig.eigenvalues();

    // drop the single Perron eigenvalue; a second eigenvalue at 1 means the
    // chain is not ergodic and the bound's denominator is meaningless
    Index perron = 0;
    double best = std::abs(lambda(0) - std::complex<double>(1.0, 0.0));
    for (Index i = 1; i < n; ++i) {
        double d = std::abs(lambda(i) - std::complex<double>(1.0, 0.0));
        if (d < best) {
            best = d;
            perron = i;
        }
    }
    double eigen_sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        if (i == perron) continue;
        std::complex<double> gap = std::complex<double>(1.0, 0.0) - lambda(i);
        if (std::abs(gap) <= 1e-9)
            throw std::invalid_argument(
                "bound_stationary_diff: eigenvalue 1 has multiplicity > 1 (chain not ergodic)");
        eigen_sum += 1.0 / std::abs(gap);
    }

    double diff_inf = inf_norm(P.matrix() - P_tilde.matrix());
    BoundReport rep;
    rep.name = "stationary_diff";
    rep.value = eigen_sum * diff_inf;
    rep.vacuous = rep.value > 2.0;  // ||pi - pi_tilde||_1 <= 2 always
    rep.inputs["n"] = static_cast<double>(n);
    rep.inputs["inf_norm_diff"] = diff_inf;
    rep.inputs["eigen_sum"] = eigen_sum;
    rep.inputs["actual_l1_diff"] =
        (stationary_distribution(P).probs() - stationary_distribution(P_tilde).probs()).lpNorm<1>();
    if (rep.vacuous) rep.note = "bound exceeds the trivial cap of 2";
    return rep;
}

BoundReport bound_mr(const MrBoundInputs& in) {
    if (in.n < 1 || in.r < 1 || in.r > in.n)
        throw std::invalid_argument("bound_mr: need 1 <= r <= n");
    if (in.sigma_r_pbar <= 0.0 || in.sigma1_pbar < in.sigma_r_pbar)
        throw std::invalid_argument("bound_mr: need sigma_1 >= sigma_r > 0");
    if (in.pi_min <= 0.0 || in.pi_max < in.pi_min)
        throw std::invalid_argument("bound_mr: need pi_max >= pi_min > 0");
    if (in.eps1 < 0.0 || in.eps2 <= 0.0 || in.eta < 0.0 || in.delta_norm < 0.0)
        throw std::invalid_argument("bound_mr: negative inputs");
    if (in.omega_largest < 1.0 || in.omega_smallest < 1.0 ||
        in.omega_largest < in.omega_smallest)
        throw std::invalid_argument("bound_mr: bad cluster cardinalities");
    if (in.tau_star < 1.0)
        throw std::invalid_argument("bound_mr: tau_star must be >= 1");

    BoundReport rep;
    rep.name = "mr";
    const double r = static_cast<double>(in.r);

    // precondition (size of the structural perturbation)
    double delta_cap = in.sigma_r_pbar / (8.0 * std::sqrt((2.0 + in.eps1) * r)) *
                       std::sqrt(in.omega_smallest / in.omega_largest + 1.0);
    // precondition (mode-mistake rate)
    double eta_cap = in.pi_min / 2.0;

    rep.inputs["n"] = static_cast<double>(in.n);
    rep.inputs["r"] = r;
    rep.inputs["eps1"] = in.eps1;
    rep.inputs["eps2"] = in.eps2;
    rep.inputs["eta"] = in.eta;
    rep.inputs["delta_norm"] = in.delta_norm;
    rep.inputs["sigma1_pbar"] = in.sigma1_pbar;
    rep.inputs["sigma_r_pbar"] = in.sigma_r_pbar;
    rep.inputs["pi_min"] = in.pi_min;
    rep.inputs["pi_max"] = in.pi_max;
    rep.inputs["tau_star"] = in.tau_star;
    rep.inputs["omega_largest"] = in.omega_largest;
    rep.inputs["omega_smallest"] = in.omega_smallest;
    rep.inputs["N"] = static_cast<double>(in.N);
    rep.inputs["delta_cap"] = delta_cap;
    rep.inputs["eta_cap"] = eta_cap;

    if (in.delta_norm > delta_cap) {
        rep.applicable = false;
        rep.value = kNaN;
        rep.note = "perturbation too large: ||Delta|| exceeds the admissible cap";
        return rep;
    }
    if (!(in.eta < eta_cap)) {
        rep.applicable = false;
        rep.value = kNaN;
        rep.note = "mode-mistake rate too large: eta must stay below pi_min / 2";
        return rep;
    }

    double misestimation =
        4.0 * (in.eps2 + 1.5 * in.eta) * (in.delta_norm + in.sigma1_pbar) /
        (in.pi_min * in.sigma_r_pbar);
    double base = in.delta_norm / in.sigma_r_pbar + misestimation;
    rep.value = 64.0 * (2.0 + in.eps1) * r * base * base;
    rep.vacuous = rep.value > r;
    if (rep.vacuous) rep.note = "bound exceeds the trivial cap of r";

    // effective concentration level and the sample size it calls for
    double eps_tilde = std::min({in.eps2, in.pi_min / 2.0 - in.eta,
                                 in.pi_min / (4.0 * (in.sigma1_pbar + in.delta_norm)) *
                                     (delta_cap - in.delta_norm)});
    rep.inputs["eps2_effective"] = eps_tilde;
    if (eps_tilde > 0.0 && eps_tilde < 1.0) {
        double log_inv = std::log(1.0 / eps_tilde);
        double denom = 200.0 * in.tau_star * in.pi_max * log_inv / (eps_tilde * eps_tilde);
        double min_n = denom * (std::log(24.0 * static_cast<double>(in.n) * in.tau_star) +
                                std::log(log_inv));
        rep.inputs["min_N"] = min_n;
        rep.inputs["success_probability"] =
            1.0 - std::exp(-static_cast<double>(in.N) / denom);
    } else {
        // eps_tilde ~ 1 or degenerate: the sample-size expression is outside
        // its regime; report it as unavailable rather than a misleading number
        rep.inputs["min_N"] = kNaN;
        rep.inputs["success_probability"] = kNaN;
    }
    return rep;
}

BoundReport bound_p_diff(const PDiffBoundInputs& in) {
    if (in.n < 1)
        throw std::invalid_argument("bound_p_diff: need n >= 1");
    if (in.pi_min <= 0.0)
        throw std::invalid_argument("bound_p_diff: need pi_min > 0");
    if (in.sigma1_p <= 0.0 || in.eps2 < 0.0 || in.eta < 0.0 || in.delta_inf_norm < 0.0)
        throw std::invalid_argument("bound_p_diff: negative inputs");
    BoundReport rep;
    rep.name = "p_diff";
    rep.inputs["n"] = static_cast<double>(in.n);
    rep.inputs["pi_min"] = in.pi_min;
    rep.inputs["sigma1_p"] = in.sigma1_p;
    rep.inputs["eps2"] = in.eps2;
    rep.inputs["eta"] = in.eta;
    rep.inputs["delta_inf_norm"] = in.delta_inf_norm;
    rep.inputs["mr"] = in.mr;
    if (in.mr != 0.0) {
        rep.applicable = false;
        rep.value = kNaN;
        rep.note = "row-error bound requires exact clustering (MR = 0)";
        return rep;
    }
    rep.value = 12.0 * std::sqrt(static_cast<double>(in.n)) / in.pi_min * in.sigma1_p *
                    (in.eps2 + 1.5 * in.eta) +
                2.0 * in.delta_inf_norm;
    rep.vacuous = rep.value > 2.0;  // rows of both matrices are distributions
    if (rep.vacuous) rep.note = "bound exceeds the trivial cap of 2";
    return rep;
}

PipelineResult run_pipeline(const JumpModel& model,
                            const Trajectory& traj,
                            Index r,
                            const KMeansConfig& kmeans_cfg,
                            std::uint64_t seed) {
    const Index n = model.modes();
    if (r < 1 || r > n)
        throw std::invalid_argument("run_pipeline: need 1 <= r <= n");
    if (traj.steps() < 1)
        throw std::invalid_argument("run_pipeline: trajectory has no transitions");
    ModeEstimate est = estimate_modes(model, traj);
    TransitionCounts counts = count_transitions(est.modes, n);
    StochasticMatrix p_hat = empirical_matrix(counts);
    TruncatedBasis basis = truncate_svd(p_hat.matrix(), r);
    KMeansResult clustering = kmeans(basis.U, r, kmeans_cfg, seed);
    ReducedModel reduced = aggregate_reestimate(counts, clustering.partition, est.mistake_rate);
    return PipelineResult{std::move(est),      std::move(counts), std::move(p_hat),
                          std::move(basis),    std::move(clustering), std::move(reduced)};
}

}  // namespace mmr
