#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmr/markov.hpp"
#include "mmr/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace mmr;

namespace {

// Oracle: stationary distribution through the left eigenvector of the
// eigenvalue closest to 1, computed by a dense eigensolver.
Vector stationary_eigen_oracle(const Matrix& P) {
    Eigen::EigenSolver<Matrix> eig(P.transpose());
    Index best = 0;
    double best_dist = std::abs(eig.eigenvalues()(0) - std::complex<double>(1.0, 0.0));
    for (Index i = 1; i < P.rows(); ++i) {
        double d = std::abs(eig.eigenvalues()(i) - std::complex<double>(1.0, 0.0));
        if (d < best_dist) {
            best_dist = d;
            best = i;
        }
    }
    Vector v = eig.eigenvectors().col(best).real();
    if (v.sum() < 0.0) v = -v;
    return v / v.sum();
}

// Oracle: brute-force matrix power by k-1 sequential multiplies.
Matrix power_oracle(const Matrix& P, long k) {
    Matrix acc = P;
    for (long i = 1; i < k; ++i) acc = acc * P;
    return acc;
}

StochasticMatrix random_chain(Index n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix M(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) M(i, j) = rng.uniform() + 0.05;
        M.row(i) /= M.row(i).sum();
    }
    return StochasticMatrix(std::move(M));
}

Partition random_partition(Index n, Index r, Rng& rng) {
    for (;;) {
        std::vector<int> a(static_cast<std::size_t>(n));
        std::vector<bool> seen(static_cast<std::size_t>(r), false);
        for (Index i = 0; i < n; ++i) {
            a[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(r));
            seen[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])] = true;
        }
        if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
            return Partition(r, std::move(a));
    }
}

}  // namespace

TEST_CASE("validated types reject malformed input") {
    Matrix bad_sum(2, 2);
    bad_sum << 0.5, 0.6, 0.5, 0.5;
    CHECK_THROWS_AS(StochasticMatrix{bad_sum}, std::invalid_argument);

    Matrix negative(2, 2);
    negative << 1.2, -0.2, 0.5, 0.5;
    CHECK_THROWS_AS(StochasticMatrix{negative}, std::invalid_argument);

    Matrix rect(2, 3);
    rect.setConstant(1.0 / 3.0);
    CHECK_THROWS_AS(StochasticMatrix{rect}, std::invalid_argument);

    Vector v(2);
    v << 0.7, 0.2;
    CHECK_THROWS_AS(DistributionVector{v}, std::invalid_argument);
    v << -0.1, 1.1;
    CHECK_THROWS_AS(DistributionVector{v}, std::invalid_argument);

    CHECK_THROWS_AS(Partition(2, {0, 0, 0}), std::invalid_argument);   // cluster 1 empty
    CHECK_THROWS_AS(Partition(2, {0, 2, 1}), std::invalid_argument);   // id out of range
    CHECK_THROWS_AS(Partition(4, {0, 1, 2}), std::invalid_argument);   // r > n
    CHECK_NOTHROW(Partition(2, {1, 0, 1}));
}

TEST_CASE("partition helpers") {
    Partition p(3, {2, 0, 0, 1, 2, 2});
    CHECK(p.states() == 6);
    CHECK(p.clusters() == 3);
    IntVector s = p.sizes();
    CHECK(s(0) == 2);
    CHECK(s(1) == 1);
    CHECK(s(2) == 3);
    CHECK(p.size_of_rank(1) == 3);
    CHECK(p.size_of_rank(3) == 1);
    auto g = p.groups();
    CHECK(g[2] == std::vector<Index>{0, 4, 5});
    CHECK(Partition::identity(4).clusters() == 4);
}

TEST_CASE("stationary distribution: uniform row chain is immediately stationary") {
    auto P = StochasticMatrix::uniform(5);
    auto pi = stationary_distribution(P);
    for (Index i = 0; i < 5; ++i) CHECK(pi(i) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("stationary distribution: two-state closed form") {
    // Detailed balance gives pi = (b, a)/(a+b) for off-diagonals a, b.
    Matrix M(2, 2);
    M << 0.9, 0.1, 0.2, 0.8;
    auto pi = stationary_distribution(StochasticMatrix(M), 1e-12);
    CHECK(pi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(pi(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("stationary distribution matches dense eigen oracle") {
    for (std::uint64_t seed : {11u, 22u, 33u, 44u}) {
        auto P = random_chain(8, seed);
        auto pi = stationary_distribution(P, 1e-12);
        Vector oracle = stationary_eigen_oracle(P.matrix());
        CHECK((pi.probs() - oracle).lpNorm<1>() <= 1e-8);
        // returned iterate satisfies the advertised fixed-point residual
        Vector res = P.matrix().transpose() * pi.probs() - pi.probs();
        CHECK(res.lpNorm<1>() <= 1e-12);
    }
}

TEST_CASE("stationary distribution reports non-convergence with residual") {
    Matrix M(2, 2);
    M << 0.999, 0.001, 0.0005, 0.9995;  // slow, non-symmetric chain
    bool threw = false;
    try {
        stationary_distribution(StochasticMatrix(M), 1e-14, 5);
    } catch (const ConvergenceError& e) {
        threw = true;
        CHECK(e.residual() > 1e-14);
        CHECK(std::isfinite(e.residual()));
    }
    CHECK(threw);
    CHECK_THROWS_AS(stationary_distribution(StochasticMatrix(M), -1.0), std::invalid_argument);
}

TEST_CASE("transient distribution") {
    auto P = random_chain(6, 7);
    auto pi0 = DistributionVector::uniform(6);
    CHECK(transient_distribution(P, pi0, 0) == pi0);

    // two-state deterministic cycle flips a point mass each step
    Matrix C(2, 2);
    C << 0, 1, 1, 0;
    auto cyc = StochasticMatrix(C);
    auto start = DistributionVector::point_mass(2, 0);
    CHECK(transient_distribution(cyc, start, 3)(1) == doctest::Approx(1.0));

    // oracle: five explicit single-step multiplies
    Vector cur = pi0.probs();
    for (int s = 0; s < 5; ++s) cur = P.matrix().transpose() * cur;
    auto got = transient_distribution(P, pi0, 5);
    CHECK((got.probs() - cur).lpNorm<1>() <= 1e-15);
}

TEST_CASE("transient distribution converges to stationary at a geometric rate") {
    auto P = random_chain(5, 99);
    Vector pi = stationary_eigen_oracle(P.matrix());
    auto pi0 = DistributionVector::point_mass(5, 2);
    std::vector<double> errs;
    for (long t : {2L, 4L, 8L, 16L})
        errs.push_back((transient_distribution(P, pi0, t).probs() - pi).lpNorm<1>());
    // strictly decreasing along the doubling schedule and clearly geometric
    for (std::size_t i = 1; i < errs.size(); ++i) CHECK(errs[i] < errs[i - 1]);
    CHECK(errs.back() <= 1e-6);
}

TEST_CASE("mixing time: uniform chain mixes in one step") {
    auto P = StochasticMatrix::uniform(4);
    for (double eps : {0.25, 0.1, 0.01}) CHECK(mixing_time(P, eps) == 1);
}

TEST_CASE("mixing time: two-state chain against explicit-power oracle") {
    Matrix M(2, 2);
    M << 0.9, 0.1, 0.2, 0.8;
    auto P = StochasticMatrix(M);
    Vector pi = stationary_eigen_oracle(M);
    // oracle: scan k upward with brute-force powers
    long expected = -1;
    for (long k = 1; k <= 100 && expected < 0; ++k)
        if (worst_row_tv(power_oracle(M, k), pi) <= 0.25) expected = k;
    CHECK(expected == 3);  // lambda_2 = 0.7: (2/3) 0.7^k <= 1/4 first at k = 3
    CHECK(mixing_time(P, 0.25) == expected);
}

TEST_CASE("mixing time agrees with oracle on random chains and is monotone in eps") {
    for (std::uint64_t seed : {5u, 6u, 7u}) {
        auto P = random_chain(6, seed);
        Vector pi = stationary_eigen_oracle(P.matrix());
        for (double eps : {0.3, 0.1, 0.02}) {
            long got = mixing_time(P, eps);
            long expected = -1;
            for (long k = 1; expected < 0; ++k)
                if (worst_row_tv(power_oracle(P.matrix(), k), pi) <= eps) expected = k;
            CHECK(got == expected);
        }
        CHECK(mixing_time(P, 0.3) <= mixing_time(P, 0.02));
    }
}

TEST_CASE("mixing time reports TV distance when max_k is exhausted") {
    Matrix M(2, 2);
    M << 0.999, 0.001, 0.001, 0.999;
    bool threw = false;
    try {
        mixing_time(StochasticMatrix(M), 0.01, 4);
    } catch (const ConvergenceError& e) {
        threw = true;
        Vector pi = stationary_eigen_oracle(M);
        CHECK(e.residual() == doctest::Approx(worst_row_tv(power_oracle(M, 4), pi)).epsilon(1e-9));
    }
    CHECK(threw);
}

TEST_CASE("mixing time chaining relation tau(eps) vs tau(delta)") {
    // tau(eps) <= tau(delta) * (ceil(log(eps/delta)/log(2 delta)) + 1) for delta < 1/2, eps < delta
    for (std::uint64_t seed : {3u, 13u, 23u}) {
        auto P = random_chain(5, seed);
        double delta = 0.25, eps = 0.01;
        long td = mixing_time(P, delta);
        long te = mixing_time(P, eps);
        long factor = static_cast<long>(std::ceil(std::log(eps / delta) / std::log(2 * delta))) + 1;
        CHECK(te <= td * factor);
    }
}

TEST_CASE("sample_trajectory: deterministic chain alternates") {
    Matrix C(2, 2);
    C << 0, 1, 1, 0;
    auto traj = sample_trajectory(StochasticMatrix(C), DistributionVector::point_mass(2, 0), 6, 42);
    for (std::size_t t = 0; t < traj.size(); ++t) CHECK(traj[t] == static_cast<int>(t % 2));
}

TEST_CASE("sample_trajectory: reproducible and seed-sensitive") {
    auto P = random_chain(4, 17);
    auto pi0 = DistributionVector::uniform(4);
    auto a = sample_trajectory(P, pi0, 500, 1);
    auto b = sample_trajectory(P, pi0, 500, 1);
    auto c = sample_trajectory(P, pi0, 500, 2);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("sample_trajectory: long-run pair frequencies match diag(pi) P") {
    auto P = random_chain(3, 29);
    Vector pi = stationary_eigen_oracle(P.matrix());
    const long N = 100000;
    auto traj = sample_trajectory(P, DistributionVector::uniform(3), N, 777);
    Matrix freq = Matrix::Zero(3, 3);
    for (long t = 0; t < N; ++t) freq(traj[static_cast<std::size_t>(t)], traj[static_cast<std::size_t>(t) + 1]) += 1.0;
    freq /= static_cast<double>(N);
    Matrix expected = pi.asDiagonal() * P.matrix();
    CHECK((freq - expected).cwiseAbs().maxCoeff() <= 0.02);
}

TEST_CASE("is_ergodic") {
    CHECK(is_ergodic(random_chain(5, 3)));
    Matrix C(2, 2);
    C << 0, 1, 1, 0;
    CHECK_FALSE(is_ergodic(StochasticMatrix(C)));  // periodic
    Matrix R(2, 2);
    R << 1, 0, 0.5, 0.5;
    CHECK_FALSE(is_ergodic(StochasticMatrix(R)));  // reducible (absorbing state 0)
}

TEST_CASE("build_aggregatable") {
    // identity partition reproduces the rows verbatim
    Matrix rows(3, 3);
    rows << 0.2, 0.3, 0.5, 0.1, 0.8, 0.1, 0.4, 0.4, 0.2;
    auto P = build_aggregatable(Partition::identity(3), rows);
    CHECK(P.matrix() == rows);

    // four states folded onto two distinct rows
    Matrix two(2, 4);
    two << 0.25, 0.25, 0.25, 0.25, 0.7, 0.1, 0.1, 0.1;
    Partition part(2, {0, 1, 0, 1});
    auto P4 = build_aggregatable(part, two);
    CHECK(P4.row(0) == P4.row(2));
    CHECK(P4.row(1) == P4.row(3));
    // rank is exactly r: sigma_{r+1} vanishes
    auto summary = spectral_summary(P4.matrix());
    CHECK(summary.singular_values(2) <= 1e-9);

    // duplicate rows are rejected as rank deficient
    Matrix dup(2, 4);
    dup.row(0) = two.row(0);
    dup.row(1) = two.row(0);
    CHECK_THROWS_AS(build_aggregatable(part, dup), DegeneracyError);
}

TEST_CASE("sample_dirichlet_rows moments") {
    // symmetric alpha: mean 1/n with spread shrinking as alpha grows
    const Index n = 4;
    const Index draws = 10000;
    Matrix rows = sample_dirichlet_rows(Vector::Ones(n), draws, 5);
    for (Index i = 0; i < draws; ++i) CHECK(std::abs(rows.row(i).sum() - 1.0) <= 1e-12);
    Vector mean = rows.colwise().mean();
    for (Index j = 0; j < n; ++j) CHECK(std::abs(mean(j) - 0.25) <= 0.02);

    Matrix tight = sample_dirichlet_rows(Vector::Constant(n, 10000.0), 200, 6);
    for (Index i = 0; i < 200; ++i)
        CHECK((tight.row(i).transpose() - Vector::Constant(n, 0.25)).cwiseAbs().maxCoeff() <= 0.05);

    // asymmetric alpha: mean proportional to alpha
    Vector alpha(3);
    alpha << 2.0, 1.0, 1.0;
    Matrix asym = sample_dirichlet_rows(alpha, draws, 7);
    CHECK(std::abs(asym.col(0).mean() - 0.5) <= 0.02);

    CHECK(sample_dirichlet_rows(Vector::Ones(1), 3, 8) == Matrix::Ones(3, 1));
    Vector bad(2);
    bad << 1.0, 0.0;
    CHECK_THROWS_AS(sample_dirichlet_rows(bad, 1, 0), std::invalid_argument);
}

TEST_CASE("sample_perturbed keeps rows stochastic and centers on the base") {
    Rng prng(1234);
    const Index n = 6, r = 2;
    Partition part = random_partition(n, r, prng);
    Matrix rows = sample_dirichlet_rows(Vector::Ones(n), r, 11);
    auto P_bar = build_aggregatable(part, rows);

    auto s = sample_perturbed(P_bar, part, 50.0, 21);
    CHECK(s.P.size() == n);
    CHECK((s.P.matrix() - P_bar.matrix() - s.delta).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.delta_spectral_norm > 0.0);

    // huge concentration: essentially no perturbation
    auto tight = sample_perturbed(P_bar, part, 1e6, 22);
    CHECK(tight.delta_spectral_norm <= 0.01);

    // Dirichlet mean equals the base row: empirical mean of delta ~ 0
    Matrix acc = Matrix::Zero(n, n);
    const int reps = 1000;
    for (int k = 0; k < reps; ++k) acc += sample_perturbed(P_bar, part, 30.0, 1000 + k).delta;
    CHECK((acc / reps).cwiseAbs().maxCoeff() <= 0.01);

    // zero entries in the base are rejected
    Matrix z(2, 2);
    z << 1.0, 0.0, 0.5, 0.5;
    CHECK_THROWS_AS(sample_perturbed(StochasticMatrix(z), Partition::identity(2), 10.0, 0),
                    std::invalid_argument);
}

TEST_CASE("spectral_summary basics") {
    auto id = spectral_summary(Matrix::Identity(3, 3));
    CHECK((id.singular_values - Vector::Ones(3)).cwiseAbs().maxCoeff() <= 1e-12);
    for (Index i = 0; i < 3; ++i) CHECK(std::abs(id.eigenvalues(i) - 1.0) <= 1e-12);

    // any stochastic matrix has spectral radius 1
    auto P = random_chain(7, 91);
    auto s = spectral_summary(P.matrix());
    CHECK(std::abs(std::abs(s.eigenvalues(0)) - 1.0) <= 1e-9);
    // singular values descending
    for (Index i = 1; i < 7; ++i) CHECK(s.singular_values(i) <= s.singular_values(i - 1) + 1e-15);
}

TEST_CASE("empirical concentration rate: sup error roughly halves per quadrupling of N") {
    // median over seeds of max_ij |freq_hat - diag(pi) P| at N, 4N, 16N
    auto P = random_chain(4, 57);
    Vector pi = stationary_eigen_oracle(P.matrix());
    Matrix F = pi.asDiagonal() * P.matrix();
    auto sup_err = [&](long N, std::uint64_t seed) {
        auto traj = sample_trajectory(P, DistributionVector::uniform(4), N, seed);
        Matrix freq = Matrix::Zero(4, 4);
        for (long t = 0; t < N; ++t)
            freq(traj[static_cast<std::size_t>(t)], traj[static_cast<std::size_t>(t) + 1]) += 1.0;
        freq /= static_cast<double>(N);
        return (freq - F).cwiseAbs().maxCoeff();
    };
    std::vector<long> Ns = {1000, 4000, 16000};
    std::vector<double> med(Ns.size());
    for (std::size_t gi = 0; gi < Ns.size(); ++gi) {
        std::vector<double> errs;
        for (std::uint64_t s = 0; s < 11; ++s) errs.push_back(sup_err(Ns[gi], 100 + s));
        std::sort(errs.begin(), errs.end());
        med[gi] = errs[errs.size() / 2];
    }
    // 1/sqrt(N) scaling predicts a factor 2 drop; allow 1.6x slack
    CHECK(med[1] <= med[0] / 2.0 * 1.6);
    CHECK(med[2] <= med[1] / 2.0 * 1.6);
}
