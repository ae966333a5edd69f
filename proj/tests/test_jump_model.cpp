#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmr/jump_model.hpp"
#include "mmr/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

using namespace mmr;

namespace {

// Oracle: roots of z^m - a_1 z^{m-1} - ... - a_m via the companion matrix.
// These are exactly the poles of 1 - a_1 z^-1 ... scaled form used by the
// coefficient builder.
ComplexVector companion_roots(const Vector& a) {
    const Index m = a.size();
    Matrix C = Matrix::Zero(m, m);
    C.row(0) = a.transpose();
    for (Index i = 1; i < m; ++i) C(i, i - 1) = 1.0;
    return Eigen::EigenSolver<Matrix>(C, false).eigenvalues();
}

StochasticMatrix two_mode_chain() {
    Matrix P(2, 2);
    P << 0.7, 0.3, 0.4, 0.6;
    return StochasticMatrix(P);
}

}  // namespace

TEST_CASE("model validation") {
    CHECK_THROWS_AS(JumpModel(0, 0, Matrix::Ones(2, 0)), std::invalid_argument);
    CHECK_THROWS_AS(JumpModel(2, 1, Matrix::Ones(2, 2)), std::invalid_argument);  // wrong width
    JumpModel m(1, 1, Matrix::Ones(3, 2));
    CHECK(m.modes() == 3);
    CHECK(m.dim() == 2);
}

TEST_CASE("simulate: zero initial data and zero noise stays at zero") {
    JumpModel m(2, 0, (Matrix(1, 2) << 0.5, -0.3).finished());
    auto traj = simulate(m, StochasticMatrix::uniform(1), DistributionVector::uniform(1), 50, 0.0,
                         InputKind::Zero, 9);
    CHECK(traj.y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simulate: single AR(1) mode decays geometrically from pre-history") {
    JumpModel m(1, 0, (Matrix(1, 1) << 0.5).finished());
    SimulateOptions opt;
    opt.input = InputKind::Zero;
    opt.noise_param = 0.0;
    opt.y_prehistory = (Vector(1) << 2.0).finished();  // y_{-1} = 2 so y_0 = 1
    auto traj = simulate(m, StochasticMatrix::uniform(1), DistributionVector::uniform(1), 20, opt, 3);
    for (Index t = 0; t <= 20; ++t)
        CHECK(traj.y(t) == doctest::Approx(std::pow(0.5, static_cast<double>(t))).epsilon(1e-12));
}

TEST_CASE("simulate: recorded series replays exactly through the regressor") {
    Rng seeds(101);
    JumpModel m(2, 1, (Matrix(2, 3) << 0.4, 0.1, 1.0, -0.3, 0.2, 0.5).finished());
    for (int rep = 0; rep < 5; ++rep) {
        auto traj = simulate(m, two_mode_chain(), DistributionVector::uniform(2), 200, 0.05,
                             InputKind::GaussianUnit, seeds.next_u64());
        // no pre-history override: y_t must equal w' phi + noise bit-for-bit at every t
        for (Index t = 0; t < traj.length(); ++t) {
            Vector phi = regressor(m, traj, t);
            double replay = m.w.row(traj.modes[static_cast<std::size_t>(t)]).dot(phi) + traj.noise(t);
            CHECK(traj.y(t) == replay);
        }
    }
}

TEST_CASE("simulate: same seed shares a prefix across different horizons") {
    JumpModel m(1, 1, (Matrix(2, 2) << 0.5, 1.0, -0.5, 0.3).finished());
    auto short_run = simulate(m, two_mode_chain(), DistributionVector::uniform(2), 50, 0.1,
                              InputKind::GaussianUnit, 42);
    auto long_run = simulate(m, two_mode_chain(), DistributionVector::uniform(2), 120, 0.1,
                             InputKind::GaussianUnit, 42);
    CHECK(long_run.y.head(51) == short_run.y);
    CHECK(long_run.u.head(51) == short_run.u);
    for (std::size_t t = 0; t <= 50; ++t) CHECK(long_run.modes[t] == short_run.modes[t]);
}

TEST_CASE("simulate: uniform noise respects the bound, gaussian matches its sigma") {
    JumpModel m(1, 0, (Matrix(1, 1) << 0.2).finished());
    auto uni = simulate(m, StochasticMatrix::uniform(1), DistributionVector::uniform(1), 5000, 0.3,
                        InputKind::Zero, 7);
    CHECK(uni.noise.cwiseAbs().maxCoeff() <= 0.3);
    CHECK(uni.noise.cwiseAbs().maxCoeff() >= 0.28);  // nearly attains the bound

    SimulateOptions g;
    g.input = InputKind::Zero;
    g.noise = NoiseKind::Gaussian;
    g.noise_param = std::sqrt(0.1);
    auto gau = simulate(m, StochasticMatrix::uniform(1), DistributionVector::uniform(1), 20000, g, 8);
    double var = gau.noise.squaredNorm() / static_cast<double>(gau.noise.size());
    CHECK(var == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("simulate: divergence guard fires on an unstable mode") {
    JumpModel m(1, 0, (Matrix(1, 1) << 2.0).finished());
    SimulateOptions opt;
    opt.input = InputKind::Zero;
    opt.y_prehistory = (Vector(1) << 1.0).finished();
    bool threw = false;
    try {
        simulate(m, StochasticMatrix::uniform(1), DistributionVector::uniform(1), 100, opt, 1);
    } catch (const InstabilityError& e) {
        threw = true;
        CHECK(std::abs(e.value()) > kDivergenceThreshold);
        CHECK(e.time_index() == 39);  // y_t = 2^{t+1} first exceeds 1e12 at t = 39
    }
    CHECK(threw);
}

TEST_CASE("estimate_modes: noiseless separable run is recovered exactly") {
    // well-separated coefficients, tiny noise bound, strong input
    JumpModel m(1, 1, (Matrix(2, 2) << 0.5, 2.0, -0.5, -2.0).finished());
    auto traj = simulate(m, two_mode_chain(), DistributionVector::uniform(2), 300, 0.0,
                         InputKind::GaussianUnit, 5);
    auto est = estimate_modes(m, traj);
    REQUIRE(est.mistake_count.has_value());
    // t = 0 can tie (phi_0 = 0); everything after must match
    CHECK(*est.mistake_count <= 1);
    long late = 0;
    for (std::size_t t = 1; t < est.modes.size(); ++t)
        if (est.modes[t] != traj.modes[t]) ++late;
    CHECK(late == 0);
}

TEST_CASE("estimate_modes: residual argmin and tie-breaking") {
    JumpModel m(1, 0, (Matrix(3, 1) << 1.0, -1.0, 0.5).finished());
    Trajectory traj;
    traj.y = (Vector(2) << 1.0, 0.9).finished();
    traj.u = Vector::Zero(2);
    auto est = estimate_modes(m, traj);
    // t=0: phi = [0], all residuals equal |y_0| -> tie -> mode 0
    CHECK(est.modes[0] == 0);
    // t=1: phi = [1]; residuals |0.9-1|=0.1, |0.9+1|=1.9, |0.9-0.5|=0.4 -> mode 0
    CHECK(est.modes[1] == 0);
    CHECK_FALSE(est.mistake_count.has_value());

    // symmetric ties: y=0, phi=[1], modes +-1 give equal residuals -> smallest index
    JumpModel sym(1, 0, (Matrix(2, 1) << 1.0, -1.0).finished());
    Trajectory tie;
    tie.y = (Vector(2) << 1.0, 0.0).finished();
    tie.u = Vector::Zero(2);
    CHECK(estimate_modes(sym, tie).modes[1] == 0);
}

TEST_CASE("check_separability: direct gap evaluation") {
    JumpModel m(1, 0, (Matrix(2, 1) << 1.0, -1.0).finished());
    Trajectory traj;
    traj.y = (Vector(2) << 1.0, 1.0).finished();
    traj.u = Vector::Zero(2);
    traj.modes = {0, 0};
    // t=1: |phi'(w_0 - w_1)| = |1*2| = 2 > 2*0.4
    auto rep = check_separability(m, traj, 0.4, 1);
    CHECK(rep.per_step.size() == 1);
    CHECK(rep.all_separable);
    // t=0: phi = 0 so the gap is 0 -> never separable
    auto rep0 = check_separability(m, traj, 0.4, 0);
    CHECK_FALSE(rep0.per_step[0]);
    CHECK_FALSE(rep0.all_separable);
    // a single-mode model is vacuously separable
    JumpModel solo(1, 0, (Matrix(1, 1) << 0.5).finished());
    Trajectory st;
    st.y = (Vector(2) << 0.0, 0.0).finished();
    st.u = Vector::Zero(2);
    st.modes = {0, 0};
    CHECK(check_separability(solo, st, 10.0).all_separable);

    Trajectory no_modes;
    no_modes.y = Vector::Zero(2);
    no_modes.u = Vector::Zero(2);
    CHECK_THROWS_AS(check_separability(m, no_modes, 0.1), std::invalid_argument);
}

TEST_CASE("separability implies exact recovery (randomized implication check)") {
    // 100 random 2-mode ARX(1,1) instances; whenever the report from
    // t >= max(n_a, n_c) is all-true, the estimator must make zero mistakes there.
    Rng meta(2024);
    int all_true_instances = 0;
    for (int inst = 0; inst < 100; ++inst) {
        Matrix w(2, 2);
        w << meta.uniform(-0.9, 0.9), meta.uniform(-2.0, 2.0), meta.uniform(-0.9, 0.9),
            meta.uniform(-2.0, 2.0);
        JumpModel m(1, 1, w);
        double n_max = 1e-4;
        auto traj = simulate(m, two_mode_chain(), DistributionVector::uniform(2), 100, n_max,
                             InputKind::GaussianUnit, meta.next_u64());
        Index burn = std::max(m.n_a, m.n_c);
        auto rep = check_separability(m, traj, n_max, burn);
        if (!rep.all_separable) continue;
        ++all_true_instances;
        auto est = estimate_modes(m, traj);
        for (Index t = burn; t < traj.length(); ++t)
            CHECK(est.modes[static_cast<std::size_t>(t)] == traj.modes[static_cast<std::size_t>(t)]);
    }
    // the check must not be vacuous; with this gap distribution most instances qualify
    CHECK(all_true_instances >= 30);
}

TEST_CASE("poles_to_ar_coeffs: worked examples") {
    Vector p1(3);
    p1 << 0.5, 0.0, 0.0;
    Vector a1 = poles_to_ar_coeffs(p1);
    CHECK(a1(0) == doctest::Approx(0.5));
    CHECK(a1(1) == doctest::Approx(0.0));
    CHECK(a1(2) == doctest::Approx(0.0));

    Vector p2(3);
    p2 << 0.5, -0.5, 0.0;
    Vector a2 = poles_to_ar_coeffs(p2);
    CHECK(a2(0) == doctest::Approx(0.0));
    CHECK(a2(1) == doctest::Approx(0.25));
    CHECK(a2(2) == doctest::Approx(0.0));

    Vector bad(1);
    bad << 1.0;
    CHECK_THROWS_AS(poles_to_ar_coeffs(bad), std::invalid_argument);
}

TEST_CASE("poles_to_ar_coeffs round-trips through companion-matrix roots") {
    Rng rng(31415);
    for (int rep = 0; rep < 50; ++rep) {
        Index m = 1 + rng.below(4);
        Vector poles(m);
        for (Index i = 0; i < m; ++i) poles(i) = rng.uniform(-0.95, 0.95);
        Vector a = poles_to_ar_coeffs(poles);
        ComplexVector roots = companion_roots(a);
        // sort both by real part (poles are real; roots' imaginary parts ~ 0)
        std::vector<double> want(poles.data(), poles.data() + m), got;
        for (Index i = 0; i < m; ++i) {
            CHECK(std::abs(roots(i).imag()) <= 1e-8);
            got.push_back(roots(i).real());
        }
        std::sort(want.begin(), want.end());
        std::sort(got.begin(), got.end());
        for (Index i = 0; i < m; ++i) CHECK(std::abs(want[i] - got[i]) <= 1e-8);
    }
}

TEST_CASE("robot model") {
    Vector pos(3);
    pos << 1.0, 2.0, 3.0;
    auto m = robot_model(3, pos, 0.7);
    CHECK(m.n_a == 1);
    CHECK(m.n_c == 1);
    CHECK(m.w(2, 0) == doctest::Approx(0.3));
    CHECK(m.w(2, 1) == doctest::Approx(2.1));

    // K = 1 jumps straight to the target position
    auto unit = robot_model(2, (Vector(2) << 4.0, -1.0).finished(), 1.0);
    CHECK(unit.w(0, 0) == 0.0);
    CHECK(unit.w(0, 1) == 4.0);

    CHECK_THROWS_AS(robot_model(2, pos, 0.7), std::invalid_argument);
    CHECK_THROWS_AS(robot_model(3, pos, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(robot_model(3, pos, 2.0), std::invalid_argument);
}

TEST_CASE("robot under a frozen mode approaches its station at rate |1-K|") {
    const double K = 0.7;
    Vector pos(3);
    pos << 1.0, 2.0, 3.0;
    auto m = robot_model(3, pos, K);
    // freeze mode 2 via an absorbing-row chain and a point-mass start
    Matrix F = Matrix::Zero(3, 3);
    F.col(2).setOnes();
    SimulateOptions opt;
    opt.input = InputKind::ConstantOne;
    opt.noise_param = 0.0;
    auto traj = simulate(m, StochasticMatrix(F), DistributionVector::point_mass(3, 2), 40, opt, 1);
    // once the constant input is in the regressor (t >= 2), the tracking error
    // |x_t - p| contracts by exactly |1 - K| per step
    for (Index t = 2; t <= 40; ++t) {
        double e_prev = std::abs(traj.y(t - 1) - 3.0);
        double e_cur = std::abs(traj.y(t) - 3.0);
        CHECK(e_cur == doctest::Approx(e_prev * std::abs(1.0 - K)).epsilon(1e-9));
    }
    CHECK(std::abs(traj.y(40) - 3.0) <= 1e-12);
}
