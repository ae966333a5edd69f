#include "mmr/jump_model.hpp"

#include "mmr/rng.hpp"

#include <cmath>
#include <string>

namespace mmr {

JumpModel::JumpModel(Index n_a_, Index n_c_, Matrix w_) : n_a(n_a_), n_c(n_c_), w(std::move(w_)) {
    if (n_a < 0 || n_c < 0 || n_a + n_c < 1)
        throw std::invalid_argument("JumpModel: need n_a, n_c >= 0 with n_a + n_c >= 1");
    if (w.rows() < 1 || w.cols() != n_a + n_c)
        throw std::invalid_argument("JumpModel: w must be n x (n_a + n_c) with n >= 1");
}

namespace {

// phi_t assembled from the series plus explicit pre-history values.
// pre(j) holds the value at time -1-j; slots beyond it are zero.
Vector build_regressor(const JumpModel& m, const Vector& y, const Vector& u, Index t,
                       const Vector& y_pre, const Vector& u_pre) {
    Vector phi = Vector::Zero(m.dim());
    for (Index k = 1; k <= m.n_a; ++k) {
        Index s = t - k;
        if (s >= 0)
            phi(k - 1) = y(s);
        else if (-1 - s < y_pre.size())
            phi(k - 1) = y_pre(-1 - s);
    }
    for (Index k = 1; k <= m.n_c; ++k) {
        Index s = t - k;
        if (s >= 0)
            phi(m.n_a + k - 1) = u(s);
        else if (-1 - s < u_pre.size())
            phi(m.n_a + k - 1) = u_pre(-1 - s);
    }
    return phi;
}

}  // namespace

Vector regressor(const JumpModel& model, const Trajectory& traj, Index t) {
    if (t < 0 || t >= traj.length())
        throw std::invalid_argument("regressor: t out of range");
    return build_regressor(model, traj.y, traj.u, t, Vector(), Vector());
}

Trajectory simulate(const JumpModel& model,
                    const StochasticMatrix& P,
                    const DistributionVector& pi0,
                    long N,
                    const SimulateOptions& opt,
                    std::uint64_t seed) {
    if (P.size() != model.modes())
        throw std::invalid_argument("simulate: chain size does not match mode count");
    if (pi0.size() != P.size())
        throw std::invalid_argument("simulate: pi0 size mismatch");
    if (N < std::max(model.n_a, model.n_c))
        throw std::invalid_argument("simulate: N must be >= max(n_a, n_c)");
    if (opt.noise_param < 0.0)
        throw std::invalid_argument("simulate: noise parameter must be >= 0");

    Rng rng(seed);
    Trajectory traj;
    traj.y = Vector::Zero(N + 1);
    traj.u = Vector::Zero(N + 1);
    traj.noise = Vector::Zero(N + 1);
    traj.modes.resize(static_cast<std::size_t>(N) + 1);

    traj.modes[0] = static_cast<int>(rng.discrete(pi0.probs()));
    for (long t = 0; t <= N; ++t) {
        // fixed per-step draw order (u, n, next mode) => common prefixes across N
        switch (opt.input) {
            case InputKind::GaussianUnit: traj.u(t) = rng.normal(); break;
            case InputKind::ConstantOne: traj.u(t) = 1.0; break;
            case InputKind::Zero: traj.u(t) = 0.0; break;
        }
        switch (opt.noise) {
            case NoiseKind::UniformBounded:
                traj.noise(t) = opt.noise_param > 0.0
                                    ? rng.uniform(-opt.noise_param, opt.noise_param)
                                    : 0.0;
                break;
            case NoiseKind::Gaussian:
                traj.noise(t) = opt.noise_param > 0.0 ? opt.noise_param * rng.normal() : 0.0;
                break;
        }
        Vector phi =
            build_regressor(model, traj.y, traj.u, t, opt.y_prehistory, opt.u_prehistory);
        int mode = traj.modes[static_cast<std::size_t>(t)];
        traj.y(t) = model.w.row(mode).dot(phi) + traj.noise(t);
        if (std::abs(traj.y(t)) > kDivergenceThreshold)
            throw InstabilityError("simulate: |y| exceeded divergence threshold at t = " +
                                       std::to_string(t),
                                   t, traj.y(t));
        if (t < N) {
            const Vector row = P.row(mode).transpose();
            traj.modes[static_cast<std::size_t>(t) + 1] = static_cast<int>(rng.discrete(row));
        }
    }
    return traj;
}

Trajectory simulate(const JumpModel& model,
                    const StochasticMatrix& P,
                    const DistributionVector& pi0,
                    long N,
                    double noise_max,
                    InputKind input,
                    std::uint64_t seed) {
    SimulateOptions opt;
    opt.input = input;
    opt.noise = NoiseKind::UniformBounded;
    opt.noise_param = noise_max;
    return simulate(model, P, pi0, N, opt, seed);
}

ModeEstimate estimate_modes(const JumpModel& model, const Trajectory& traj) {
    if (traj.length() < 1)
        throw std::invalid_argument("estimate_modes: empty trajectory");
    const Index n = model.modes();
    ModeEstimate est;
    est.modes.resize(static_cast<std::size_t>(traj.length()));
    for (Index t = 0; t < traj.length(); ++t) {
        Vector phi = regressor(model, traj, t);
        int best = 0;
        double best_res = std::abs(traj.y(t) - model.w.row(0).dot(phi));
        for (Index k = 1; k < n; ++k) {
            double res = std::abs(traj.y(t) - model.w.row(k).dot(phi));
            if (res < best_res) {  // strict: ties keep the smallest index
                best_res = res;
                best = static_cast<int>(k);
            }
        }
        est.modes[static_cast<std::size_t>(t)] = best;
    }
    if (traj.has_modes()) {
        long mistakes = 0;
        for (std::size_t t = 0; t < est.modes.size(); ++t)
            if (est.modes[t] != traj.modes[t]) ++mistakes;
        est.mistake_count = mistakes;
        est.mistake_rate =
            static_cast<double>(mistakes) / static_cast<double>(std::max<Index>(traj.steps(), 1));
    }
    return est;
}

SeparabilityReport check_separability(const JumpModel& model,
                                      const Trajectory& traj,
                                      double noise_max,
                                      Index from_t) {
    if (!traj.has_modes())
        throw std::invalid_argument("check_separability: trajectory lacks ground-truth modes");
    if (noise_max < 0.0)
        throw std::invalid_argument("check_separability: noise_max must be >= 0");
    if (from_t < 0 || from_t >= traj.length())
        throw std::invalid_argument("check_separability: from_t out of range");
    SeparabilityReport rep;
    rep.from_t = from_t;
    rep.per_step.reserve(static_cast<std::size_t>(traj.length() - from_t));
    bool all = true;
    for (Index t = from_t; t < traj.length(); ++t) {
        Vector phi = regressor(model, traj, t);
        int truth = traj.modes[static_cast<std::size_t>(t)];
        bool ok = true;
        for (Index j = 0; j < model.modes(); ++j) {
            if (j == truth) continue;
            double gap = std::abs(phi.dot(model.w.row(truth) - model.w.row(j)));
            if (!(gap > 2.0 * noise_max)) {
                ok = false;
                break;
            }
        }
        rep.per_step.push_back(ok);
        all = all && ok;
    }
    rep.all_separable = all;
    return rep;
}

Vector poles_to_ar_coeffs(const Vector& poles) {
    const Index m = poles.size();
    if (m < 1) throw std::invalid_argument("poles_to_ar_coeffs: need at least one pole");
    for (Index i = 0; i < m; ++i)
        if (!(std::abs(poles(i)) < 1.0))
            throw std::invalid_argument("poles_to_ar_coeffs: poles must satisfy |p| < 1");
    // expand prod_i (1 - p_i z) = sum_k c_k z^k, then a_k = -c_k
    Vector c = Vector::Zero(m + 1);
    c(0) = 1.0;
    for (Index i = 0; i < m; ++i)
        for (Index k = i + 1; k >= 1; --k) c(k) -= poles(i) * c(k - 1);
    return -c.tail(m);
}

JumpModel robot_model(Index n, const Vector& positions, double K) {
    if (n < 1 || positions.size() != n)
        throw std::invalid_argument("robot_model: need one position per mode");
    if (!(K > 0.0 && K < 2.0))
        throw std::invalid_argument("robot_model: gain K must lie in (0, 2)");
    Matrix w(n, 2);
    w.col(0).setConstant(1.0 - K);
    w.col(1) = K * positions;
    return JumpModel(1, 1, std::move(w));
}

}  // namespace mmr
