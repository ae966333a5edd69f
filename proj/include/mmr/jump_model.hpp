#pragma once

// Switched ARX dynamics driven by a hidden Markov mode sequence:
//
//   y_t = w_{X_t}' phi_t + n_t,   phi_t = [y_{t-1..t-n_a}, u_{t-1..t-n_c}]'
//
// plus the residual-argmin mode estimator and the separability certificate
// that guarantees it makes no mistakes on noiseless-enough data.

#include "mmr/markov.hpp"
#include "mmr/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mmr {

// Output magnitude beyond which a simulation is declared divergent.
inline constexpr double kDivergenceThreshold = 1e12;

// Mode-indexed ARX parameters; row k of w is mode k's coefficient vector
// [a_1..a_{n_a}, c_1..c_{n_c}].
struct JumpModel {
    Index n_a = 0;
    Index n_c = 0;
    Matrix w;

    JumpModel(Index n_a_, Index n_c_, Matrix w_);

    Index modes() const { return w.rows(); }
    Index dim() const { return n_a + n_c; }
};

enum class InputKind { GaussianUnit, ConstantOne, Zero };
enum class NoiseKind { UniformBounded, Gaussian };

struct SimulateOptions {
    InputKind input = InputKind::GaussianUnit;
    NoiseKind noise = NoiseKind::UniformBounded;
    // Half-width n_max for UniformBounded, standard deviation for Gaussian.
    double noise_param = 0.0;
    // Optional pre-history overrides; entry j holds the value at time -1-j.
    // Regressor slots before time 0 default to zero when these are empty.
    Vector y_prehistory;
    Vector u_prehistory;
};

struct Trajectory {
    Vector y;                // outputs y_0..y_N
    Vector u;                // inputs u_0..u_N
    std::vector<int> modes;  // ground-truth modes when known, else empty
    Vector noise;            // realized noise when known, else empty

    Index length() const { return y.size(); }      // N + 1
    Index steps() const { return y.size() - 1; }   // N
    bool has_modes() const { return !modes.empty(); }
};

// Simulate N+1 steps (t = 0..N).  Modes, inputs and noise are drawn from a
// single stream seeded by `seed`, interleaved per step so that two runs with
// the same seed and different N share a common prefix.
Trajectory simulate(const JumpModel& model,
                    const StochasticMatrix& P,
                    const DistributionVector& pi0,
                    long N,
                    const SimulateOptions& opt,
                    std::uint64_t seed);

// Convenience overload with the common defaults: Gaussian-unit input and
// uniformly bounded noise of half-width noise_max.
Trajectory simulate(const JumpModel& model,
                    const StochasticMatrix& P,
                    const DistributionVector& pi0,
                    long N,
                    double noise_max,
                    InputKind input,
                    std::uint64_t seed);

// Regressor phi_t rebuilt from a recorded trajectory; slots that reach before
// time 0 are zero (the estimator has no access to simulation pre-history).
Vector regressor(const JumpModel& model, const Trajectory& traj, Index t);

struct ModeEstimate {
    std::vector<int> modes;              // argmin_k |y_t - w_k' phi_t|, ties -> smallest k
    std::optional<long> mistake_count;   // vs ground truth, when available
    std::optional<double> mistake_rate;  // mistakes / N
};

ModeEstimate estimate_modes(const JumpModel& model, const Trajectory& traj);

struct SeparabilityReport {
    Index from_t = 0;
    std::vector<bool> per_step;  // entry i covers time from_t + i
    bool all_separable = false;
};

// Checks |phi_t'(w_{X_t} - w_j)| > 2 * noise_max for every competing mode j at
// each step t >= from_t.  When every step passes and the noise is bounded by
// noise_max, the residual estimator recovers X_t exactly on those steps.
// Requires ground-truth modes in the trajectory.
SeparabilityReport check_separability(const JumpModel& model,
                                      const Trajectory& traj,
                                      double noise_max,
                                      Index from_t = 0);

// AR coefficients [a_1..a_m] of the polynomial with the given (real) poles,
// i.e. 1 - a_1 z - ... - a_m z^m = prod_i (1 - p_i z).  Poles must satisfy
// |p| < 1 so the sampled mode dynamics are individually stable.
Vector poles_to_ar_coeffs(const Vector& poles);

// Patrol-robot jump model: x_{t+1} = (1-K) x_t + K p_k + noise under mode k,
// encoded as n_a = n_c = 1 with constant-one input, w_k = [1-K, K p_k].
JumpModel robot_model(Index n, const Vector& positions, double K);

}  // namespace mmr
