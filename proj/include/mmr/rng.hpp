#pragma once

// Counter-based 64-bit generator (SplitMix64) plus the handful of draws the
// toolkit needs.  Self-contained so that every sampled artifact is exactly
// reproducible from a single u64 seed, independent of platform or standard
// library version (std::normal_distribution et al. are not pinned across
// implementations).

#include "mmr/types.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mmr {

namespace detail {
inline std::uint64_t splitmix_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

// Derive an independent stream seed from a master seed and a stream index.
// Used to give replications / restarts decorrelated but reproducible streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return detail::splitmix_finalize(master + (stream + 1) * 0x9E3779B97F4A7C15ull);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return detail::splitmix_finalize(state_);
    }

    // Uniform on [0, 1): top 53 bits of the counter output.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; handy where log/pow of the draw must stay finite.
    double uniform_open() { return 1.0 - uniform(); }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Uniform index in [0, n).
    Index below(Index n) {
        double u = uniform() * static_cast<double>(n);
        Index i = static_cast<Index>(u);
        return i < n ? i : n - 1;
    }

    // Standard normal via Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Gamma(shape, 1) by Marsaglia-Tsang squeeze; shape < 1 handled through the
    // boost identity Gamma(a) = Gamma(a+1) * U^(1/a).
    double gamma(double shape) {
        if (!(shape > 0.0))
            throw std::invalid_argument("Rng::gamma: shape must be positive");
        if (shape < 1.0)
            return gamma(shape + 1.0) * std::pow(uniform_open(), 1.0 / shape);
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            double v = t * t * t;
            double u = uniform_open();
            double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Dirichlet draw: normalized independent gammas.
    Vector dirichlet(const Vector& alpha) {
        Vector g(alpha.size());
        for (Index i = 0; i < alpha.size(); ++i) g(i) = gamma(alpha(i));
        double s = g.sum();
        // All-tiny gammas can underflow to zero collectively; retry via fresh draws.
        while (s <= 0.0 || !std::isfinite(s)) {
            for (Index i = 0; i < alpha.size(); ++i) g(i) = gamma(alpha(i));
            s = g.sum();
        }
        return g / s;
    }

    // Sample an index from a discrete distribution given as nonnegative weights.
    Index discrete(const Vector& weights) {
        double total = weights.sum();
        double u = uniform() * total;
        double acc = 0.0;
        for (Index i = 0; i < weights.size(); ++i) {
            acc += weights(i);
            if (u < acc) return i;
        }
        return weights.size() - 1;  // guard against accumulated rounding
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mmr
