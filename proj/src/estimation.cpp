#include "mmr/estimation.hpp"

#include <algorithm>
#include <string>

namespace mmr {

TransitionCounts count_transitions(std::span<const int> modes, Index n) {
    if (n < 1) throw std::invalid_argument("count_transitions: need n >= 1");
    if (modes.size() < 2)
        throw std::invalid_argument("count_transitions: need at least one transition");
    TransitionCounts c;
    c.pair_counts = IntMatrix::Zero(n, n);
    c.visit_counts = IntVector::Zero(n);
    c.total_steps = static_cast<long>(modes.size()) - 1;
    for (std::size_t t = 0; t + 1 < modes.size(); ++t) {
        int a = modes[t], b = modes[t + 1];
        if (a < 0 || a >= n || b < 0 || b >= n)
            throw std::invalid_argument("count_transitions: mode id out of range at t = " +
                                        std::to_string(t));
        ++c.pair_counts(a, b);
        ++c.visit_counts(a);
    }
    return c;
}

TransitionCounts merge(const TransitionCounts& a, const TransitionCounts& b) {
    if (a.states() != b.states())
        throw std::invalid_argument("merge: state-count mismatch");
    TransitionCounts out;
    out.pair_counts = a.pair_counts + b.pair_counts;
    out.visit_counts = a.visit_counts + b.visit_counts;
    out.total_steps = a.total_steps + b.total_steps;
    return out;
}

StochasticMatrix empirical_matrix(const TransitionCounts& counts) {
    const Index n = counts.states();
    Matrix P(n, n);
    for (Index i = 0; i < n; ++i) {
        if (counts.visit_counts(i) == 0) {
            P.row(i).setConstant(1.0 / static_cast<double>(n));
            continue;
        }
        double v = static_cast<double>(counts.visit_counts(i));
        for (Index j = 0; j < n; ++j)
            P(i, j) = static_cast<double>(counts.pair_counts(i, j)) / v;
    }
    return StochasticMatrix(std::move(P));
}

EmpiricalFrequency empirical_frequency(const TransitionCounts& counts) {
    if (counts.total_steps < 1)
        throw std::invalid_argument("empirical_frequency: no transitions counted");
    double N = static_cast<double>(counts.total_steps);
    return EmpiricalFrequency{counts.pair_counts.cast<double>() / N,
                              counts.visit_counts.cast<double>() / N};
}

PerturbationStats perturbation_stats(std::span<const int> truth, std::span<const int> estimate) {
    if (truth.size() != estimate.size() || truth.empty())
        throw std::invalid_argument("perturbation_stats: sequences must be equal, non-empty length");
    PerturbationStats s;
    for (std::size_t t = 0; t < truth.size(); ++t)
        if (truth[t] != estimate[t]) ++s.mismatches;
    long N = static_cast<long>(truth.size()) - 1;
    s.rate = static_cast<double>(s.mismatches) / static_cast<double>(std::max(N, 1L));
    return s;
}

}  // namespace mmr
