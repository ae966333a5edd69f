#pragma once

// Shared aliases and error types for the mode-reduction toolkit.

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mmr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

// Iterative routine ran out of iterations; carries the last residual so
// callers can decide whether the partial answer is still useful.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// A decomposition or other numeric kernel failed outright.
class NumericalError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input is structurally rank-deficient / degenerate for the requested operation.
class DegeneracyError : public NumericalError {
    using NumericalError::NumericalError;
};

// Simulated output left the trust region (|y_t| > divergence threshold).
class InstabilityError : public std::runtime_error {
public:
    InstabilityError(const std::string& what, Index t, double value)
        : std::runtime_error(what), t_(t), value_(value) {}
    Index time_index() const { return t_; }
    double value() const { return value_; }

private:
    Index t_;
    double value_;
};

}  // namespace mmr
