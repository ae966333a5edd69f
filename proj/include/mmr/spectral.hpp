#pragma once

// Subspace tooling behind the clustering step: truncated SVD with a fixed sign
// convention, principal-angle (sin-theta) distances, and the Weyl / Wedin /
// Procrustes quantities used by the error bounds.

#include "mmr/types.hpp"

namespace mmr {

struct TruncatedBasis {
    Matrix U;      // m x r, orthonormal columns
    Vector sigma;  // r leading singular values, descending
    Matrix V;      // n x r, orthonormal columns
};

// Leading-r SVD factors.  Column signs are fixed so that the entry of largest
// magnitude in each U column is positive (deterministic output for repeated runs).
TruncatedBasis truncate_svd(const Matrix& M, Index r);

enum class NormKind { Spectral, Frobenius };

// Norm of sin Theta(U1, U2) for orthonormal bases of two r-dimensional
// subspaces, computed from the projector difference (I - P1) P2.
double sin_theta_distance(const Matrix& U1, const Matrix& U2, NormKind kind);

struct WeylGap {
    double max_deviation;  // max_i |sigma_i(A) - sigma_i(A_hat)|
    double bound;          // ||A - A_hat||_2
};

// Weyl's inequality witness: deviation <= bound always holds.
WeylGap weyl_gap(const Matrix& A, const Matrix& A_hat);

struct WedinBound {
    double lhs;  // max of left/right sin-theta spectral distances at rank r
    double rhs;  // 2 ||A - A_hat||_2 / (sigma_r(A) - sigma_{r+1}(A)); +inf if the gap closes
};

// Combined-space Wedin bound relating subspace rotation to perturbation size.
WedinBound wedin_combined_bound(const Matrix& A, const Matrix& A_hat, Index r);

struct ProcrustesResult {
    Matrix rotation;  // r x r orthogonal Q minimizing ||U1 - U2 Q||_F
    double residual;  // the attained minimum
};

// Orthogonal Procrustes alignment of two orthonormal bases; the optimum is
// V W' from the SVD of U1' U2 = W S V'.
ProcrustesResult procrustes_align(const Matrix& U1, const Matrix& U2);

}  // namespace mmr
