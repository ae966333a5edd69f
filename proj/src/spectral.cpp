#include "mmr/spectral.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace mmr {

namespace {

void require_orthonormal(const Matrix& U, const char* who) {
    if (U.rows() < U.cols() || U.cols() < 1)
        throw std::invalid_argument(std::string(who) + ": need a tall matrix with >= 1 column");
    Matrix gram = U.transpose() * U;
    if ((gram - Matrix::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff() > 1e-8)
        throw std::invalid_argument(std::string(who) + ": columns are not orthonormal");
}

}  // namespace

TruncatedBasis truncate_svd(const Matrix& M, Index r) {
    if (r < 1 || r > std::min(M.rows(), M.cols()))
        throw std::invalid_argument("truncate_svd: need 1 <= r <= min(m, n)");
    Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw NumericalError("truncate_svd: decomposition failed");
    TruncatedBasis b;
    b.U = svd.matrixU().leftCols(r);
    b.V = svd.matrixV().leftCols(r);
    b.sigma = svd.singularValues().head(r);
    // sign convention: largest-magnitude entry of each left vector is positive
    for (Index k = 0; k < r; ++k) {
        Index imax = 0;
        b.U.col(k).cwiseAbs().maxCoeff(&imax);
        if (b.U(imax, k) < 0.0) {
            b.U.col(k) = -b.U.col(k);
            b.V.col(k) = -b.V.col(k);
        }
    }
    return b;
}

double sin_theta_distance(const Matrix& U1, const Matrix& U2, NormKind kind) {
    require_orthonormal(U1, "sin_theta_distance");
    require_orthonormal(U2, "sin_theta_distance");
    if (U1.rows() != U2.rows() || U1.cols() != U2.cols())
        throw std::invalid_argument("sin_theta_distance: shape mismatch");
    // (I - U1 U1') U2 has singular values sin(theta_i); no need to form
    // projectors at n x n size.
    Matrix M = U2 - U1 * (U1.transpose() * U2);
    Eigen::BDCSVD<Matrix> svd(M);
    if (kind == NormKind::Spectral) return svd.singularValues()(0);
    return svd.singularValues().norm();
}

WeylGap weyl_gap(const Matrix& A, const Matrix& A_hat) {
    if (A.rows() != A_hat.rows() || A.cols() != A_hat.cols())
        throw std::invalid_argument("weyl_gap: shape mismatch");
    Vector sa = Eigen::BDCSVD<Matrix>(A).singularValues();
    Vector sb = Eigen::BDCSVD<Matrix>(A_hat).singularValues();
    WeylGap g;
    g.max_deviation = (sa - sb).cwiseAbs().maxCoeff();
    g.bound = Eigen::BDCSVD<Matrix>(A - A_hat).singularValues()(0);
    return g;
}

WedinBound wedin_combined_bound(const Matrix& A, const Matrix& A_hat, Index r) {
    if (A.rows() != A_hat.rows() || A.cols() != A_hat.cols())
        throw std::invalid_argument("wedin_combined_bound: shape mismatch");
    if (r < 1 || r >= std::min(A.rows(), A.cols()))
        throw std::invalid_argument("wedin_combined_bound: need 1 <= r < min(m, n)");
    auto ba = truncate_svd(A, r);
    auto bb = truncate_svd(A_hat, r);
    WedinBound w;
    w.lhs = std::max(sin_theta_distance(ba.U, bb.U, NormKind::Spectral),
                     sin_theta_distance(ba.V, bb.V, NormKind::Spectral));
    Vector sa = Eigen::BDCSVD<Matrix>(A).singularValues();
    double gap = sa(r - 1) - sa(r);
    double err = Eigen::BDCSVD<Matrix>(A - A_hat).singularValues()(0);
    w.rhs = gap > 0.0 ? 2.0 * err / gap : std::numeric_limits<double>::infinity();
    return w;
}

ProcrustesResult procrustes_align(const Matrix& U1, const Matrix& U2) {
    require_orthonormal(U1, "procrustes_align");
    require_orthonormal(U2, "procrustes_align");
    if (U1.rows() != U2.rows() || U1.cols() != U2.cols())
        throw std::invalid_argument("procrustes_align: shape mismatch");
    Eigen::JacobiSVD<Matrix> svd(U1.transpose() * U2, Eigen::ComputeFullU | Eigen::ComputeFullV);
    ProcrustesResult res;
    res.rotation = svd.matrixV() * svd.matrixU().transpose();
    res.residual = (U1 - U2 * res.rotation).norm();
    return res;
}

}  // namespace mmr
