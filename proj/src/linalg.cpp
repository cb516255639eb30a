#include "plq/linalg.hpp"

#include "plq/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <string>

namespace plq {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonPsdM: return "NonPsdM";
        case ErrorCode::NonInjectiveB: return "NonInjectiveB";
        case ErrorCode::NonInjectiveComposite: return "NonInjectiveComposite";
        case ErrorCode::EmptyU: return "EmptyU";
        case ErrorCode::BadParameter: return "BadParameter";
        case ErrorCode::EvaluationDidNotConverge: return "EvaluationDidNotConverge";
        case ErrorCode::SingularM: return "SingularM";
        case ErrorCode::UnsupportedU: return "UnsupportedU";
        case ErrorCode::NotCoercive: return "NotCoercive";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::NonSpdQ: return "NonSpdQ";
        case ErrorCode::BadFraction: return "BadFraction";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::SingularG: return "SingularG";
        case ErrorCode::SingularT: return "SingularT";
        case ErrorCode::NoInteriorFound: return "NoInteriorFound";
        case ErrorCode::IterationLimit: return "IterationLimit";
        case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
        case ErrorCode::ConditionViolated: return "ConditionViolated";
        case ErrorCode::BadKind: return "BadKind";
        case ErrorCode::NotEpsilonLoss: return "NotEpsilonLoss";
        case ErrorCode::InnerSolveFailed: return "InnerSolveFailed";
        case ErrorCode::LineSearchFailed: return "LineSearchFailed";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

DenseSpd::DenseSpd(Mat a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "DenseSpd requires a square matrix");
    }
    llt_.compute(a_);
    if (llt_.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "Cholesky factorization failed");
    }
    // LLT only looks at the lower triangle; reject factors with non-positive pivots.
    const Mat& l = llt_.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) {
            throw Error(ErrorCode::NotPositiveDefinite, "non-positive Cholesky pivot");
        }
    }
}

Mat chol_solve(const DenseSpd& a, const Mat& rhs) {
    if (rhs.rows() != a.size()) {
        throw Error(ErrorCode::DimensionMismatch, "chol_solve: rhs rows do not match");
    }
    return a.solve(rhs);
}

Vec chol_solve(const DenseSpd& a, const Vec& rhs) {
    if (rhs.size() != a.size()) {
        throw Error(ErrorCode::DimensionMismatch, "chol_solve: rhs size does not match");
    }
    return a.solve(rhs);
}

BlockTridiagonal::BlockTridiagonal(Eigen::Index blocks, Eigen::Index block_size)
    : diag(static_cast<std::size_t>(blocks), Mat::Zero(block_size, block_size)),
      sub(static_cast<std::size_t>(blocks > 0 ? blocks - 1 : 0), Mat::Zero(block_size, block_size)) {}

Mat BlockTridiagonal::to_dense() const {
    const Eigen::Index n = block_size();
    const Eigen::Index nb = blocks();
    Mat out = Mat::Zero(nb * n, nb * n);
    for (Eigen::Index k = 0; k < nb; ++k) {
        out.block(k * n, k * n, n, n) = diag[k];
        if (k + 1 < nb) {
            out.block((k + 1) * n, k * n, n, n) = sub[k];
            out.block(k * n, (k + 1) * n, n, n) = sub[k].transpose();
        }
    }
    return out;
}

Vec BlockTridiagonal::multiply(const Vec& x) const {
    const Eigen::Index n = block_size();
    const Eigen::Index nb = blocks();
    Vec out = Vec::Zero(nb * n);
    for (Eigen::Index k = 0; k < nb; ++k) {
        out.segment(k * n, n) += diag[k] * x.segment(k * n, n);
        if (k + 1 < nb) {
            out.segment((k + 1) * n, n) += sub[k] * x.segment(k * n, n);
            out.segment(k * n, n) += sub[k].transpose() * x.segment((k + 1) * n, n);
        }
    }
    return out;
}

Vec block_tridiag_solve(const BlockTridiagonal& omega, const Vec& rhs) {
    const Eigen::Index nb = omega.blocks();
    const Eigen::Index n = omega.block_size();
    if (rhs.size() != nb * n || static_cast<Eigen::Index>(omega.sub.size()) != std::max<Eigen::Index>(nb - 1, 0)) {
        throw Error(ErrorCode::DimensionMismatch, "block_tridiag_solve: inconsistent sizes");
    }
    if (nb == 0) return Vec();

    // Schur complements S_k = D_k - E_{k-1} S_{k-1}^{-1} E_{k-1}^T, factored as we go.
    std::vector<Eigen::LLT<Mat>> pivots(static_cast<std::size_t>(nb));
    Vec y = rhs;
    Mat schur = omega.diag[0];
    for (Eigen::Index k = 0; k < nb; ++k) {
        auto& llt = pivots[k];
        llt.compute(schur);
        if (llt.info() != Eigen::Success) {
            throw Error(ErrorCode::NotPositiveDefinite,
                        "pivot block " + std::to_string(k) + " is not positive definite");
        }
        if (k + 1 < nb) {
            const Mat& e = omega.sub[k];
            // W = S_k^{-1} E_k^T
            Mat w = llt.solve(e.transpose());
            schur = omega.diag[k + 1] - e * w;
            y.segment((k + 1) * n, n) -= w.transpose() * y.segment(k * n, n);
        }
    }

    Vec x(nb * n);
    x.segment((nb - 1) * n, n) = pivots[nb - 1].solve(y.segment((nb - 1) * n, n));
    for (Eigen::Index k = nb - 2; k >= 0; --k) {
        Vec t = y.segment(k * n, n) - omega.sub[k].transpose() * x.segment((k + 1) * n, n);
        x.segment(k * n, n) = pivots[k].solve(t);
    }
    return x;
}

Eigen::Index rank_check(const Mat& a, double rel_tol) {
    if (a.size() == 0) return 0;
    Eigen::BDCSVD<Mat> svd(a);
    const Vec& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rel_tol * s(0)) ++r;
    }
    return r;
}

SymmetricRoots symmetric_roots(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(a);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "eigendecomposition failed");
    }
    const Vec& lam = eig.eigenvalues();
    if (lam.size() > 0 && !(lam.minCoeff() > 0.0)) {
        throw Error(ErrorCode::NotPositiveDefinite, "matrix is not positive definite");
    }
    const Mat& v = eig.eigenvectors();
    SymmetricRoots out;
    out.sqrt = v * lam.cwiseSqrt().asDiagonal() * v.transpose();
    out.inv_sqrt = v * lam.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
    out.log_det = lam.array().log().sum();
    return out;
}

Mat block_diagonal(const std::vector<Mat>& blocks) {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Mat out = Mat::Zero(rows, cols);
    Eigen::Index r = 0;
    Eigen::Index c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

}  // namespace plq
