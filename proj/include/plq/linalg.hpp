#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <vector>

namespace plq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symmetric positive-definite matrix together with its Cholesky factor.
class DenseSpd {
public:
    /// Throws NotPositiveDefinite if the factorization fails.
    explicit DenseSpd(Mat a);

    Eigen::Index size() const { return a_.rows(); }
    const Mat& matrix() const { return a_; }
    const Eigen::LLT<Mat>& factor() const { return llt_; }

    Mat solve(const Mat& rhs) const { return llt_.solve(rhs); }
    Vec solve(const Vec& rhs) const { return llt_.solve(rhs); }

private:
    Mat a_;
    Eigen::LLT<Mat> llt_;
};

Mat chol_solve(const DenseSpd& a, const Mat& rhs);
Vec chol_solve(const DenseSpd& a, const Vec& rhs);

/// Symmetric block-tridiagonal matrix with N square blocks of size n.
/// Only the diagonal and the sub-diagonal blocks (block (k+1, k)) are stored;
/// the super-diagonal is implied by symmetry.
struct BlockTridiagonal {
    std::vector<Mat> diag;
    std::vector<Mat> sub;

    BlockTridiagonal() = default;
    BlockTridiagonal(Eigen::Index blocks, Eigen::Index block_size);

    Eigen::Index blocks() const { return static_cast<Eigen::Index>(diag.size()); }
    Eigen::Index block_size() const { return diag.empty() ? 0 : diag.front().rows(); }
    Eigen::Index size() const { return blocks() * block_size(); }

    Mat to_dense() const;
    Vec multiply(const Vec& x) const;
};

/// Forward block elimination + back substitution in O(N n^3).
/// Throws NotPositiveDefinite when a pivot block fails Cholesky.
Vec block_tridiag_solve(const BlockTridiagonal& omega, const Vec& rhs);

/// Number of singular values strictly greater than rel_tol * sigma_max.
Eigen::Index rank_check(const Mat& a, double rel_tol);

/// Symmetric square root and inverse square root of an SPD matrix.
struct SymmetricRoots {
    Mat sqrt;
    Mat inv_sqrt;
    double log_det = 0.0;
};
SymmetricRoots symmetric_roots(const Mat& a);

/// Block-diagonal matrix assembled from a list of blocks.
Mat block_diagonal(const std::vector<Mat>& blocks);

}  // namespace plq
