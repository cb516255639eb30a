#pragma once

#include "plq/lbfgs.hpp"
#include "plq/linalg.hpp"

#include <vector>

namespace plq {

struct AdmmOptions {
    double eta = 1.0;
    int max_iterations = 5000;
    int inner_cap = 20;  // nested solver cap (split_residual x-update)
    double tol = 1e-6;   // on ||primal residual|| and ||dual residual||
};

struct AdmmTrace {
    int iterations = 0;
    std::vector<double> primal_residual;
    std::vector<double> dual_residual;
    double objective = 0.0;
    bool converged = false;
    double seconds = 0.0;
};

Vec soft_threshold(const Vec& v, double t);

/// sum_i huber_kappa(r_i)
double huber_sum(const Vec& r, double kappa);
/// huber_sum(A x - b) and its gradient A^T clamp(A x - b, -kappa, kappa).
double huber_fit(const Mat& A, const Vec& b, double kappa, const Vec& x, Vec& grad);

/// 1/2 ||A x - b||^2 + lambda ||x||_1
double lasso_objective(const Mat& A, const Vec& b, double lambda, const Vec& x);

struct AdmmLassoResult {
    Vec x;  // the sparse (z) iterate
    AdmmTrace trace;
};

AdmmLassoResult admm_lasso(const Mat& A, const Vec& b, double lambda, const AdmmOptions& opts = {});

/// 1/2 ||w||^2 + lambda sum_i (1 - d_i (a_i^T w - gamma))_+
double svm_objective(const Mat& A, const Vec& labels, double lambda, const Vec& w, double gamma);

struct AdmmSvmResult {
    Vec w;
    double gamma = 0.0;
    AdmmTrace trace;
};

AdmmSvmResult admm_svm(const Mat& A, const Vec& labels, double lambda, const AdmmOptions& opts = {});

enum class RobustLoss { l1, huber };
enum class RobustVariant { split_residual, smooth_x };

/// rho(A x - b) + lambda ||x||_1 with rho the l1 norm or Huber(kappa).
double robust_lasso_objective(const Mat& A, const Vec& b, double lambda, RobustLoss loss, double kappa, const Vec& x);

struct AdmmRobustResult {
    Vec x;
    AdmmTrace trace;
    int inner_iterations = 0;  // total nested iterations
};

AdmmRobustResult admm_robust_lasso(const Mat& A, const Vec& b, double lambda, RobustLoss loss, double kappa,
                                   RobustVariant variant, const AdmmOptions& opts = {});

}  // namespace plq
