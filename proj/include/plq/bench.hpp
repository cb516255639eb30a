#pragma once

#include "plq/admm.hpp"
#include "plq/ip_solver.hpp"
#include "plq/kalman.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace plq {

/// Standard normals from the documented mixture sampler (p = 0, sigma = 1).
Vec gaussian_vector(Eigen::Index count, std::uint64_t seed);

/// U diag(sigma) V^T with sigma log-spaced from 1 to 1/cond and U, V from the
/// QR factors of seeded Gaussian matrices.
Mat gen_matrix(Eigen::Index rows, Eigen::Index cols, double cond, std::uint64_t seed);

double condition_number(const Mat& A);

// PLQ forms of the comparison problems.
PlqProblem lasso_problem(const Mat& A, const Vec& b, double lambda);
PlqProblem robust_lasso_problem(const Mat& A, const Vec& b, double lambda, RobustLoss loss, double kappa);
/// Variables (w, gamma).
PlqProblem svm_problem(const Mat& A, const Vec& labels, double lambda);
/// ||A x - b||_1 + lambda ||C x||_1
PlqProblem l1l1_problem(const Mat& A, const Vec& b, const Mat& C, double lambda);

struct Table1Config {
    std::uint64_t seed = 7;
    Eigen::Index lasso_rows = 150, lasso_cols = 500;
    Eigen::Index svm_rows = 600, svm_cols = 20;
    double svm_cond = 1e4;
    Eigen::Index robust_rows = 100, robust_cols = 400;
    std::vector<double> robust_conds{5.8, 1330.0};
    Eigen::Index l1l1_rows = 300, l1l1_C_rows = 100, l1l1_cols = 200;
    double huber_kappa = 1.0;
    AdmmOptions lasso_admm{1.0, 5000, 1, 1e-6};
    AdmmOptions svm_admm{1.0, 3000, 1, 1e-6};
    AdmmOptions robust_admm{1.0, 300, 100, 1e-6};
    AdmmOptions lbfgs_admm{1.0, 300, 100, 1e-6};
};

struct Table1Row {
    std::string problem;
    std::string variant;
    Eigen::Index rows = 0, cols = 0;
    double cond = 0.0;
    std::optional<int> admm_iterations;
    std::optional<int> admm_inner_cap;
    int ip_iterations = 0;
    std::optional<double> t_admm;
    double t_ip = 0.0;
    std::optional<double> f_admm;
    double f_ip = 0.0;
    std::optional<double> obj_diff;
    double kkt = 0.0;  // worst KKT residual of the IP solution
    std::string error;
};

std::vector<Table1Row> run_table1_suite(const Table1Config& cfg);
std::string table1_csv(const std::vector<Table1Row>& rows);

struct SimData {
    std::vector<double> t, truth, z;
};

/// t_k = k / count, f(t) = exp(sin 8t), z = f + (1-p) N(0, 0.25) + p N(0, 25) noise.
SimData simulate_expsin8(std::size_t count, double p, std::uint64_t seed);

struct CvGrid {
    std::vector<double> lambda2;
    std::vector<double> eps;
    double train_fraction = 0.65;
    std::uint64_t seed = 1;

    /// 10 log-spaced lambda^2 on [0.01, 1e4] and 20 linear eps on [0, 1].
    static CvGrid paper_default(std::uint64_t seed);
};

struct CvPoint {
    double lambda2 = 0.0;
    double eps = 0.0;
    double error = 0.0;  // mean |yhat - z| / (1 + |z|) on validation points
    std::string failure;
};

struct CvResult {
    CvPoint best;
    std::vector<CvPoint> surface;  // canonical order: lambda2 major, eps minor
    std::vector<bool> train;
};

/// Deterministic split: Fisher-Yates with the documented uniform generator.
std::vector<bool> train_mask(std::size_t count, double train_fraction, std::uint64_t seed);

struct SplineFit {
    std::vector<double> prediction;  // estimate of f at every t_k
    SmoothResult result;
};

/// Smoother fit of f - 1 (x0 = 0) on the training points of the data.
SplineFit fit_spline(const SimData& data, const std::vector<bool>& train, double lambda2, const SmootherSpec& spec);

/// Grid search; eps is ignored (single column) unless the measurement loss
/// is eps-insensitive. Grid points run on worker threads.
CvResult cross_validate(const SimData& data, const CvGrid& grid, const SmootherSpec& spec, unsigned threads = 0);
std::string cv_surface_csv(const CvResult& cv);

double rmse(const std::vector<double>& a, const std::vector<double>& b);

struct ScalingRow {
    Eigen::Index N = 0;
    double seconds = 0.0;  // median of the repeats
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    double slope = 0.0;  // least squares on log time vs log N
};

ScalingReport bench_scaling(const std::vector<Eigen::Index>& Ns, const SmootherSpec& spec, int iterations = 20,
                            int repeats = 3, std::uint64_t seed = 11);
std::string scaling_csv(const ScalingReport& r);

/// Shortest text that reads back to the same double.
std::string fmt_double(double x);

}  // namespace plq
