#include "plq/bench.hpp"

#include "plq/density.hpp"
#include "plq/error.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace plq {

std::string fmt_double(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Vec gaussian_vector(Eigen::Index count, std::uint64_t seed) {
    const auto draws = sample_gaussian_mixture(0.0, 1.0, 1.0, static_cast<std::size_t>(count), seed);
    return Eigen::Map<const Vec>(draws.data(), count);
}

namespace {

Mat orthonormal_columns(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    const Mat g = gaussian_vector(rows * cols, seed).reshaped(rows, cols);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ() * Mat::Identity(rows, cols);
    // Fix column signs so the factor does not depend on Householder conventions.
    const Mat r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return q;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

}  // namespace

Mat gen_matrix(Eigen::Index rows, Eigen::Index cols, double cond, std::uint64_t seed) {
    if (!(cond >= 1.0)) throw Error(ErrorCode::BadParameter, "condition target must be >= 1");
    const Eigen::Index r = std::min(rows, cols);
    const Mat U = orthonormal_columns(rows, r, seed);
    const Mat V = orthonormal_columns(cols, r, seed ^ 0x9e3779b97f4a7c15ULL);
    Vec sigma(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        const double frac = r > 1 ? static_cast<double>(i) / static_cast<double>(r - 1) : 0.0;
        sigma(i) = std::pow(cond, -frac);
    }
    return U * sigma.asDiagonal() * V.transpose();
}

double condition_number(const Mat& A) {
    Eigen::BDCSVD<Mat> svd(A);
    const Vec& s = svd.singularValues();
    return s(0) / s(s.size() - 1);
}

// ---------------------------------------------------------------------------

PlqProblem lasso_problem(const Mat& A, const Vec& b, double lambda) {
    const QsPenalty fit = compose_affine_unchecked(make_catalogue(PenaltyKind::l2, {}, A.rows()), A, -b);
    return make_problem(sum(fit, scale(make_catalogue(PenaltyKind::l1, {}, A.cols()), lambda)));
}

PlqProblem robust_lasso_problem(const Mat& A, const Vec& b, double lambda, RobustLoss loss, double kappa) {
    CatalogueParams p;
    p.kappa = kappa;
    const PenaltyKind kind = loss == RobustLoss::l1 ? PenaltyKind::l1 : PenaltyKind::huber;
    const QsPenalty fit = compose_affine_unchecked(make_catalogue(kind, p, A.rows()), A, -b);
    return make_problem(sum(fit, scale(make_catalogue(PenaltyKind::l1, {}, A.cols()), lambda)));
}

PlqProblem svm_problem(const Mat& A, const Vec& labels, double lambda) {
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    Mat pick = Mat::Zero(n, n + 1);
    pick.leftCols(n).setIdentity();
    const QsPenalty reg = compose_affine_unchecked(make_catalogue(PenaltyKind::l2, {}, n), pick, Vec::Zero(n));
    // hinge argument 1 - d_i (a_i^T w - gamma)
    Mat S(m, n + 1);
    S.leftCols(n) = -(labels.asDiagonal() * A);
    S.col(n) = labels;
    const QsPenalty loss = compose_affine_unchecked(make_catalogue(PenaltyKind::hinge, {}, m), S, Vec::Ones(m));
    return make_problem(sum(reg, scale(loss, lambda)));
}

PlqProblem l1l1_problem(const Mat& A, const Vec& b, const Mat& C, double lambda) {
    const QsPenalty fit = compose_affine_unchecked(make_catalogue(PenaltyKind::l1, {}, A.rows()), A, -b);
    const QsPenalty reg =
        compose_affine_unchecked(make_catalogue(PenaltyKind::l1, {}, C.rows()), C, Vec::Zero(C.rows()));
    QsPenalty total = sum(fit, scale(reg, lambda));
    if (rank_check(total.B(), 1e-12) != A.cols()) throw Error(ErrorCode::NonInjectiveB, "[A; C] is not injective");
    return make_problem(std::move(total));
}

namespace {

struct IpRun {
    double f = 0.0;
    int iterations = 0;
    double seconds = 0.0;
    double kkt = 0.0;
    Vec y;
};

IpRun run_ip(const PlqProblem& p) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveResult r = solve(p);
    IpRun out;
    out.seconds = seconds_since(t0);
    out.iterations = r.stats.iterations;
    out.f = objective_value(p, r.y);
    out.y = r.y;
    DenseKktSystem sys(p.objective);
    out.kkt = kkt_certificate(sys, r.state).worst();
    return out;
}

// Sparse ground truth plus Gaussian noise and, optionally, gross outliers.
Vec regression_data(const Mat& A, std::uint64_t seed, bool outliers) {
    const Eigen::Index n = A.cols();
    const Eigen::Index m = A.rows();
    Vec x = Vec::Zero(n);
    const Vec g = gaussian_vector(n + 2 * m, seed);
    for (Eigen::Index i = 0; i < n; i += 10) x(i) = g(i);
    Vec b = A * x + 0.01 * g.segment(n, m);
    if (outliers) {
        for (Eigen::Index i = 0; i < m; i += 10) b(i) += 5.0 * g(n + m + i);
    }
    return b;
}

template <class Admm>
void fill_row(Table1Row& row, const PlqProblem& p, Admm&& admm) {
    try {
        const IpRun ip = run_ip(p);
        row.ip_iterations = ip.iterations;
        row.t_ip = ip.seconds;
        row.f_ip = ip.f;
        row.kkt = ip.kkt;
        admm(row);
        if (row.f_admm) row.obj_diff = *row.f_admm - row.f_ip;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
}

Table1Row make_row(std::string problem, std::string variant, Eigen::Index rows, Eigen::Index cols) {
    Table1Row r;
    r.problem = std::move(problem);
    r.variant = std::move(variant);
    r.rows = rows;
    r.cols = cols;
    return r;
}

}  // namespace

std::vector<Table1Row> run_table1_suite(const Table1Config& cfg) {
    std::vector<Table1Row> rows;
    std::uint64_t seed = cfg.seed;

    {
        Table1Row row = make_row("lasso", "admm", cfg.lasso_rows, cfg.lasso_cols);
        const Mat A = gaussian_vector(cfg.lasso_rows * cfg.lasso_cols, seed++).reshaped(cfg.lasso_rows, cfg.lasso_cols) /
                      std::sqrt(static_cast<double>(cfg.lasso_rows));
        const Vec b = regression_data(A, seed++, false);
        const double lambda = 0.1 * (A.transpose() * b).cwiseAbs().maxCoeff();
        row.cond = condition_number(A);
        fill_row(row, lasso_problem(A, b, lambda), [&](Table1Row& r) {
            const auto res = admm_lasso(A, b, lambda, cfg.lasso_admm);
            r.admm_iterations = res.trace.iterations;
            r.t_admm = res.trace.seconds;
            r.f_admm = res.trace.objective;
        });
        rows.push_back(std::move(row));
    }
    {
        Table1Row row = make_row("svm", "admm", cfg.svm_rows, cfg.svm_cols);
        const Mat A = gen_matrix(cfg.svm_rows, cfg.svm_cols, cfg.svm_cond, seed++);
        const Vec w = gaussian_vector(cfg.svm_cols, seed++);
        const Vec noise = gaussian_vector(cfg.svm_rows, seed++);
        const Vec score = A * w;
        const double spread = std::sqrt(score.squaredNorm() / static_cast<double>(score.size()));
        Vec labels(cfg.svm_rows);
        for (Eigen::Index i = 0; i < labels.size(); ++i) labels(i) = score(i) + 0.3 * spread * noise(i) >= 0.0 ? 1.0 : -1.0;
        const double lambda = 1.0;
        row.cond = condition_number(A);
        fill_row(row, svm_problem(A, labels, lambda), [&](Table1Row& r) {
            const auto res = admm_svm(A, labels, lambda, cfg.svm_admm);
            r.admm_iterations = res.trace.iterations;
            r.t_admm = res.trace.seconds;
            r.f_admm = res.trace.objective;
        });
        rows.push_back(std::move(row));
    }
    struct RobustCase {
        RobustLoss loss;
        RobustVariant variant;
        const char* name;
        const char* variant_name;
    };
    const RobustCase cases[] = {
        {RobustLoss::huber, RobustVariant::split_residual, "huber_lasso", "admm_admm"},
        {RobustLoss::huber, RobustVariant::smooth_x, "huber_lasso", "admm_lbfgs"},
        {RobustLoss::l1, RobustVariant::split_residual, "l1_lasso", "admm_admm"},
    };
    for (const auto& c : cases) {
        for (double cond : cfg.robust_conds) {
            Table1Row row = make_row(c.name, c.variant_name, cfg.robust_rows, cfg.robust_cols);
            const std::uint64_t s = seed + static_cast<std::uint64_t>(cond * 10.0);
            const Mat A = gen_matrix(cfg.robust_rows, cfg.robust_cols, cond, s);
            const Vec b = regression_data(A, s + 1, true);
            const double lambda = 0.1 * (A.transpose() * b).cwiseAbs().maxCoeff();
            row.cond = condition_number(A);
            const AdmmOptions& opts = c.variant == RobustVariant::smooth_x ? cfg.lbfgs_admm : cfg.robust_admm;
            fill_row(row, robust_lasso_problem(A, b, lambda, c.loss, cfg.huber_kappa), [&](Table1Row& r) {
                const auto res = admm_robust_lasso(A, b, lambda, c.loss, cfg.huber_kappa, c.variant, opts);
                r.admm_iterations = res.trace.iterations;
                if (c.variant == RobustVariant::split_residual) r.admm_inner_cap = opts.inner_cap;
                r.t_admm = res.trace.seconds;
                r.f_admm = res.trace.objective;
            });
            rows.push_back(std::move(row));
        }
    }
    {
        Table1Row row = make_row("general_l1_l1", "ip_only", cfg.l1l1_rows + cfg.l1l1_C_rows, cfg.l1l1_cols);
        const Mat A = gen_matrix(cfg.l1l1_rows, cfg.l1l1_cols, 10.0, seed + 101);
        const Mat C = gen_matrix(cfg.l1l1_C_rows, cfg.l1l1_cols, 10.0, seed + 102);
        const Vec b = regression_data(A, seed + 103, true);
        row.cond = condition_number(A);
        fill_row(row, l1l1_problem(A, b, C, 0.5), [](Table1Row&) {});
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string table1_csv(const std::vector<Table1Row>& rows) {
    std::ostringstream out;
    out << "problem,variant,rows,cols,cond,admm_iters,admm_inner,ip_iters,t_admm,t_ip,f_admm,f_ip,obj_diff,ip_kkt,error\n";
    auto opt = [](const auto& v) -> std::string {
        if (!v) return "";
        if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, double>) return fmt_double(*v);
        else return std::to_string(*v);
    };
    for (const auto& r : rows) {
        out << r.problem << ',' << r.variant << ',' << r.rows << ',' << r.cols << ',' << fmt_double(r.cond) << ','
            << opt(r.admm_iterations) << ',' << opt(r.admm_inner_cap) << ',' << r.ip_iterations << ','
            << opt(r.t_admm) << ',' << fmt_double(r.t_ip) << ',' << opt(r.f_admm) << ',' << fmt_double(r.f_ip) << ','
            << opt(r.obj_diff) << ',' << fmt_double(r.kkt) << ',' << '"' << r.error << '"' << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------

SimData simulate_expsin8(std::size_t count, double p, std::uint64_t seed) {
    if (count < 2) throw Error(ErrorCode::BadParameter, "need at least 2 samples");
    const auto noise = sample_gaussian_mixture(p, 0.5, 5.0, count, seed);
    SimData d;
    d.t.resize(count);
    d.truth.resize(count);
    d.z.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        d.t[k] = static_cast<double>(k + 1) / static_cast<double>(count);
        d.truth[k] = std::exp(std::sin(8.0 * d.t[k]));
        d.z[k] = d.truth[k] + noise[k];
    }
    return d;
}

CvGrid CvGrid::paper_default(std::uint64_t seed) {
    CvGrid g;
    for (int i = 0; i < 10; ++i) g.lambda2.push_back(std::pow(10.0, -2.0 + 6.0 * i / 9.0));
    for (int i = 0; i < 20; ++i) g.eps.push_back(i / 19.0);
    g.seed = seed;
    return g;
}

std::vector<bool> train_mask(std::size_t count, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error(ErrorCode::BadFraction, "train fraction");
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 gen(seed);
    for (std::size_t i = count; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform01(gen) * static_cast<double>(i));
        std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(count)));
    std::vector<bool> mask(count, false);
    for (std::size_t i = 0; i < n_train; ++i) mask[idx[i]] = true;
    return mask;
}

SplineFit fit_spline(const SimData& data, const std::vector<bool>& train, double lambda2, const SmootherSpec& spec) {
    const auto N = static_cast<Eigen::Index>(data.z.size());
    StateSpaceModel model = build_spline_model(1.0 / static_cast<double>(N), lambda2, N);
    model.observed = train;
    std::vector<Vec> z(data.z.size(), Vec::Zero(1));
    for (std::size_t k = 0; k < data.z.size(); ++k) z[k](0) = data.z[k] - 1.0;
    SplineFit fit;
    const bool quadratic = spec.process == PenaltyKind::l2 && spec.measurement == PenaltyKind::l2 &&
                           spec.weights == WeightMode::none;
    fit.result = quadratic ? smooth_quadratic(model, z) : smooth_plq(model, z, spec);
    fit.prediction.resize(data.z.size());
    for (std::size_t k = 0; k < data.z.size(); ++k) fit.prediction[k] = fit.result.x[k](1) + 1.0;
    return fit;
}

CvResult cross_validate(const SimData& data, const CvGrid& grid, const SmootherSpec& spec, unsigned threads) {
    if (grid.lambda2.empty()) throw Error(ErrorCode::BadParameter, "empty lambda2 grid");
    const bool uses_eps = spec.measurement == PenaltyKind::vapnik || spec.measurement == PenaltyKind::silf;
    const std::vector<double> eps_values =
        uses_eps ? (grid.eps.empty() ? std::vector<double>{spec.meas_params.eps} : grid.eps)
                 : std::vector<double>{spec.meas_params.eps};

    CvResult out;
    out.train = train_mask(data.z.size(), grid.train_fraction, grid.seed);
    out.surface.resize(grid.lambda2.size() * eps_values.size());
    for (std::size_t i = 0; i < grid.lambda2.size(); ++i) {
        for (std::size_t j = 0; j < eps_values.size(); ++j) {
            out.surface[i * eps_values.size() + j] = CvPoint{grid.lambda2[i], eps_values[j], 0.0, {}};
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t idx; (idx = next.fetch_add(1)) < out.surface.size();) {
            CvPoint& pt = out.surface[idx];
            SmootherSpec s = spec;
            s.meas_params.eps = pt.eps;
            try {
                const SplineFit fit = fit_spline(data, out.train, pt.lambda2, s);
                double total = 0.0;
                std::size_t count = 0;
                for (std::size_t k = 0; k < data.z.size(); ++k) {
                    if (out.train[k]) continue;
                    total += std::abs(fit.prediction[k] - data.z[k]) / (1.0 + std::abs(data.z[k]));
                    ++count;
                }
                pt.error = count ? total / static_cast<double>(count) : 0.0;
            } catch (const std::exception& e) {
                pt.error = kInf;
                pt.failure = e.what();
            }
        }
    };
    const unsigned n_threads =
        std::max(1u, std::min<unsigned>(threads ? threads : std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(out.surface.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    out.best = out.surface.front();
    for (const auto& pt : out.surface) {
        if (pt.error < out.best.error) out.best = pt;
    }
    if (!std::isfinite(out.best.error)) throw Error(ErrorCode::NumericalBreakdown, "every grid point failed");
    return out;
}

std::string cv_surface_csv(const CvResult& cv) {
    std::ostringstream out;
    out << "lambda2,eps,rel_abs_error\n";
    for (const auto& p : cv.surface) {
        out << fmt_double(p.lambda2) << ',' << fmt_double(p.eps) << ',' << fmt_double(p.error) << '\n';
    }
    return out.str();
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) throw Error(ErrorCode::DimensionMismatch, "rmse sizes");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

// ---------------------------------------------------------------------------

ScalingReport bench_scaling(const std::vector<Eigen::Index>& Ns, const SmootherSpec& spec, int iterations,
                            int repeats, std::uint64_t seed) {
    if (Ns.size() < 4) throw Error(ErrorCode::BadParameter, "need at least 4 values of N");
    if (iterations < 1 || repeats < 1) throw Error(ErrorCode::BadParameter, "iterations and repeats must be >= 1");
    ScalingReport rep;
    for (Eigen::Index N : Ns) {
        const SimData data = simulate_expsin8(static_cast<std::size_t>(N), 0.1, seed);
        const StateSpaceModel model = build_spline_model(1.0 / static_cast<double>(N), 100.0, N);
        std::vector<Vec> z(data.z.size(), Vec::Zero(1));
        for (std::size_t k = 0; k < data.z.size(); ++k) z[k](0) = data.z[k] - 1.0;
        SmoothOptions opts;
        opts.solve.fixed_iterations = iterations;
        std::vector<double> times;
        for (int r = 0; r < repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            (void)smooth_plq(model, z, spec, opts);
            times.push_back(seconds_since(t0));
        }
        std::sort(times.begin(), times.end());
        rep.rows.push_back({N, times[times.size() / 2]});
    }
    // slope of log t on log N
    double mx = 0.0, my = 0.0;
    for (const auto& r : rep.rows) {
        mx += std::log(static_cast<double>(r.N));
        my += std::log(r.seconds);
    }
    mx /= static_cast<double>(rep.rows.size());
    my /= static_cast<double>(rep.rows.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& r : rep.rows) {
        const double dx = std::log(static_cast<double>(r.N)) - mx;
        sxy += dx * (std::log(r.seconds) - my);
        sxx += dx * dx;
    }
    rep.slope = sxy / sxx;
    return rep;
}

std::string scaling_csv(const ScalingReport& r) {
    std::ostringstream out;
    out << "N,seconds\n";
    for (const auto& row : r.rows) out << row.N << ',' << fmt_double(row.seconds) << '\n';
    out << "# slope," << fmt_double(r.slope) << '\n';
    return out.str();
}

}  // namespace plq
