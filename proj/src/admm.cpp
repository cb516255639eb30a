#include "plq/admm.hpp"

#include "plq/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace plq {

double huber_sum(const Vec& r, double kappa) {
    double total = 0.0;
    for (double t : r) {
        const double a = std::abs(t);
        total += a <= kappa ? 0.5 * t * t : kappa * a - 0.5 * kappa * kappa;
    }
    return total;
}

double huber_fit(const Mat& A, const Vec& b, double kappa, const Vec& x, Vec& grad) {
    const Vec r = A * x - b;
    grad = A.transpose() * r.unaryExpr([kappa](double t) { return std::clamp(t, -kappa, kappa); });
    return huber_sum(r, kappa);
}

namespace {

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_params(const AdmmOptions& opts, double lambda) {
    if (!(opts.eta > 0.0) || opts.max_iterations < 1 || opts.inner_cap < 1) {
        throw Error(ErrorCode::BadParameter, "ADMM needs eta > 0 and positive caps");
    }
    if (!(lambda >= 0.0)) throw Error(ErrorCode::BadParameter, "lambda must be nonnegative");
}

// Lasso iterations on (x, z, y) with a prefactored A^T A + eta I.
struct LassoState {
    Vec x, z, y;
};

int lasso_iterate(const Eigen::LLT<Mat>& chol, const Vec& Atb, double lambda, double eta, int cap, double tol,
                  LassoState& st, AdmmTrace* trace) {
    int it = 0;
    while (it < cap) {
        st.x = chol.solve(Atb + eta * (st.z + st.y));
        const Vec z_old = st.z;
        st.z = soft_threshold(st.x - st.y, lambda / eta);
        st.y += st.z - st.x;
        ++it;
        const double r = (st.x - st.z).norm();
        const double s = eta * (st.z - z_old).norm();
        if (trace) {
            trace->primal_residual.push_back(r);
            trace->dual_residual.push_back(s);
        }
        if (r <= tol && s <= tol) {
            if (trace) trace->converged = true;
            break;
        }
    }
    return it;
}

Eigen::LLT<Mat> factor_gram(const Mat& A, double eta) {
    Mat K = A.transpose() * A;
    K.diagonal().array() += eta;
    Eigen::LLT<Mat> chol(K);
    if (chol.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "A^T A + eta I");
    return chol;
}

}  // namespace

Vec soft_threshold(const Vec& v, double t) {
    if (!(t >= 0.0)) throw Error(ErrorCode::BadParameter, "threshold must be nonnegative");
    return v.unaryExpr([t](double x) { return std::copysign(std::max(std::abs(x) - t, 0.0), x); });
}

double lasso_objective(const Mat& A, const Vec& b, double lambda, const Vec& x) {
    return 0.5 * (A * x - b).squaredNorm() + lambda * x.lpNorm<1>();
}

AdmmLassoResult admm_lasso(const Mat& A, const Vec& b, double lambda, const AdmmOptions& opts) {
    check_params(opts, lambda);
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::Index n = A.cols();
    const auto chol = factor_gram(A, opts.eta);
    const Vec Atb = A.transpose() * b;
    LassoState st{Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)};
    AdmmLassoResult out;
    out.trace.iterations = lasso_iterate(chol, Atb, lambda, opts.eta, opts.max_iterations, opts.tol, st, &out.trace);
    out.x = std::move(st.z);
    out.trace.objective = lasso_objective(A, b, lambda, out.x);
    out.trace.seconds = elapsed(t0);
    return out;
}

double svm_objective(const Mat& A, const Vec& labels, double lambda, const Vec& w, double gamma) {
    const Vec margin = labels.cwiseProduct(A * w - Vec::Constant(A.rows(), gamma));
    return 0.5 * w.squaredNorm() + lambda * (1.0 - margin.array()).max(0.0).sum();
}

AdmmSvmResult admm_svm(const Mat& A, const Vec& labels, double lambda, const AdmmOptions& opts) {
    check_params(opts, lambda);
    if (labels.size() != A.rows()) throw Error(ErrorCode::DimensionMismatch, "one label per row");
    for (double d : labels) {
        if (d != 1.0 && d != -1.0) throw Error(ErrorCode::BadParameter, "labels must be +-1");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    const double eta = opts.eta;

    // C = D [A, -1], theta = (w, gamma)
    Mat C(m, n + 1);
    C.leftCols(n) = labels.asDiagonal() * A;
    C.col(n) = -labels;
    Mat K = eta * C.transpose() * C;
    K.diagonal().head(n).array() += 1.0;
    Eigen::LLT<Mat> chol(K);
    if (chol.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "E + eta C^T C");

    const double t = lambda / eta;
    auto hinge_prox = [t](double w) { return w > t ? w - t : (w < 0.0 ? w : 0.0); };
    const Vec ones = Vec::Ones(m);
    Vec theta = Vec::Zero(n + 1);
    Vec v = Vec::Zero(m);
    Vec y = Vec::Zero(m);
    AdmmSvmResult out;
    for (int it = 0; it < opts.max_iterations; ++it) {
        theta = chol.solve(eta * C.transpose() * (ones - v + y));
        const Vec ct = C * theta;
        const Vec v_old = v;
        v = (ones - ct + y).unaryExpr(hinge_prox);
        y += ones - ct - v;
        ++out.trace.iterations;
        const double r = (ones - ct - v).norm();
        const double s = eta * (C.transpose() * (v - v_old)).norm();
        out.trace.primal_residual.push_back(r);
        out.trace.dual_residual.push_back(s);
        if (r <= opts.tol && s <= opts.tol) {
            out.trace.converged = true;
            break;
        }
    }
    out.w = theta.head(n);
    out.gamma = theta(n);
    out.trace.objective = svm_objective(A, labels, lambda, out.w, out.gamma);
    out.trace.seconds = elapsed(t0);
    return out;
}

double robust_lasso_objective(const Mat& A, const Vec& b, double lambda, RobustLoss loss, double kappa, const Vec& x) {
    const Vec r = A * x - b;
    const double fit = loss == RobustLoss::l1 ? r.lpNorm<1>() : huber_sum(r, kappa);
    return fit + lambda * x.lpNorm<1>();
}

AdmmRobustResult admm_robust_lasso(const Mat& A, const Vec& b, double lambda, RobustLoss loss, double kappa,
                                   RobustVariant variant, const AdmmOptions& opts) {
    check_params(opts, lambda);
    if (loss == RobustLoss::huber && !(kappa > 0.0)) throw Error(ErrorCode::BadParameter, "kappa must be positive");
    if (variant == RobustVariant::smooth_x && loss != RobustLoss::huber) {
        throw Error(ErrorCode::BadParameter, "smooth_x needs a differentiable loss");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    const double eta = opts.eta;
    AdmmRobustResult out;

    if (variant == RobustVariant::split_residual) {
        // z = A x - b; x-update is a Lasso with data b + z + y and weight lambda / eta.
        const auto chol = factor_gram(A, 1.0);
        LassoState inner{Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)};
        Vec z = Vec::Zero(m);
        Vec y = Vec::Zero(m);
        const double t = 1.0 / eta;
        auto prox = [&](double v) {
            if (loss == RobustLoss::l1) return std::copysign(std::max(std::abs(v) - t, 0.0), v);
            return std::abs(v) <= kappa * (1.0 + t) ? v / (1.0 + t) : v - std::copysign(kappa * t, v);
        };
        for (int it = 0; it < opts.max_iterations; ++it) {
            const Vec Atc = A.transpose() * (b + z + y);
            out.inner_iterations += lasso_iterate(chol, Atc, lambda / eta, 1.0, opts.inner_cap, 0.1 * opts.tol, inner,
                                                  nullptr);
            const Vec Ax = A * inner.z;
            const Vec z_old = z;
            z = (Ax - b - y).unaryExpr(prox);
            y += z - Ax + b;
            ++out.trace.iterations;
            const double r = (z - Ax + b).norm();
            const double s = eta * (A.transpose() * (z - z_old)).norm();
            out.trace.primal_residual.push_back(r);
            out.trace.dual_residual.push_back(s);
            if (r <= opts.tol && s <= opts.tol) {
                out.trace.converged = true;
                break;
            }
        }
        out.x = inner.z;
    } else {
        // x = argmin huber(Ax - b) + eta/2 ||x - z - y||^2, then Lasso-style z, y.
        Vec x = Vec::Zero(n);
        Vec z = Vec::Zero(n);
        Vec y = Vec::Zero(n);
        LbfgsOptions lo;
        lo.max_iterations = opts.inner_cap;
        for (int it = 0; it < opts.max_iterations; ++it) {
            const Vec center = z + y;
            Objective f = [&](const Vec& xx, Vec& g) {
                const double fit = huber_fit(A, b, kappa, xx, g);
                g += eta * (xx - center);
                return fit + 0.5 * eta * (xx - center).squaredNorm();
            };
            LbfgsResult inner;
            try {
                inner = lbfgs_minimize(f, x, lo);
            } catch (const Error& e) {
                throw Error(ErrorCode::InnerSolveFailed, e.what());
            }
            out.inner_iterations += inner.iterations;
            x = std::move(inner.x);
            const Vec z_old = z;
            z = soft_threshold(x - y, lambda / eta);
            y += z - x;
            ++out.trace.iterations;
            const double r = (x - z).norm();
            const double s = eta * (z - z_old).norm();
            out.trace.primal_residual.push_back(r);
            out.trace.dual_residual.push_back(s);
            if (r <= opts.tol && s <= opts.tol) {
                out.trace.converged = true;
                break;
            }
        }
        out.x = std::move(z);
    }
    out.trace.objective = robust_lasso_objective(A, b, lambda, loss, kappa, out.x);
    out.trace.seconds = elapsed(t0);
    return out;
}

}  // namespace plq
