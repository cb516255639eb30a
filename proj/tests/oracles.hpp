#pragma once

// Independent reference computations used by the tests. Nothing in here
// calls into the solver code paths it is used to check.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                          double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// adaptive Simpson on [a, b]
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50);
}

// integral over [-T, T] split into panels so kinks do not slow things down
inline double simpson_line(const std::function<double(double)>& f, double T, int panels = 64, double tol = 1e-13) {
    double s = 0.0;
    const double h = 2.0 * T / panels;
    for (int i = 0; i < panels; ++i) s += simpson(f, -T + i * h, -T + (i + 1) * h, tol / panels);
    return s;
}

inline Vec central_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        g(i) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

// Full Newton system of the relaxed KKT map in (s, q, u, y), solved densely.
struct KktDirection {
    Vec ds, dq, du, dy;
};

inline KktDirection dense_newton(const Mat& A, const Vec& a, const Mat& M, const Vec& b, const Mat& B, const Vec& s,
                                 const Vec& q, const Vec& u, const Vec& y, double gamma) {
    const Eigen::Index l = a.size(), m = M.rows(), n = B.cols();
    const Eigen::Index N = 2 * l + m + n;
    Mat J = Mat::Zero(N, N);
    Vec F(N);
    // rows: r1 (l), r2 (l), r3 (m), r4 (n); columns: s, q, u, y
    J.block(0, 0, l, l).setIdentity();
    J.block(0, 2 * l, l, m) = A.transpose();
    J.block(l, 0, l, l) = q.asDiagonal();
    J.block(l, l, l, l) = s.asDiagonal();
    J.block(2 * l, l, m, l) = -A;
    J.block(2 * l, 2 * l, m, m) = -M;
    J.block(2 * l, 2 * l + m, m, n) = B;
    J.block(2 * l + m, 2 * l, n, m) = B.transpose();
    F.segment(0, l) = s + A.transpose() * u - a;
    F.segment(l, l) = s.cwiseProduct(q) - Vec::Constant(l, gamma);
    F.segment(2 * l, m) = B * y - M * u - A * q + b;
    F.segment(2 * l + m, n) = B.transpose() * u;
    const Vec d = J.fullPivLu().solve(-F);
    return {d.segment(0, l), d.segment(l, l), d.segment(2 * l, m), d.segment(2 * l + m, n)};
}

// Nested grid refinement for a 2-D minimum.
inline Eigen::Vector2d grid_min_2d(const std::function<double(double, double)>& f, Eigen::Vector2d lo,
                                   Eigen::Vector2d hi, int points = 41, int rounds = 12) {
    Eigen::Vector2d best = 0.5 * (lo + hi);
    for (int r = 0; r < rounds; ++r) {
        double fbest = f(best(0), best(1));
        const Eigen::Vector2d step = (hi - lo) / (points - 1);
        for (int i = 0; i < points; ++i) {
            for (int j = 0; j < points; ++j) {
                const double x = lo(0) + i * step(0), y = lo(1) + j * step(1);
                const double v = f(x, y);
                if (v < fbest) {
                    fbest = v;
                    best = {x, y};
                }
            }
        }
        lo = best - 2.0 * step;
        hi = best + 2.0 * step;
    }
    return best;
}

// Minimizer of a 1-D convex function from its one-sided derivatives, by
// bisection on the monotone subdifferential.
inline double monotone_zero(const std::function<double(double)>& left, const std::function<double(double)>& right,
                            double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (right(mid) < 0) lo = mid;
        else if (left(mid) > 0) hi = mid;
        else return mid;
    }
    return 0.5 * (lo + hi);
}

// scalar grid minimum on [lo, hi]
inline double grid_min_1d(const std::function<double(double)>& f, double lo, double hi, int points = 201,
                          int rounds = 20) {
    double best = 0.5 * (lo + hi);
    for (int r = 0; r < rounds; ++r) {
        double fbest = f(best);
        const double step = (hi - lo) / (points - 1);
        for (int i = 0; i < points; ++i) {
            const double x = lo + i * step;
            if (f(x) < fbest) {
                fbest = f(x);
                best = x;
            }
        }
        lo = best - 2.0 * step;
        hi = best + 2.0 * step;
    }
    return best;
}

inline Mat random_spd(Eigen::Index n, std::mt19937_64& rng, double shift = 1.0) {
    std::normal_distribution<double> nd;
    Mat X(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) X(i, j) = nd(rng);
    return X * X.transpose() + shift * Mat::Identity(n, n);
}

inline Mat random_mat(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Mat X(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) X(i, j) = nd(rng);
    return X;
}

inline Vec random_vec(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
    return v;
}

// Scalar closed forms, written out again here.
inline double huber(double y, double k) { return std::abs(y) <= k ? 0.5 * y * y : k * std::abs(y) - 0.5 * k * k; }
inline double vapnik(double y, double e) { return std::max(y - e, 0.0) + std::max(-y - e, 0.0); }
inline double hinge(double y, double e) { return std::max(y - e, 0.0); }

}  // namespace oracle
