#include "plq/ip_solver.hpp"

#include "plq/error.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace plq {

namespace {

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double max_step(const Vec& x, const Vec& dx) {
    double step = kInf;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (dx(i) < 0.0) step = std::min(step, -x(i) / dx(i));
    }
    return step;
}

Mat solve_spd_or_throw(const Mat& S, const Mat& rhs, const char* what) {
    Eigen::LLT<Mat> llt(S);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularT, what);
    return llt.solve(rhs);
}

}  // namespace

double KktResidual::affine_norm() const {
    return std::max({inf_norm(r1), inf_norm(r3), inf_norm(r4)});
}

Vec KktResidual::stacked() const {
    Vec out(r1.size() + r2.size() + r3.size() + r4.size());
    out << r1, r2, r3, r4;
    return out;
}

double KktCertificate::worst() const {
    return std::max({primal_slack, stationarity, dual_balance, complementarity, sign_violation});
}

KktResidual kkt_residual(const KktSystem& sys, const KktState& st, double gamma) {
    KktResidual r;
    r.r1 = st.s + sys.apply_At(st.u) - sys.a();
    r.r2 = st.q.cwiseProduct(st.s) - Vec::Constant(st.s.size(), gamma);
    r.r3 = sys.apply_B(st.y) - sys.apply_M(st.u) - sys.apply_A(st.q) + sys.b();
    r.r4 = sys.apply_Bt(st.u);
    return r;
}

Direction newton_step(KktSystem& sys, const KktState& st, double gamma) {
    const KktResidual r = kkt_residual(sys, st, gamma);
    const Vec d = st.q.cwiseQuotient(st.s);
    const Vec rt3 = r.r3 + sys.apply_A((r.r2 - st.q.cwiseProduct(r.r1)).cwiseQuotient(st.s));
    auto [du, dy] = sys.solve_reduced(d, rt3, r.r4);
    Direction dir;
    dir.ds = -r.r1 - sys.apply_At(du);
    dir.dq = (-r.r2 - st.q.cwiseProduct(dir.ds)).cwiseQuotient(st.s);
    dir.du = std::move(du);
    dir.dy = std::move(dy);
    return dir;
}

KktResidual linearized_residual(const KktSystem& sys, const KktState& st, const Direction& dir, double gamma) {
    KktResidual r = kkt_residual(sys, st, gamma);
    r.r1 += dir.ds + sys.apply_At(dir.du);
    r.r2 += st.q.cwiseProduct(dir.ds) + st.s.cwiseProduct(dir.dq);
    r.r3 += sys.apply_B(dir.dy) - sys.apply_M(dir.du) - sys.apply_A(dir.dq);
    r.r4 += sys.apply_Bt(dir.du);
    return r;
}

KktCertificate kkt_certificate(const KktSystem& sys, const KktState& st) {
    const KktResidual r = kkt_residual(sys, st, 0.0);
    KktCertificate c;
    c.primal_slack = inf_norm(r.r1);
    c.stationarity = inf_norm(r.r3);
    c.dual_balance = inf_norm(r.r4);
    c.complementarity = st.s.size() == 0 ? 0.0 : st.s.cwiseProduct(st.q).maxCoeff();
    if (st.s.size() > 0) c.sign_violation = std::max({0.0, -st.s.minCoeff(), -st.q.minCoeff()});
    return c;
}

PathResult path_following(KktSystem& sys, KktState st, const SolveOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::Index ell = sys.ell();
    if (st.s.size() != ell || st.q.size() != ell || st.u.size() != sys.dual_dim() ||
        st.y.size() != sys.primal_dim()) {
        throw Error(ErrorCode::DimensionMismatch, "starting point has the wrong dimensions");
    }
    if (ell > 0 && !(st.s.minCoeff() > 0.0 && st.q.minCoeff() > 0.0)) {
        throw Error(ErrorCode::NoInteriorFound, "starting point is not strictly positive in (s, q)");
    }

    PathResult out;
    SolveStats& stats = out.stats;
    const int cap = opts.fixed_iterations ? *opts.fixed_iterations : opts.max_iterations;

    if (ell == 0) {
        // Pure equality system: Newton on a linear map is exact.
        for (int it = 0; it < 2; ++it) {
            const KktResidual r = kkt_residual(sys, st, 0.0);
            if (it > 0 && r.affine_norm() <= opts.feasibility_tol) break;
            Direction dir = newton_step(sys, st, 0.0);
            st.u += dir.du;
            st.y += dir.dy;
            ++stats.iterations;
            if (opts.observer) opts.observer(stats.iterations, st);
        }
        stats.status = SolveStatus::converged;
    } else {
        stats.status = SolveStatus::iteration_limit;
        for (int it = 0;; ++it) {
            const double gap = st.s.dot(st.q);
            stats.gap_trajectory.push_back(gap);
            const double mu = gap / static_cast<double>(ell);
            if (opts.fixed_iterations) {
                if (it >= cap) {
                    stats.status = SolveStatus::fixed_iterations;
                    break;
                }
            } else {
                const KktResidual r = kkt_residual(sys, st, 0.0);
                if (mu <= opts.gap_tol && r.affine_norm() <= opts.feasibility_tol) {
                    stats.status = SolveStatus::converged;
                    break;
                }
                if (it >= cap) break;
            }

            const double gamma = opts.sigma * mu;
            const Direction dir = newton_step(sys, st, gamma);
            const double reach = std::min(max_step(st.s, dir.ds), max_step(st.q, dir.dq));
            const double alpha = std::min(1.0, opts.fraction_to_boundary * reach);

            st.s += alpha * dir.ds;
            st.q += alpha * dir.dq;
            st.u += alpha * dir.du;
            st.y += alpha * dir.dy;
            st.gamma = gamma;
            stats.gamma_trajectory.push_back(gamma);
            ++stats.iterations;

            const double size = std::max(inf_norm(st.u), inf_norm(st.y));
            if (!std::isfinite(size) || !std::isfinite(st.s.dot(st.q)) || size > opts.divergence_bound) {
                stats.status = SolveStatus::diverged;
                break;
            }
            if (opts.observer) opts.observer(stats.iterations, st);
        }
    }

    const KktResidual r = kkt_residual(sys, st, 0.0);
    stats.final_gap = st.s.dot(st.q);
    stats.final_affine_residual = r.affine_norm();
    stats.max_complementarity = ell == 0 ? 0.0 : st.s.cwiseProduct(st.q).maxCoeff();
    if (ell > 0 && stats.gap_trajectory.size() == static_cast<std::size_t>(stats.iterations)) {
        stats.gap_trajectory.push_back(stats.final_gap);
    }
    stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.state = std::move(st);
    return out;
}

// ---------------------------------------------------------------------------
// Dense backend

DenseKktSystem::DenseKktSystem(const QsPenalty& objective)
    : DenseKktSystem(objective.polyhedron(), objective.M(), objective.b(), objective.B()) {}

DenseKktSystem::DenseKktSystem(const Polyhedron& U, Mat M, Vec b, Mat B)
    : poly_(U), M_(std::move(M)), b_(std::move(b)), B_(std::move(B)) {
    if (M_.rows() != poly_.dim() || b_.size() != M_.rows() || B_.rows() != M_.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "DenseKktSystem: inconsistent dimensions");
    }
    diagonal_T_ = poly_.axis_aligned() && M_.isDiagonal(0.0);
}

Vec DenseKktSystem::apply_M(const Vec& u) const {
    if (diagonal_T_) return M_.diagonal().cwiseProduct(u);
    return M_ * u;
}

Mat DenseKktSystem::assemble_T(const Vec& d) const {
    return M_ + poly_.gram(d);
}

std::pair<Vec, Vec> DenseKktSystem::solve_reduced(const Vec& d, const Vec& rt3, const Vec& r4) {
    const Eigen::Index n = B_.cols();
    Vec du;
    Vec dy(n);
    if (diagonal_T_) {
        const Vec t = M_.diagonal() + poly_.gram_diagonal(d);
        if (t.size() > 0 && !(t.minCoeff() > 0.0)) throw Error(ErrorCode::SingularT, "T has a zero diagonal entry");
        const Vec tinv = t.cwiseInverse();
        if (n > 0) {
            const Mat W = tinv.asDiagonal() * B_;
            const Mat S = B_.transpose() * W;
            dy = solve_spd_or_throw(S, -r4 - W.transpose() * rt3, "Schur complement B^T T^-1 B is singular");
        }
        du = tinv.cwiseProduct(B_ * dy + rt3);
    } else {
        Eigen::LLT<Mat> llt(assemble_T(d));
        if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularT, "T is not positive definite");
        if (n > 0) {
            const Mat W = llt.solve(B_);
            const Mat S = B_.transpose() * W;
            dy = solve_spd_or_throw(S, -r4 - W.transpose() * rt3, "Schur complement B^T T^-1 B is singular");
        }
        du = llt.solve(B_ * dy + rt3);
    }
    return {std::move(du), std::move(dy)};
}

// ---------------------------------------------------------------------------
// Problems

PlqProblem make_problem(QsPenalty objective) {
    if (!check_ip_condition(objective)) {
        throw Error(ErrorCode::ConditionViolated, "null(M) and null(A^T) intersect nontrivially");
    }
    return PlqProblem{std::move(objective), std::nullopt};
}

PlqProblem assemble_problem(const QsPenalty& V, const QsPenalty& W, const Mat& H, const Mat& G, const Mat& R,
                            const Mat& Q, const Vec& z, const Vec& mu) {
    const Eigen::Index n = G.cols();
    if (G.rows() != n || H.cols() != n || R.rows() != H.rows() || R.cols() != H.rows() || Q.rows() != n ||
        Q.cols() != n || z.size() != H.rows() || mu.size() != n || V.n() != H.rows() || W.n() != n) {
        throw Error(ErrorCode::DimensionMismatch, "assemble_problem: inconsistent dimensions");
    }
    if (rank_check(G, 1e-12) != n) throw Error(ErrorCode::SingularG, "G is singular");

    const Mat r_inv_sqrt = symmetric_roots(R).inv_sqrt;
    const Mat q_inv_sqrt = symmetric_roots(Q).inv_sqrt;
    const QsPenalty v_part = compose_affine_unchecked(V, r_inv_sqrt * H, -r_inv_sqrt * z);
    const QsPenalty w_part = compose_affine_unchecked(W, q_inv_sqrt * G, -q_inv_sqrt * mu);
    QsPenalty objective = sum(v_part, w_part);
    if (rank_check(objective.B(), 1e-12) != n) {
        throw Error(ErrorCode::NonInjectiveB, "assembled B is not injective");
    }

    PlqProblem p = make_problem(std::move(objective));
    p.provenance = Provenance{V, W, H, G, R, Q, z, mu, V.m()};
    return p;
}

std::optional<Vec> multipliers_for(const Polyhedron& U, const Vec& g, double free_tol) {
    if (!U.axis_aligned()) return std::nullopt;
    const Eigen::Index m = U.dim();
    std::vector<Eigen::Index> up(static_cast<std::size_t>(m), -1);
    std::vector<Eigen::Index> lo(static_cast<std::size_t>(m), -1);
    for (Eigen::Index j = 0; j < U.rows(); ++j) {
        (U.signs()[j] > 0 ? up : lo)[U.coords()[j]] = j;
    }
    Vec q(U.rows());
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index ju = up[i];
        const Eigen::Index jl = lo[i];
        if (ju >= 0 && jl >= 0) {
            q(ju) = 1.0 + std::max(g(i), 0.0);
            q(jl) = 1.0 - std::min(g(i), 0.0);
        } else if (ju >= 0) {
            if (!(g(i) > 0.0)) return std::nullopt;
            q(ju) = g(i);
        } else if (jl >= 0) {
            if (!(g(i) < 0.0)) return std::nullopt;
            q(jl) = -g(i);
        } else if (std::abs(g(i)) > free_tol) {
            return std::nullopt;
        }
    }
    return q;
}

std::optional<KktState> complete_state(const Polyhedron& U, const Mat& M, const Vec& b, const Mat& B, const Vec& u,
                                       const Vec& y) {
    if (!U.axis_aligned()) return std::nullopt;
    const double scale = 1.0 + inf_norm(b) + inf_norm(u) * (1.0 + B.cwiseAbs().maxCoeff());
    if (inf_norm(B.transpose() * u) > 1e-10 * scale) return std::nullopt;

    KktState st;
    st.u = u;
    st.y = y;
    st.s = U.rhs() - U.apply_transpose(u);
    if (st.s.size() > 0 && !(st.s.minCoeff() > 0.0)) return std::nullopt;
    auto q = multipliers_for(U, b + B * y - M * u, 1e-10 * scale);
    if (!q) return std::nullopt;
    st.q = std::move(*q);
    return st;
}

namespace {

std::vector<Eigen::Index> free_coordinates(const Polyhedron& U) {
    std::vector<bool> bounded(static_cast<std::size_t>(U.dim()), false);
    for (Eigen::Index c : U.coords()) bounded[c] = true;
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < U.dim(); ++i) {
        if (!bounded[i]) out.push_back(i);
    }
    return out;
}

// y making the free rows of b + B y - M u vanish (minimum-norm least squares).
Vec primal_for_free_rows(const QsPenalty& rho, const Vec& u) {
    const auto free = free_coordinates(rho.polyhedron());
    if (free.empty()) return Vec::Zero(rho.n());
    Mat BF(static_cast<Eigen::Index>(free.size()), rho.n());
    Vec rhs(static_cast<Eigen::Index>(free.size()));
    const Vec Mu = rho.M() * u;
    for (std::size_t k = 0; k < free.size(); ++k) {
        BF.row(static_cast<Eigen::Index>(k)) = rho.B().row(free[k]);
        rhs(static_cast<Eigen::Index>(k)) = Mu(free[k]) - rho.b()(free[k]);
    }
    return BF.completeOrthogonalDecomposition().solve(rhs);
}


// Closest (u, y) to (u0, 0) satisfying B^T u = 0 and the free rows
// (M u - B y - b)_F = 0, in a diagonal metric where free coordinates and y
// carry the given weight.
std::pair<Vec, Vec> project_affine(const QsPenalty& rho, const Vec& u0, double free_weight) {
    const Eigen::Index m = rho.m(), n = rho.n();
    const auto free = free_coordinates(rho.polyhedron());
    const auto nf = static_cast<Eigen::Index>(free.size());
    Mat C = Mat::Zero(n + nf, m + n);
    Vec d = Vec::Zero(n + nf);
    C.topLeftCorner(n, m) = rho.B().transpose();
    for (Eigen::Index k = 0; k < nf; ++k) {
        C.row(n + k).head(m) = rho.M().row(free[k]);
        C.row(n + k).tail(n) = -rho.B().row(free[k]);
        d(n + k) = rho.b()(free[k]);
    }
    Vec dinv = Vec::Ones(m + n);
    for (Eigen::Index i : free) dinv(i) = 1.0 / free_weight;
    dinv.tail(n).setConstant(1.0 / free_weight);
    const Mat CD = C * dinv.asDiagonal();
    const Eigen::CompleteOrthogonalDecomposition<Mat> cod(CD * C.transpose());
    Vec x = Vec::Zero(m + n);
    x.head(m) = u0;
    for (int pass = 0; pass < 3; ++pass) x -= CD.transpose() * cod.solve(C * x - d);
    return {x.head(m), x.tail(n)};
}
}  // namespace

KktState init_strictly_feasible(const PlqProblem& p, InitStrategy strategy) {
    const QsPenalty& rho = p.objective;
    const auto& U = rho.polyhedron();
    const Eigen::Index m = rho.m();

    auto finish = [&](const Vec& u, const Vec& y) -> std::optional<KktState> {
        return complete_state(U, rho.M(), rho.b(), rho.B(), u, y);
    };

    switch (strategy) {
        case InitStrategy::l1_l2: {
            if (!p.provenance) throw Error(ErrorCode::BadParameter, "l1_l2 start needs an assembled problem");
            const Vec y = p.provenance->G.partialPivLu().solve(p.provenance->mu);
            if (auto st = finish(Vec::Zero(m), y)) return *st;
            throw Error(ErrorCode::NoInteriorFound, "l1_l2 construction does not match the problem structure");
        }
        case InitStrategy::vapnik_huber: {
            if (!p.provenance) throw Error(ErrorCode::BadParameter, "vapnik_huber start needs an assembled problem");
            Vec u = Vec::Zero(m);
            u.head(p.provenance->v_rows).setConstant(0.5);
            if (auto st = finish(u, Vec::Zero(rho.n()))) return *st;
            throw Error(ErrorCode::NoInteriorFound, "vapnik_huber construction does not match the problem structure");
        }
        case InitStrategy::generic:
            break;
    }

    if (!U.axis_aligned()) {
        throw Error(ErrorCode::NoInteriorFound, "generic start needs an interval-product U; supply a point");
    }
    const Vec u0 = rho.intervals() ? rho.intervals()->interior_point() : U.witness();
    if (auto st = finish(u0, primal_for_free_rows(rho, u0))) return *st;
    for (double free_weight : {1e-3, 1.0}) {
        const auto [u, y] = project_affine(rho, u0, free_weight);
        if (auto st = finish(u, y)) return *st;
    }
    throw Error(ErrorCode::NoInteriorFound, "generic initializer found no strictly feasible point");
}

SolveResult solve_from(const PlqProblem& p, const KktState& start, const SolveOptions& opts) {
    DenseKktSystem sys(p.objective);
    PathResult path;
    try {
        path = path_following(sys, start, opts);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SingularT) throw Error(ErrorCode::NumericalBreakdown, e.what());
        throw;
    }
    if (path.stats.status == SolveStatus::iteration_limit) {
        throw Error(ErrorCode::IterationLimit,
                    "no convergence after " + std::to_string(path.stats.iterations) + " iterations");
    }
    if (path.stats.status == SolveStatus::diverged) {
        throw Error(ErrorCode::NumericalBreakdown, "iterates diverged");
    }
    SolveResult out;
    out.y = path.state.y;
    out.u = path.state.u;
    out.state = std::move(path.state);
    out.stats = std::move(path.stats);
    return out;
}

SolveResult solve(const PlqProblem& p, const SolveOptions& opts, InitStrategy strategy) {
    return solve_from(p, init_strictly_feasible(p, strategy), opts);
}

double objective_value(const PlqProblem& p, const Vec& y) { return evaluate(p.objective, y); }

double dual_value(const PlqProblem& p, const Vec& y, const Vec& u) {
    const QsPenalty& rho = p.objective;
    return u.dot(rho.b() + rho.B() * y) - 0.5 * u.dot(rho.M() * u);
}

namespace detail {

double maximize_dual(const Polyhedron& U, const Mat& M, const Vec& c, double gap_tol) {
    const Eigen::Index m = M.rows();
    DenseKktSystem sys(U, M, c, Mat(m, 0));

    KktState st;
    st.u = U.witness();
    st.y = Vec(0);
    st.s = U.rhs() - U.apply_transpose(st.u);
    // Degenerate intervals have no interior; nudge their slacks.
    for (Eigen::Index j = 0; j < st.s.size(); ++j) st.s(j) = std::max(st.s(j), 1e-3);
    st.q = Vec::Ones(U.rows());
    if (U.axis_aligned()) {
        const Vec g = c - M * st.u;
        for (Eigen::Index j = 0; j < U.rows(); ++j) {
            const double gi = U.signs()[j] * g(U.coords()[j]);
            st.q(j) = 1.0 + std::max(gi, 0.0);
        }
    }

    const double scale = 1.0 + inf_norm(c);
    SolveOptions opts;
    opts.gap_tol = gap_tol;
    opts.feasibility_tol = 1e-10 * scale;
    opts.max_iterations = 300;
    opts.divergence_bound = 1e10 * scale;
    PathResult res;
    try {
        res = path_following(sys, st, opts);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SingularT) throw Error(ErrorCode::EvaluationDidNotConverge, e.what());
        throw;
    }
    const Vec& u = res.state.u;
    switch (res.stats.status) {
        case SolveStatus::converged:
        case SolveStatus::fixed_iterations:
            return u.dot(c) - 0.5 * u.dot(M * u);
        case SolveStatus::diverged:
            return kInf;
        case SolveStatus::iteration_limit:
            // The KKT system of a bounded concave QP is always solvable; a
            // persistent affine residual means the supremum is +inf.
            if (res.stats.final_affine_residual > 1e-6 * scale) return kInf;
            break;
    }
    throw Error(ErrorCode::EvaluationDidNotConverge, "dual maximization hit the iteration cap");
}

}  // namespace detail

}  // namespace plq
