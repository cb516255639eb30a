#pragma once

#include "plq/penalty.hpp"

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace plq {

/// Iterate (s, q, u, y) of the primal-dual method.
struct KktState {
    Vec s;  // slacks, ell
    Vec q;  // multipliers, ell
    Vec u;  // dual, m
    Vec y;  // primal, n
    double gamma = 0.0;

    double duality_measure() const { return s.size() == 0 ? 0.0 : s.dot(q) / static_cast<double>(s.size()); }
};

/// The four blocks of the relaxed KKT map F_gamma:
///   r1 = s + A^T u - a
///   r2 = D(q) D(s) 1 - gamma 1
///   r3 = B y - M u - A q + b
///   r4 = B^T u
struct KktResidual {
    Vec r1, r2, r3, r4;

    double affine_norm() const;  // max of |r1|, |r3|, |r4|
    Vec stacked() const;
};

struct Direction {
    Vec ds, dq, du, dy;
};

/// Linear-algebra backend of the path-following method. Implementations
/// provide the operators of the KKT map and the reduced Newton solve; the
/// iteration itself is shared.
class KktSystem {
public:
    virtual ~KktSystem() = default;

    virtual Eigen::Index ell() const = 0;
    virtual Eigen::Index dual_dim() const = 0;
    virtual Eigen::Index primal_dim() const = 0;

    virtual const Vec& a() const = 0;
    virtual const Vec& b() const = 0;
    virtual Vec apply_A(const Vec& q) const = 0;
    virtual Vec apply_At(const Vec& u) const = 0;
    virtual Vec apply_M(const Vec& u) const = 0;
    virtual Vec apply_B(const Vec& y) const = 0;
    virtual Vec apply_Bt(const Vec& u) const = 0;

    /// Solves  B dy - T du = -rt3,  B^T du = -r4  with T = M + A D(d) A^T.
    virtual std::pair<Vec, Vec> solve_reduced(const Vec& d, const Vec& rt3, const Vec& r4) = 0;
};

KktResidual kkt_residual(const KktSystem& sys, const KktState& st, double gamma);

/// Newton direction for F_gamma via elimination of (s, q) and the reduced
/// system in (u, y).
Direction newton_step(KktSystem& sys, const KktState& st, double gamma);

/// F_gamma'(st) * dir + F_gamma(st), for verifying directions.
KktResidual linearized_residual(const KktSystem& sys, const KktState& st, const Direction& dir,
                                double gamma);

struct SolveOptions {
    double sigma = 0.1;
    double fraction_to_boundary = 0.995;
    int max_iterations = 200;
    double gap_tol = 1e-10;       // s^T q / ell
    double feasibility_tol = 1e-8;
    /// Run exactly this many iterations, ignoring the stopping test.
    std::optional<int> fixed_iterations;
    /// Declare divergence when |u| or |y| exceeds this (unbounded problems).
    double divergence_bound = 1e12;
    /// Called after every accepted iterate.
    std::function<void(int, const KktState&)> observer;
};

enum class SolveStatus { converged, iteration_limit, fixed_iterations, diverged };

struct SolveStats {
    int iterations = 0;
    double final_gap = 0.0;            // s^T q
    double final_affine_residual = 0.0;
    double max_complementarity = 0.0;  // max_i s_i q_i
    std::vector<double> gamma_trajectory;
    std::vector<double> gap_trajectory;  // s^T q before each iteration and at the end
    double wall_seconds = 0.0;
    SolveStatus status = SolveStatus::converged;
};

struct PathResult {
    KktState state;
    SolveStats stats;
};

/// Shared path-following loop: gamma = sigma * s^T q / ell, Newton step,
/// fraction-to-boundary step length applied to every block.
PathResult path_following(KktSystem& sys, KktState start, const SolveOptions& opts);

/// Inputs of a two-term problem V(R^{-1/2}(H y - z)) + W(Q^{-1/2}(G y - mu)).
struct Provenance {
    QsPenalty V;
    QsPenalty W;
    Mat H, G, R, Q;
    Vec z, mu;
    Eigen::Index v_rows = 0;  // leading dual coordinates belonging to V
};

/// min_y rho(U, M, b, B; y).
struct PlqProblem {
    QsPenalty objective;
    std::optional<Provenance> provenance;

    Eigen::Index m() const { return objective.m(); }
    Eigen::Index n() const { return objective.n(); }
    Eigen::Index ell() const { return objective.ell(); }
};

/// Wraps a penalty; throws ConditionViolated when check_ip_condition fails.
PlqProblem make_problem(QsPenalty objective);

PlqProblem assemble_problem(const QsPenalty& V, const QsPenalty& W, const Mat& H, const Mat& G, const Mat& R,
                            const Mat& Q, const Vec& z, const Vec& mu);

/// Dense backend: T assembled explicitly (diagonal when U is axis-aligned and
/// M is diagonal), Schur complement B^T T^-1 B factored by Cholesky.
class DenseKktSystem final : public KktSystem {
public:
    explicit DenseKktSystem(const QsPenalty& objective);
    DenseKktSystem(const Polyhedron& U, Mat M, Vec b, Mat B);

    Eigen::Index ell() const override { return poly_.rows(); }
    Eigen::Index dual_dim() const override { return M_.rows(); }
    Eigen::Index primal_dim() const override { return B_.cols(); }
    const Vec& a() const override { return poly_.rhs(); }
    const Vec& b() const override { return b_; }
    Vec apply_A(const Vec& q) const override { return poly_.apply(q); }
    Vec apply_At(const Vec& u) const override { return poly_.apply_transpose(u); }
    Vec apply_M(const Vec& u) const override;
    Vec apply_B(const Vec& y) const override { return B_ * y; }
    Vec apply_Bt(const Vec& u) const override { return B_.transpose() * u; }
    std::pair<Vec, Vec> solve_reduced(const Vec& d, const Vec& rt3, const Vec& r4) override;

    /// T = M + A D(d) A^T, dense.
    Mat assemble_T(const Vec& d) const;

private:
    Polyhedron poly_;
    Mat M_;
    Vec b_;
    Mat B_;
    bool diagonal_T_ = false;
};

enum class InitStrategy { l1_l2, vapnik_huber, generic };

/// Strictly feasible (s, q, u, y): s, q > 0 and the affine KKT equations hold.
KktState init_strictly_feasible(const PlqProblem& p, InitStrategy strategy);

/// Completes (u, y) to a strictly feasible state: s = a - A^T u and q solving
/// A q = b + B y - M u with every q_i >= 1 on two-sided coordinates. Returns
/// nullopt when u is not strictly interior or a one-sided/free coordinate
/// cannot be matched.
std::optional<KktState> complete_state(const Polyhedron& U, const Mat& M, const Vec& b, const Mat& B, const Vec& u,
                                       const Vec& y);

/// q >= 0 with A q = g for axis-aligned U: two-sided coordinates get
/// (1 + g+, 1 - g-), one-sided ones must have g of the right sign, free ones
/// must have |g| <= free_tol.
std::optional<Vec> multipliers_for(const Polyhedron& U, const Vec& g, double free_tol);

struct SolveResult {
    Vec y;
    Vec u;
    KktState state;
    SolveStats stats;
};

/// Throws IterationLimit / NumericalBreakdown / NoInteriorFound.
SolveResult solve(const PlqProblem& p, const SolveOptions& opts = {},
                  InitStrategy strategy = InitStrategy::generic);
SolveResult solve_from(const PlqProblem& p, const KktState& start, const SolveOptions& opts = {});

double objective_value(const PlqProblem& p, const Vec& y);

/// <u, b + B y> - 1/2 u^T M u, the Lagrangian lower bound paired with y.
double dual_value(const PlqProblem& p, const Vec& y, const Vec& u);

/// Residuals of the unrelaxed KKT system at a final state (gamma = 0),
/// including max_i s_i q_i and sign violations.
struct KktCertificate {
    double primal_slack = 0.0;       // |s + A^T u - a|
    double stationarity = 0.0;       // |b + B y - M u - A q|
    double dual_balance = 0.0;       // |B^T u|
    double complementarity = 0.0;    // max s_i q_i
    double sign_violation = 0.0;     // max(-min s, -min q, 0)

    double worst() const;
};

KktCertificate kkt_certificate(const KktSystem& sys, const KktState& st);

namespace detail {
/// sup_{u in U} <u, c> - 1/2 u^T M u by the interior-point solver; +inf when
/// the iterates diverge.
double maximize_dual(const Polyhedron& U, const Mat& M, const Vec& c, double gap_tol);
}  // namespace detail

}  // namespace plq
