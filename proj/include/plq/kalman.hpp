#pragma once

#include "plq/ip_solver.hpp"

#include <functional>
#include <vector>

namespace plq {

/// x_k = G_k x_{k-1} + w_k (x_0 known, G_1 = I), z_k = H_k x_k + v_k.
struct StateSpaceModel {
    Eigen::Index N = 0;
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    std::vector<Mat> G;  // N entries, G[0] ignored
    std::vector<Mat> H;
    std::vector<Mat> Q;
    std::vector<Mat> R;
    Vec x0;
    /// Empty means every step is observed. Unobserved steps drop their
    /// measurement term.
    std::vector<bool> observed;

    bool is_observed(Eigen::Index k) const { return observed.empty() || observed[static_cast<std::size_t>(k)]; }
    void validate() const;
};

enum class WeightMode { none, standardized };

struct SmootherSpec {
    PenaltyKind process = PenaltyKind::l2;
    CatalogueParams process_params;
    PenaltyKind measurement = PenaltyKind::l2;
    CatalogueParams meas_params;
    WeightMode weights = WeightMode::none;
};

/// c2 of the density built from the kind: sqrt 2 for l1, 1 for l2.
double statistical_weight(PenaltyKind kind, const CatalogueParams& params);

struct SmoothResult {
    std::vector<Vec> x;          // N state estimates
    std::vector<Vec> process_residual;  // x_k - G_k x_{k-1} - mu_k
    std::vector<Vec> meas_residual;     // H_k x_k - z_k (zero on unobserved steps)
    /// Argument of the measurement penalty: c2 R_k^{-1/2} (H_k x_k - z_k).
    std::vector<Vec> scaled_meas_residual;
    PenaltyKind measurement = PenaltyKind::l2;
    std::vector<bool> observed;
    SolveStats stats;
    KktState state;
    KktCertificate certificate;
};

/// Block-tridiagonal solve of (G^T Q^-1 G + H^T R^-1 H) x = G^T Q^-1 mu + H^T R^-1 z.
SmoothResult smooth_quadratic(const StateSpaceModel& model, const std::vector<Vec>& z);

/// Scalar-coordinate catalogue block used for every step, optionally
/// standardized by its statistical weight.
QsPenalty smoother_block(PenaltyKind kind, const CatalogueParams& params, Eigen::Index dim, WeightMode mode);

/// The IP operators of the smoothing problem, kept in per-step blocks. Dual
/// coordinates are ordered [v_1..v_N, w_1..w_N], the same order
/// stacked_problem produces.
class KalmanKktSystem final : public KktSystem {
public:
    KalmanKktSystem(const StateSpaceModel& model, const std::vector<Vec>& z, const SmootherSpec& spec);

    Eigen::Index ell() const override { return poly_.rows(); }
    Eigen::Index dual_dim() const override { return Mdiag_.size(); }
    Eigen::Index primal_dim() const override { return N_ * n_; }
    const Vec& a() const override { return poly_.rhs(); }
    const Vec& b() const override { return b_; }
    Vec apply_A(const Vec& q) const override { return poly_.apply(q); }
    Vec apply_At(const Vec& u) const override { return poly_.apply_transpose(u); }
    Vec apply_M(const Vec& u) const override { return Mdiag_.cwiseProduct(u); }
    Vec apply_B(const Vec& y) const override;
    Vec apply_Bt(const Vec& u) const override;
    std::pair<Vec, Vec> solve_reduced(const Vec& d, const Vec& rt3, const Vec& r4) override;

    /// Omega = B^T T^-1 B in block form for the given T^-1 diagonal.
    BlockTridiagonal omega(const Vec& t_inv) const;

    /// Called with Omega and T^-1 every time a Newton system is solved.
    std::function<void(const BlockTridiagonal&, const Vec&)> omega_observer;

    /// Start point: blockwise interior u (on null(B_block^T)), x propagated
    /// from x0, q completed from the residuals. Free coordinates take
    /// u_i = g_i / M_ii, which leaves B^T u = 0 only when the free rows already
    /// balance; the path-following loop absorbs that residual.
    KktState initial_state() const;

    Eigen::Index v_dim() const { return mv_; }
    Eigen::Index w_dim() const { return mw_; }

private:
    Eigen::Index N_, n_, mv_, mw_;
    Polyhedron poly_;
    Vec Mdiag_;
    Vec b_;
    Vec u_block_v_, u_block_w_;
    Vec x_init_;
    std::vector<Mat> PvH_;  // B_v R_k^{-1/2} H_k (zero when unobserved)
    std::vector<Mat> Pw_;   // B_w Q_k^{-1/2}
    std::vector<Mat> PwG_;  // B_w Q_k^{-1/2} G_k, k >= 1
};

/// Same problem as one dense PlqProblem (for cross-checks).
PlqProblem stacked_problem(const StateSpaceModel& model, const std::vector<Vec>& z, const SmootherSpec& spec);

struct SmoothOptions {
    SolveOptions solve;
    std::function<void(const BlockTridiagonal&, const Vec&)> omega_observer;
};

SmoothResult smooth_plq(const StateSpaceModel& model, const std::vector<Vec>& z, const SmootherSpec& spec,
                        const SmoothOptions& opts = {});

/// Steps whose scaled measurement residual reaches the tube edge,
/// |r_k| >= eps - tol, among observed steps. Requires an eps-insensitive loss.
std::vector<Eigen::Index> support_vectors(const SmoothResult& result, double eps, double tol = 1e-6);

/// Integrated Wiener process prior: state (derivative, value).
StateSpaceModel build_spline_model(double dt, double lambda2, Eigen::Index N, bool noninformative_first = false);

}  // namespace plq
