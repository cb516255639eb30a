#include "plq/kalman.hpp"

#include "plq/density.hpp"
#include "plq/error.hpp"

#include <cmath>

namespace plq {

void StateSpaceModel::validate() const {
    auto sized = [&](const std::vector<Mat>& v, Eigen::Index r, Eigen::Index c, const char* name, bool skip_first = false) {
        if (static_cast<Eigen::Index>(v.size()) != N) {
            throw Error(ErrorCode::DimensionMismatch, std::string(name) + " must have N blocks");
        }
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (k == 0 && skip_first) continue;
            if (v[k].rows() != r || v[k].cols() != c) {
                throw Error(ErrorCode::DimensionMismatch, std::string(name) + " block has the wrong shape");
            }
        }
    };
    if (N < 1 || n < 1 || m < 1) throw Error(ErrorCode::DimensionMismatch, "model needs N, n, m >= 1");
    sized(G, n, n, "G", true);
    sized(H, m, n, "H");
    sized(Q, n, n, "Q");
    sized(R, m, m, "R");
    if (x0.size() != n) throw Error(ErrorCode::DimensionMismatch, "x0 has the wrong size");
    if (!observed.empty() && static_cast<Eigen::Index>(observed.size()) != N) {
        throw Error(ErrorCode::DimensionMismatch, "observed mask must have N entries");
    }
}

double statistical_weight(PenaltyKind kind, const CatalogueParams& params) {
    switch (kind) {
        case PenaltyKind::l1:
        case PenaltyKind::l2:
        case PenaltyKind::huber:
        case PenaltyKind::vapnik:
            return catalogue_constants(kind, params).c2;
        default:
            throw Error(ErrorCode::BadKind, "no statistical weight for " + std::string(to_string(kind)));
    }
}

QsPenalty smoother_block(PenaltyKind kind, const CatalogueParams& params, Eigen::Index dim, WeightMode mode) {
    QsPenalty rho = make_catalogue(kind, params, dim);
    if (mode == WeightMode::none) return rho;
    const double c2 = statistical_weight(kind, params);
    return precompose_affine(rho, c2 * Mat::Identity(dim, dim), Vec::Zero(dim));
}

namespace {

void check_measurements(const StateSpaceModel& model, const std::vector<Vec>& z) {
    model.validate();
    if (static_cast<Eigen::Index>(z.size()) != model.N) {
        throw Error(ErrorCode::DimensionMismatch, "need one measurement per step");
    }
    for (const auto& zk : z) {
        if (zk.size() != model.m) throw Error(ErrorCode::DimensionMismatch, "measurement has the wrong size");
    }
}

// Interior point of a block's U on null(B^T), or nothing.
Vec block_interior(const QsPenalty& rho) {
    const IntervalProduct& U = *rho.intervals();
    const Vec u0 = U.interior_point();
    const Mat& B = rho.B();
    const Vec u = u0 - B * (B.transpose() * B).ldlt().solve(B.transpose() * u0);
    for (const Vec& cand : {u, u0, Vec(Vec::Zero(u0.size()))}) {
        const bool inside = ((cand.array() > U.lower.array()) || !U.lower.array().isFinite()).all() &&
                            ((cand.array() < U.upper.array()) || !U.upper.array().isFinite()).all();
        if (inside && (B.transpose() * cand).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + cand.cwiseAbs().maxCoeff())) {
            return cand;
        }
    }
    throw Error(ErrorCode::NoInteriorFound, "block penalty has no interior point on null(B^T)");
}

std::vector<Vec> split(const Vec& v, Eigen::Index blocks, Eigen::Index size) {
    std::vector<Vec> out(static_cast<std::size_t>(blocks));
    for (Eigen::Index k = 0; k < blocks; ++k) out[k] = v.segment(k * size, size);
    return out;
}

void fill_residuals(SmoothResult& r, const StateSpaceModel& model, const std::vector<Vec>& z, double c2) {
    r.process_residual.resize(r.x.size());
    r.meas_residual.resize(r.x.size());
    r.scaled_meas_residual.resize(r.x.size());
    r.observed.assign(static_cast<std::size_t>(model.N), true);
    for (Eigen::Index k = 0; k < model.N; ++k) {
        r.process_residual[k] = k == 0 ? Vec(r.x[0] - model.x0) : Vec(r.x[k] - model.G[k] * r.x[k - 1]);
        if (model.is_observed(k)) {
            r.meas_residual[k] = model.H[k] * r.x[k] - z[k];
            r.scaled_meas_residual[k] = c2 * (symmetric_roots(model.R[k]).inv_sqrt * r.meas_residual[k]);
        } else {
            r.observed[k] = false;
            r.meas_residual[k] = Vec::Zero(model.m);
            r.scaled_meas_residual[k] = Vec::Zero(model.m);
        }
    }
}

}  // namespace

SmoothResult smooth_quadratic(const StateSpaceModel& model, const std::vector<Vec>& z) {
    check_measurements(model, z);
    const Eigen::Index N = model.N;
    const Eigen::Index n = model.n;
    BlockTridiagonal omega(N, n);
    Vec rhs = Vec::Zero(N * n);
    const Mat In = Mat::Identity(n, n);
    for (Eigen::Index k = 0; k < N; ++k) {
        const Mat q_inv = DenseSpd(model.Q[k]).solve(In);
        omega.diag[k] += q_inv;
        if (k == 0) {
            rhs.segment(0, n) += q_inv * model.x0;
        } else {
            omega.diag[k - 1] += model.G[k].transpose() * q_inv * model.G[k];
            omega.sub[k - 1] -= q_inv * model.G[k];
        }
        if (model.is_observed(k)) {
            const Mat ht_r_inv = model.H[k].transpose() * Mat(DenseSpd(model.R[k]).solve(Mat(Mat::Identity(model.m, model.m))));
            omega.diag[k] += ht_r_inv * model.H[k];
            rhs.segment(k * n, n) += ht_r_inv * z[k];
        }
    }
    SmoothResult out;
    out.x = split(block_tridiag_solve(omega, rhs), N, n);
    out.measurement = PenaltyKind::l2;
    out.stats.iterations = 1;
    fill_residuals(out, model, z, 1.0);
    return out;
}

// ---------------------------------------------------------------------------

KalmanKktSystem::KalmanKktSystem(const StateSpaceModel& model, const std::vector<Vec>& z, const SmootherSpec& spec)
    : N_(model.N), n_(model.n) {
    check_measurements(model, z);
    const QsPenalty V = smoother_block(spec.measurement, spec.meas_params, model.m, spec.weights);
    const QsPenalty W = smoother_block(spec.process, spec.process_params, model.n, spec.weights);
    if (!check_ip_condition(V) || !check_ip_condition(W)) {
        throw Error(ErrorCode::ConditionViolated, "block penalty violates null(M) and null(A^T) = {0}");
    }
    mv_ = V.m();
    mw_ = W.m();
    const Eigen::Index total = N_ * (mv_ + mw_);

    IntervalProduct U{Vec(total), Vec(total)};
    Mdiag_.resize(total);
    b_.resize(total);
    PvH_.resize(static_cast<std::size_t>(N_));
    Pw_.resize(static_cast<std::size_t>(N_));
    PwG_.resize(static_cast<std::size_t>(N_));
    const Eigen::Index w0 = N_ * mv_;
    for (Eigen::Index k = 0; k < N_; ++k) {
        const Eigen::Index vo = k * mv_;
        const Eigen::Index wo = w0 + k * mw_;
        U.lower.segment(vo, mv_) = V.intervals()->lower;
        U.upper.segment(vo, mv_) = V.intervals()->upper;
        U.lower.segment(wo, mw_) = W.intervals()->lower;
        U.upper.segment(wo, mw_) = W.intervals()->upper;
        Mdiag_.segment(vo, mv_) = V.M().diagonal();
        Mdiag_.segment(wo, mw_) = W.M().diagonal();

        const Mat Pv = V.B() * symmetric_roots(model.R[k]).inv_sqrt;
        b_.segment(vo, mv_) = V.b();
        if (model.is_observed(k)) {
            PvH_[k] = Pv * model.H[k];
            b_.segment(vo, mv_) -= Pv * z[k];
        } else {
            PvH_[k] = Mat::Zero(mv_, n_);
        }

        Pw_[k] = W.B() * symmetric_roots(model.Q[k]).inv_sqrt;
        b_.segment(wo, mw_) = W.b();
        if (k == 0) {
            b_.segment(wo, mw_) -= Pw_[k] * model.x0;
        } else {
            PwG_[k] = Pw_[k] * model.G[k];
        }
    }
    poly_ = Polyhedron::from_intervals(U);
    u_block_v_ = block_interior(V);
    u_block_w_ = block_interior(W);

    x_init_.resize(N_ * n_);
    Vec x = model.x0;
    for (Eigen::Index k = 0; k < N_; ++k) {
        if (k > 0) x = model.G[k] * x;
        x_init_.segment(k * n_, n_) = x;
    }
}

Vec KalmanKktSystem::apply_B(const Vec& y) const {
    Vec out(Mdiag_.size());
    const Eigen::Index w0 = N_ * mv_;
    for (Eigen::Index k = 0; k < N_; ++k) {
        const auto xk = y.segment(k * n_, n_);
        out.segment(k * mv_, mv_).noalias() = PvH_[k] * xk;
        auto w = out.segment(w0 + k * mw_, mw_);
        w.noalias() = Pw_[k] * xk;
        if (k > 0) w.noalias() -= PwG_[k] * y.segment((k - 1) * n_, n_);
    }
    return out;
}

Vec KalmanKktSystem::apply_Bt(const Vec& u) const {
    Vec out(N_ * n_);
    const Eigen::Index w0 = N_ * mv_;
    for (Eigen::Index k = 0; k < N_; ++k) {
        auto xk = out.segment(k * n_, n_);
        xk.noalias() = PvH_[k].transpose() * u.segment(k * mv_, mv_);
        xk.noalias() += Pw_[k].transpose() * u.segment(w0 + k * mw_, mw_);
        if (k + 1 < N_) xk.noalias() -= PwG_[k + 1].transpose() * u.segment(w0 + (k + 1) * mw_, mw_);
    }
    return out;
}

BlockTridiagonal KalmanKktSystem::omega(const Vec& t_inv) const {
    BlockTridiagonal om(N_, n_);
    const Eigen::Index w0 = N_ * mv_;
    for (Eigen::Index k = 0; k < N_; ++k) {
        const auto tv = t_inv.segment(k * mv_, mv_);
        om.diag[k].noalias() += PvH_[k].transpose() * tv.asDiagonal() * PvH_[k];
        const auto tw = t_inv.segment(w0 + k * mw_, mw_);
        const Mat scaled = tw.asDiagonal() * Pw_[k];
        om.diag[k].noalias() += Pw_[k].transpose() * scaled;
        if (k > 0) {
            om.diag[k - 1].noalias() += PwG_[k].transpose() * tw.asDiagonal() * PwG_[k];
            om.sub[k - 1].noalias() -= scaled.transpose() * PwG_[k];
        }
    }
    return om;
}

std::pair<Vec, Vec> KalmanKktSystem::solve_reduced(const Vec& d, const Vec& rt3, const Vec& r4) {
    const Vec t = Mdiag_ + poly_.gram_diagonal(d);
    if (t.size() > 0 && !(t.minCoeff() > 0.0)) throw Error(ErrorCode::SingularT, "T has a zero diagonal entry");
    const Vec t_inv = t.cwiseInverse();
    const BlockTridiagonal om = omega(t_inv);
    if (omega_observer) omega_observer(om, t_inv);
    const Vec rhs = -r4 - apply_Bt(t_inv.cwiseProduct(rt3));
    Vec dy = block_tridiag_solve(om, rhs);
    Vec du = t_inv.cwiseProduct(apply_B(dy) + rt3);
    return {std::move(du), std::move(dy)};
}

KktState KalmanKktSystem::initial_state() const {
    const Eigen::Index w0 = N_ * mv_;
    KktState st;
    st.u.resize(Mdiag_.size());
    for (Eigen::Index k = 0; k < N_; ++k) {
        st.u.segment(k * mv_, mv_) = u_block_v_;
        st.u.segment(w0 + k * mw_, mw_) = u_block_w_;
    }
    st.y = x_init_;

    std::vector<bool> bounded(static_cast<std::size_t>(Mdiag_.size()), false);
    for (Eigen::Index c : poly_.coords()) bounded[c] = true;
    const Vec by = b_ + apply_B(st.y);
    for (Eigen::Index i = 0; i < st.u.size(); ++i) {
        if (bounded[i]) continue;
        if (!(Mdiag_(i) > 0.0)) throw Error(ErrorCode::NoInteriorFound, "free dual coordinate with M_ii = 0");
        st.u(i) = by(i) / Mdiag_(i);
    }
    st.s = poly_.rhs() - poly_.apply_transpose(st.u);
    auto q = multipliers_for(poly_, by - apply_M(st.u), kInf);
    if (!q || (st.s.size() > 0 && !(st.s.minCoeff() > 0.0))) {
        throw Error(ErrorCode::NoInteriorFound, "blockwise start is not interior");
    }
    st.q = std::move(*q);
    return st;
}

PlqProblem stacked_problem(const StateSpaceModel& model, const std::vector<Vec>& z, const SmootherSpec& spec) {
    check_measurements(model, z);
    const Eigen::Index N = model.N;
    const Eigen::Index n = model.n;
    const Eigen::Index m = model.m;
    Mat H = Mat::Zero(N * m, N * n);
    Mat G = Mat::Identity(N * n, N * n);
    Mat R = Mat::Zero(N * m, N * m);
    Mat Q = Mat::Zero(N * n, N * n);
    Vec zz = Vec::Zero(N * m);
    Vec mu = Vec::Zero(N * n);
    mu.head(n) = model.x0;
    for (Eigen::Index k = 0; k < N; ++k) {
        if (model.is_observed(k)) {
            H.block(k * m, k * n, m, n) = model.H[k];
            zz.segment(k * m, m) = z[k];
        }
        if (k > 0) G.block(k * n, (k - 1) * n, n, n) = -model.G[k];
        R.block(k * m, k * m, m, m) = model.R[k];
        Q.block(k * n, k * n, n, n) = model.Q[k];
    }
    return assemble_problem(smoother_block(spec.measurement, spec.meas_params, N * m, spec.weights),
                            smoother_block(spec.process, spec.process_params, N * n, spec.weights), H, G, R, Q, zz,
                            mu);
}

SmoothResult smooth_plq(const StateSpaceModel& model, const std::vector<Vec>& z, const SmootherSpec& spec,
                        const SmoothOptions& opts) {
    KalmanKktSystem sys(model, z, spec);
    sys.omega_observer = opts.omega_observer;
    PathResult path;
    try {
        path = path_following(sys, sys.initial_state(), opts.solve);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SingularT) throw Error(ErrorCode::NumericalBreakdown, e.what());
        throw;
    }
    if (path.stats.status == SolveStatus::iteration_limit) {
        throw Error(ErrorCode::IterationLimit,
                    "smoother did not converge in " + std::to_string(path.stats.iterations) + " iterations");
    }
    if (path.stats.status == SolveStatus::diverged) throw Error(ErrorCode::NumericalBreakdown, "iterates diverged");

    SmoothResult out;
    out.x = split(path.state.y, model.N, model.n);
    out.measurement = spec.measurement;
    const double c2 =
        spec.weights == WeightMode::standardized ? statistical_weight(spec.measurement, spec.meas_params) : 1.0;
    fill_residuals(out, model, z, c2);
    out.certificate = kkt_certificate(sys, path.state);
    out.stats = std::move(path.stats);
    out.state = std::move(path.state);
    return out;
}

std::vector<Eigen::Index> support_vectors(const SmoothResult& result, double eps, double tol) {
    if (result.measurement != PenaltyKind::vapnik && result.measurement != PenaltyKind::silf) {
        throw Error(ErrorCode::NotEpsilonLoss, "support vectors need an eps-insensitive measurement loss");
    }
    std::vector<Eigen::Index> out;
    for (std::size_t k = 0; k < result.scaled_meas_residual.size(); ++k) {
        if (!result.observed.empty() && !result.observed[k]) continue;
        const Vec& r = result.scaled_meas_residual[k];
        if (r.size() > 0 && r.cwiseAbs().maxCoeff() >= eps - tol) out.push_back(static_cast<Eigen::Index>(k));
    }
    return out;
}

StateSpaceModel build_spline_model(double dt, double lambda2, Eigen::Index N, bool noninformative_first) {
    if (!(dt > 0.0) || !(lambda2 > 0.0)) throw Error(ErrorCode::BadParameter, "dt and lambda2 must be positive");
    StateSpaceModel model;
    model.N = N;
    model.n = 2;
    model.m = 1;
    Mat G(2, 2);
    G << 1.0, 0.0, dt, 1.0;
    Mat H(1, 2);
    H << 0.0, 1.0;
    Mat Q(2, 2);
    Q << dt, dt * dt / 2.0, dt * dt / 2.0, dt * dt * dt / 3.0;
    Q *= lambda2;
    model.G.assign(static_cast<std::size_t>(N), G);
    model.G[0] = Mat::Identity(2, 2);
    model.H.assign(static_cast<std::size_t>(N), H);
    model.Q.assign(static_cast<std::size_t>(N), Q);
    if (noninformative_first && N > 0) model.Q[0] *= 1e6;
    model.R.assign(static_cast<std::size_t>(N), Mat::Identity(1, 1));
    model.x0 = Vec::Zero(2);
    model.validate();
    return model;
}

}  // namespace plq
