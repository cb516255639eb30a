#include "plq/penalty.hpp"

#include "plq/error.hpp"
#include "plq/ip_solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace plq {

namespace {

constexpr double kPsdTol = 1e-10;
constexpr double kInjectiveTol = 1e-12;
constexpr double kRankTol = 1e-10;

bool is_diagonal(const Mat& M) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            if (i != j && M(i, j) != 0.0) return false;
        }
    }
    return true;
}

void check_injective(const Mat& B, ErrorCode code) {
    if (B.rows() < B.cols()) {
        throw Error(code, "B has fewer rows than columns");
    }
    if (B.cols() == 0) return;
    Eigen::BDCSVD<Mat> svd(B);
    const Vec& s = svd.singularValues();
    if (!(s(0) > 0.0) || !(s(s.size() - 1) > kInjectiveTol * s(0))) {
        throw Error(code, "null(B) is nontrivial");
    }
}

void check_psd(const Mat& M) {
    if (M.size() == 0) return;
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorCode::BadParameter, "M is not symmetric");
    }
    if (is_diagonal(M)) {
        if (M.diagonal().minCoeff() < -kPsdTol * M.diagonal().cwiseAbs().maxCoeff()) {
            throw Error(ErrorCode::NonPsdM, "M has a negative diagonal entry");
        }
        return;
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(M, Eigen::EigenvaluesOnly);
    const Vec& lam = eig.eigenvalues();
    const double norm = lam.cwiseAbs().maxCoeff();
    if (lam.minCoeff() < -kPsdTol * norm) {
        throw Error(ErrorCode::NonPsdM, "M has a negative eigenvalue");
    }
}

void check_nonempty(const IntervalProduct& U) {
    if (U.lower.size() != U.upper.size()) {
        throw Error(ErrorCode::DimensionMismatch, "interval bounds differ in length");
    }
    for (Eigen::Index i = 0; i < U.dim(); ++i) {
        const double lo = U.lower(i);
        const double hi = U.upper(i);
        if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kInf || hi == -kInf) {
            throw Error(ErrorCode::EmptyU, "interval " + std::to_string(i) + " is empty");
        }
    }
}

IntervalProduct scaled(const IntervalProduct& U, double alpha) {
    return IntervalProduct(U.lower * alpha, U.upper * alpha);
}

Mat vstack(const Mat& top, const Mat& bottom) {
    Mat out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

Vec vcat(const Vec& top, const Vec& bottom) {
    Vec out(top.size() + bottom.size());
    out << top, bottom;
    return out;
}

double soft_hinge_value(double t, double eps, double kappa) {
    const double r = t - eps;
    if (r <= 0.0) return 0.0;
    if (r <= kappa) return 0.5 * r * r;
    return kappa * r - 0.5 * kappa * kappa;
}

}  // namespace

// ---------------------------------------------------------------------------
// IntervalProduct

IntervalProduct IntervalProduct::whole_space(Eigen::Index m) {
    return IntervalProduct(Vec::Constant(m, -kInf), Vec::Constant(m, kInf));
}

IntervalProduct IntervalProduct::uniform(Eigen::Index m, double lo, double hi) {
    return IntervalProduct(Vec::Constant(m, lo), Vec::Constant(m, hi));
}

bool IntervalProduct::contains(const Vec& u, double tol) const {
    if (u.size() != dim()) return false;
    for (Eigen::Index i = 0; i < dim(); ++i) {
        if (u(i) < lower(i) - tol || u(i) > upper(i) + tol) return false;
    }
    return true;
}

bool IntervalProduct::is_bounded() const {
    return lower.allFinite() && upper.allFinite();
}

Vec IntervalProduct::interior_point() const {
    Vec p(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) {
        const double lo = lower(i);
        const double hi = upper(i);
        if (lo < 0.0 && hi > 0.0) {
            p(i) = 0.0;
        } else if (std::isfinite(lo) && std::isfinite(hi)) {
            p(i) = 0.5 * (lo + hi);
        } else if (std::isfinite(lo)) {
            p(i) = lo + 1.0;
        } else if (std::isfinite(hi)) {
            p(i) = hi - 1.0;
        } else {
            p(i) = 0.0;
        }
    }
    return p;
}

IntervalProduct product(const IntervalProduct& a, const IntervalProduct& b) {
    return IntervalProduct(vcat(a.lower, b.lower), vcat(a.upper, b.upper));
}

// ---------------------------------------------------------------------------
// Polyhedron

Polyhedron::Polyhedron(Mat A, Vec a, Vec witness)
    : dim_(A.rows()), A_(std::move(A)), a_(std::move(a)), witness_(std::move(witness)) {
    if (A_.cols() != a_.size() || witness_.size() != dim_) {
        throw Error(ErrorCode::DimensionMismatch, "polyhedron dimensions are inconsistent");
    }
    if (a_.size() > 0 && ((A_.transpose() * witness_ - a_).array() > 1e-9 * (1.0 + a_.cwiseAbs().maxCoeff())).any()) {
        throw Error(ErrorCode::EmptyU, "witness point violates A^T u <= a");
    }
}

Polyhedron Polyhedron::from_intervals(const IntervalProduct& box) {
    Polyhedron p;
    p.dim_ = box.dim();
    p.axis_aligned_ = true;
    std::vector<double> rhs;
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
        if (std::isfinite(box.upper(i))) {
            p.coord_.push_back(i);
            p.sign_.push_back(1.0);
            rhs.push_back(box.upper(i));
        }
    }
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
        if (std::isfinite(box.lower(i))) {
            p.coord_.push_back(i);
            p.sign_.push_back(-1.0);
            rhs.push_back(-box.lower(i));
        }
    }
    p.a_ = Eigen::Map<Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    p.witness_ = box.interior_point();
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
        if (box.lower(i) == box.upper(i)) p.witness_(i) = box.lower(i);
    }
    return p;
}

Mat Polyhedron::matrix() const {
    if (!axis_aligned_) return A_;
    Mat A = Mat::Zero(dim_, rows());
    for (Eigen::Index j = 0; j < rows(); ++j) A(coord_[j], j) = sign_[j];
    return A;
}

Vec Polyhedron::apply(const Vec& q) const {
    if (!axis_aligned_) return A_ * q;
    Vec out = Vec::Zero(dim_);
    for (Eigen::Index j = 0; j < rows(); ++j) out(coord_[j]) += sign_[j] * q(j);
    return out;
}

Vec Polyhedron::apply_transpose(const Vec& u) const {
    if (!axis_aligned_) return A_.transpose() * u;
    Vec out(rows());
    for (Eigen::Index j = 0; j < rows(); ++j) out(j) = sign_[j] * u(coord_[j]);
    return out;
}

Vec Polyhedron::gram_diagonal(const Vec& d) const {
    if (!axis_aligned_) return gram(d).diagonal();
    Vec out = Vec::Zero(dim_);
    for (Eigen::Index j = 0; j < rows(); ++j) out(coord_[j]) += d(j);
    return out;
}

Mat Polyhedron::gram(const Vec& d) const {
    if (axis_aligned_) return gram_diagonal(d).asDiagonal();
    return A_ * d.asDiagonal() * A_.transpose();
}

// ---------------------------------------------------------------------------
// Kinds

std::string_view to_string(PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::l2: return "l2";
        case PenaltyKind::l1: return "l1";
        case PenaltyKind::huber: return "huber";
        case PenaltyKind::vapnik: return "vapnik";
        case PenaltyKind::hinge: return "hinge";
        case PenaltyKind::elastic_net: return "elastic_net";
        case PenaltyKind::soft_hinge: return "soft_hinge";
        case PenaltyKind::silf: return "silf";
    }
    return "unknown";
}

PenaltyKind parse_penalty_kind(std::string_view name) {
    for (auto k : {PenaltyKind::l2, PenaltyKind::l1, PenaltyKind::huber, PenaltyKind::vapnik, PenaltyKind::hinge,
                   PenaltyKind::elastic_net, PenaltyKind::soft_hinge, PenaltyKind::silf}) {
        if (to_string(k) == name) return k;
    }
    throw Error(ErrorCode::BadKind, "unknown penalty kind '" + std::string(name) + "'");
}

double catalogue_value(PenaltyKind kind, const CatalogueParams& p, double t) {
    switch (kind) {
        case PenaltyKind::l2: return 0.5 * t * t;
        case PenaltyKind::l1: return std::abs(t);
        case PenaltyKind::huber: {
            const double a = std::abs(t);
            return a <= p.kappa ? 0.5 * t * t : p.kappa * a - 0.5 * p.kappa * p.kappa;
        }
        case PenaltyKind::vapnik: return std::max(t - p.eps, 0.0) + std::max(-t - p.eps, 0.0);
        case PenaltyKind::hinge: return std::max(t - p.eps, 0.0);
        case PenaltyKind::elastic_net: return 0.5 * t * t + p.lambda * std::abs(t);
        case PenaltyKind::soft_hinge: return soft_hinge_value(t, p.eps, p.kappa);
        case PenaltyKind::silf: return soft_hinge_value(t, p.eps, p.kappa) + soft_hinge_value(-t, p.eps, p.kappa);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Construction

std::optional<PenaltyKind> QsPenalty::catalogue_kind() const {
    if (terms_.size() != 1) return std::nullopt;
    const auto& t = terms_.front();
    if (t.weight != 1.0 || t.S.rows() != t.S.cols() || !t.S.isIdentity(0.0) || !t.t.isZero(0.0)) {
        return std::nullopt;
    }
    return t.kind;
}

QsPenalty make_penalty(IntervalProduct U, Mat M, Vec b, Mat B) {
    const Eigen::Index m = M.rows();
    if (M.cols() != m || U.dim() != m || b.size() != m || B.rows() != m || m == 0 || B.cols() == 0) {
        throw Error(ErrorCode::DimensionMismatch, "make_penalty: inconsistent dimensions");
    }
    check_nonempty(U);
    check_psd(M);
    check_injective(B, ErrorCode::NonInjectiveB);

    QsPenalty rho;
    rho.poly_ = Polyhedron::from_intervals(U);
    rho.zero_in_U_ = U.contains(Vec::Zero(m));
    rho.U_ = std::move(U);
    rho.M_diagonal_ = is_diagonal(M);
    rho.M_ = std::move(M);
    rho.b_ = std::move(b);
    rho.B_ = std::move(B);
    return rho;
}

QsPenalty make_polyhedral_penalty(Polyhedron U, Mat M, Vec b, Mat B) {
    const Eigen::Index m = M.rows();
    if (M.cols() != m || U.dim() != m || b.size() != m || B.rows() != m || m == 0 || B.cols() == 0) {
        throw Error(ErrorCode::DimensionMismatch, "make_polyhedral_penalty: inconsistent dimensions");
    }
    check_psd(M);
    check_injective(B, ErrorCode::NonInjectiveB);

    QsPenalty rho;
    rho.zero_in_U_ = U.rows() == 0 || (U.apply_transpose(Vec::Zero(m)) - U.rhs()).maxCoeff() <= 0.0;
    rho.poly_ = std::move(U);
    rho.M_diagonal_ = is_diagonal(M);
    rho.M_ = std::move(M);
    rho.b_ = std::move(b);
    rho.B_ = std::move(B);
    return rho;
}

QsPenalty make_catalogue(PenaltyKind kind, const CatalogueParams& params, Eigen::Index dim) {
    if (dim < 1) throw Error(ErrorCode::BadParameter, "catalogue dimension must be >= 1");
    const bool needs_kappa =
        kind == PenaltyKind::huber || kind == PenaltyKind::soft_hinge || kind == PenaltyKind::silf;
    if (needs_kappa && !(params.kappa > 0.0 && std::isfinite(params.kappa))) {
        throw Error(ErrorCode::BadParameter, "kappa must be positive");
    }
    if (!(params.eps >= 0.0) || !(params.lambda >= 0.0)) {
        throw Error(ErrorCode::BadParameter, "eps and lambda must be nonnegative");
    }

    const Eigen::Index d = dim;
    QsPenalty rho;
    switch (kind) {
        case PenaltyKind::l2:
            rho = make_penalty(IntervalProduct::whole_space(d), Mat::Identity(d, d), Vec::Zero(d), Mat::Identity(d, d));
            break;
        case PenaltyKind::l1:
            rho = make_penalty(IntervalProduct::uniform(d, -1.0, 1.0), Mat::Zero(d, d), Vec::Zero(d),
                               Mat::Identity(d, d));
            break;
        case PenaltyKind::huber:
            rho = make_penalty(IntervalProduct::uniform(d, -params.kappa, params.kappa), Mat::Identity(d, d),
                               Vec::Zero(d), Mat::Identity(d, d));
            break;
        case PenaltyKind::hinge:
            rho = make_penalty(IntervalProduct::uniform(d, 0.0, 1.0), Mat::Zero(d, d), Vec::Constant(d, -params.eps),
                               Mat::Identity(d, d));
            break;
        case PenaltyKind::soft_hinge:
            rho = make_penalty(IntervalProduct::uniform(d, 0.0, params.kappa), Mat::Identity(d, d),
                               Vec::Constant(d, -params.eps), Mat::Identity(d, d));
            break;
        case PenaltyKind::vapnik:
        case PenaltyKind::silf: {
            Mat B = Mat::Zero(2 * d, d);
            for (Eigen::Index i = 0; i < d; ++i) {
                B(2 * i, i) = 1.0;
                B(2 * i + 1, i) = -1.0;
            }
            const bool soft = kind == PenaltyKind::silf;
            rho = make_penalty(IntervalProduct::uniform(2 * d, 0.0, soft ? params.kappa : 1.0),
                               soft ? Mat(Mat::Identity(2 * d, 2 * d)) : Mat(Mat::Zero(2 * d, 2 * d)),
                               Vec::Constant(2 * d, -params.eps), B);
            break;
        }
        case PenaltyKind::elastic_net: {
            Mat B = Mat::Zero(2 * d, d);
            Vec M = Vec::Zero(2 * d);
            IntervalProduct U = IntervalProduct::whole_space(2 * d);
            for (Eigen::Index i = 0; i < d; ++i) {
                B(2 * i, i) = 1.0;
                B(2 * i + 1, i) = 1.0;
                M(2 * i) = 1.0;
                U.lower(2 * i + 1) = -params.lambda;
                U.upper(2 * i + 1) = params.lambda;
            }
            rho = make_penalty(std::move(U), M.asDiagonal(), Vec::Zero(2 * d), B);
            break;
        }
    }
    rho.terms_.push_back(ClosedFormTerm{kind, params, 1.0, Mat::Identity(d, d), Vec::Zero(d)});
    return rho;
}

QsPenalty sum(const QsPenalty& rho1, const QsPenalty& rho2) {
    if (rho1.n() != rho2.n()) {
        throw Error(ErrorCode::DimensionMismatch, "sum: penalties act on different input dimensions");
    }
    Mat M = block_diagonal({rho1.M(), rho2.M()});
    Vec b = vcat(rho1.b(), rho2.b());
    Mat B = vstack(rho1.B(), rho2.B());

    QsPenalty out;
    if (rho1.intervals() && rho2.intervals()) {
        out.U_ = product(*rho1.intervals(), *rho2.intervals());
        out.poly_ = Polyhedron::from_intervals(*out.U_);
    } else {
        const Mat A = block_diagonal({rho1.polyhedron().matrix(), rho2.polyhedron().matrix()});
        out.poly_ = Polyhedron(A, vcat(rho1.polyhedron().rhs(), rho2.polyhedron().rhs()),
                               vcat(rho1.polyhedron().witness(), rho2.polyhedron().witness()));
    }
    out.zero_in_U_ = rho1.is_penalty() && rho2.is_penalty();
    out.M_diagonal_ = rho1.M_is_diagonal() && rho2.M_is_diagonal();
    out.M_ = std::move(M);
    out.b_ = std::move(b);
    out.B_ = std::move(B);
    if (!rho1.closed_form().empty() && !rho2.closed_form().empty()) {
        out.terms_ = rho1.closed_form();
        out.terms_.insert(out.terms_.end(), rho2.closed_form().begin(), rho2.closed_form().end());
    }
    return out;
}

QsPenalty scale(const QsPenalty& rho, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw Error(ErrorCode::BadParameter, "scale factor must be positive and finite");
    }
    QsPenalty out = rho;
    if (rho.intervals()) {
        out.U_ = scaled(*rho.intervals(), alpha);
        out.poly_ = Polyhedron::from_intervals(*out.U_);
    } else {
        const auto& P = rho.polyhedron();
        out.poly_ = Polyhedron(P.matrix(), P.rhs() * alpha, P.witness() * alpha);
    }
    out.M_ = rho.M() / alpha;
    for (auto& t : out.terms_) t.weight *= alpha;
    return out;
}

QsPenalty compose_affine_unchecked(const QsPenalty& rho, const Mat& S, const Vec& t) {
    if (S.rows() != rho.n() || t.size() != rho.n()) {
        throw Error(ErrorCode::DimensionMismatch, "precompose: S or t does not match the penalty input");
    }
    QsPenalty out = rho;
    out.b_ = rho.b() + rho.B() * t;
    out.B_ = rho.B() * S;
    for (auto& term : out.terms_) {
        term.t = term.S * t + term.t;
        term.S = term.S * S;
    }
    return out;
}

QsPenalty precompose_affine(const QsPenalty& rho, const Mat& S, const Vec& t) {
    QsPenalty out = compose_affine_unchecked(rho, S, t);
    check_injective(out.B(), ErrorCode::NonInjectiveComposite);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double evaluate_closed_form(const QsPenalty& rho, const Vec& y) {
    double total = 0.0;
    for (const auto& term : rho.closed_form()) {
        const Vec arg = term.S * y + term.t;
        double part = 0.0;
        for (Eigen::Index i = 0; i < arg.size(); ++i) part += catalogue_value(term.kind, term.params, arg(i));
        total += term.weight * part;
    }
    return total;
}

double evaluate_separable(const QsPenalty& rho, const Vec& y) {
    const auto& U = *rho.intervals();
    const Vec c = rho.B() * y + rho.b();
    double total = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const double mii = rho.M()(i, i);
        const double lo = U.lower(i);
        const double hi = U.upper(i);
        if (mii > 0.0) {
            const double u = std::clamp(c(i) / mii, lo, hi);
            total += c(i) * u - 0.5 * mii * u * u;
        } else if (c(i) > 0.0) {
            if (!std::isfinite(hi)) return kInf;
            total += c(i) * hi;
        } else if (c(i) < 0.0) {
            if (!std::isfinite(lo)) return kInf;
            total += c(i) * lo;
        }
    }
    return total;
}

}  // namespace

double evaluate(const QsPenalty& rho, const Vec& y, EvalMethod method) {
    if (y.size() != rho.n()) {
        throw Error(ErrorCode::DimensionMismatch, "evaluate: y has the wrong dimension");
    }
    if (method == EvalMethod::automatic) {
        if (!rho.closed_form().empty()) {
            method = EvalMethod::closed_form;
        } else if (rho.intervals() && rho.M_is_diagonal()) {
            method = EvalMethod::separable;
        } else {
            method = EvalMethod::dual_ip;
        }
    }
    switch (method) {
        case EvalMethod::closed_form:
            if (rho.closed_form().empty()) {
                throw Error(ErrorCode::BadParameter, "penalty has no closed form");
            }
            return evaluate_closed_form(rho, y);
        case EvalMethod::separable:
            if (!rho.intervals() || !rho.M_is_diagonal()) {
                throw Error(ErrorCode::UnsupportedU, "separable evaluation needs interval U and diagonal M");
            }
            return evaluate_separable(rho, y);
        case EvalMethod::dual_ip:
        case EvalMethod::automatic:
            break;
    }
    return detail::maximize_dual(rho.polyhedron(), rho.M(), rho.B() * y + rho.b(), 1e-13);
}

Vec project_box(const Vec& y, const IntervalProduct& U, const Vec& metric_diag) {
    if (y.size() != U.dim() || metric_diag.size() != U.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "project_box: dimension mismatch");
    }
    if (metric_diag.size() > 0 && !(metric_diag.minCoeff() > 0.0)) {
        throw Error(ErrorCode::BadParameter, "project_box: metric must be positive");
    }
    // A diagonal metric makes the least-distance problem separable.
    Vec z(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) z(i) = std::clamp(y(i), U.lower(i), U.upper(i));
    return z;
}

double evaluate_primal(const QsPenalty& rho, const Vec& y) {
    if (!rho.intervals()) throw Error(ErrorCode::UnsupportedU, "evaluate_primal needs an interval product U");
    const Eigen::Index m = rho.m();
    if (rho.n() != m || !rho.B().isIdentity(0.0) || !rho.b().isZero(0.0) || y.size() != m) {
        throw Error(ErrorCode::BadParameter, "evaluate_primal needs B = I and b = 0");
    }
    Eigen::LLT<Mat> llt(rho.M());
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularM, "M is not positive definite");
    const Vec v = llt.solve(y);
    const double quad = 0.5 * y.dot(v);

    double dist2;
    if (rho.M_is_diagonal()) {
        const Vec z = project_box(v, *rho.intervals(), rho.M().diagonal());
        const Vec r = v - z;
        dist2 = 0.5 * r.dot(rho.M() * r);
    } else {
        // inf_u 1/2 |u - v|_M^2 = 1/2 v^T M v - sup_u { <u, M v> - 1/2 u^T M u }
        dist2 = quad - detail::maximize_dual(rho.polyhedron(), rho.M(), y, 1e-13);
    }
    return quad - dist2;
}

double evaluate_primal_ball(const Mat& M, double radius, const Vec& y) {
    if (M.rows() != M.cols() || M.rows() != y.size()) {
        throw Error(ErrorCode::DimensionMismatch, "evaluate_primal_ball: dimension mismatch");
    }
    const double alpha = M.size() > 0 ? M(0, 0) : 1.0;
    if (!(alpha > 0.0)) throw Error(ErrorCode::SingularM, "M must be positive definite");
    if (!M.isApprox(alpha * Mat::Identity(M.rows(), M.cols()), 1e-14)) {
        throw Error(ErrorCode::UnsupportedU, "ball projection needs M proportional to the identity");
    }
    const Vec v = y / alpha;
    const double nv = v.norm();
    const Vec z = nv > radius ? Vec(v * (radius / nv)) : v;
    return 0.5 * y.dot(v) - 0.5 * alpha * (v - z).squaredNorm();
}

// ---------------------------------------------------------------------------
// Structural checks

namespace {

enum class Cone { all, nonneg, nonpos, zero };

Cone cone_of_interval(double lo, double hi) {
    if (lo < 0.0 && hi > 0.0) return Cone::all;
    if (lo == 0.0 && hi == 0.0) return Cone::zero;
    if (lo >= 0.0) return Cone::nonneg;
    return Cone::nonpos;
}

// max sign * y_j over {y : (B y)_i in polar(cone_i), |y|_inf <= 1}, as an
// exact-penalty PLQ problem solved by the interior-point method.
double cone_lp(const Mat& B, const std::vector<Cone>& cones, Eigen::Index j, double sign, Vec* argmax) {
    constexpr double L = 1e6;
    const Eigen::Index n = B.cols();

    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < B.rows(); ++i) {
        if (cones[i] != Cone::zero) rows.push_back(i);
    }
    const Eigen::Index nc = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index m = 1 + nc + 2 * n;

    Mat BB = Mat::Zero(m, n);
    Vec bb = Vec::Zero(m);
    IntervalProduct U = IntervalProduct::uniform(m, 0.0, L);
    BB(0, j) = sign;
    U.lower(0) = -2.0;
    U.upper(0) = -1.0;
    const double row_scale = 1.0 + B.cwiseAbs().rowwise().sum().maxCoeff();
    Vec u0 = Vec::Zero(m);
    u0(0) = -1.5;
    for (Eigen::Index r = 0; r < nc; ++r) {
        const Eigen::Index i = rows[r];
        BB.row(1 + r) = B.row(i);
        const double small = L / (4.0 * row_scale);
        switch (cones[i]) {
            case Cone::all:  // (B y)_i = 0
                U.lower(1 + r) = -L;
                u0(1 + r) = 0.0;
                break;
            case Cone::nonneg:  // (B y)_i <= 0
                u0(1 + r) = small;
                break;
            case Cone::nonpos:  // (B y)_i >= 0
                U.lower(1 + r) = -L;
                U.upper(1 + r) = 0.0;
                u0(1 + r) = -small;
                break;
            case Cone::zero:
                break;
        }
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        BB(1 + nc + 2 * k, k) = 1.0;
        BB(1 + nc + 2 * k + 1, k) = -1.0;
        bb(1 + nc + 2 * k) = -1.0;
        bb(1 + nc + 2 * k + 1) = -1.0;
    }
    // Box duals cancel the remaining B^T u.
    const Vec c = BB.topRows(1 + nc).transpose() * u0.head(1 + nc);
    for (Eigen::Index k = 0; k < n; ++k) {
        u0(1 + nc + 2 * k) = 0.5 * L - 0.5 * c(k);
        u0(1 + nc + 2 * k + 1) = 0.5 * L + 0.5 * c(k);
    }

    QsPenalty lp = make_penalty(U, Mat::Zero(m, m), bb, BB);
    PlqProblem prob = make_problem(lp);
    auto start = complete_state(lp.polyhedron(), lp.M(), lp.b(), lp.B(), u0, Vec::Zero(n));
    if (!start) throw Error(ErrorCode::NumericalBreakdown, "coercivity LP: no interior start");
    SolveOptions opts;
    opts.gap_tol = 1e-13;
    opts.max_iterations = 300;
    SolveResult res = solve_from(prob, *start, opts);
    if (argmax) *argmax = res.y;
    return -evaluate(lp, res.y, EvalMethod::separable);
}

}  // namespace

CoercivityCertificate is_coercive(const QsPenalty& rho) {
    if (!rho.intervals()) throw Error(ErrorCode::UnsupportedU, "is_coercive needs an interval product U");
    const auto& U = *rho.intervals();
    std::vector<Cone> cones;
    bool interior = true;
    for (Eigen::Index i = 0; i < U.dim(); ++i) {
        cones.push_back(cone_of_interval(U.lower(i), U.upper(i)));
        interior = interior && cones.back() == Cone::all;
    }
    CoercivityCertificate cert;
    if (interior) {
        // K = null(B) = {0} since B is injective.
        cert.coercive = true;
        cert.witness = CoercivityCertificate::Witness::interior;
        return cert;
    }
    cert.coercive = true;
    cert.witness = CoercivityCertificate::Witness::cone_system;
    for (Eigen::Index j = 0; j < rho.n(); ++j) {
        for (double sign : {1.0, -1.0}) {
            Vec y;
            const double v = cone_lp(rho.B(), cones, j, sign, &y);
            cert.lp_optima.push_back(v);
            if (v > 1e-8 && cert.coercive) {
                cert.coercive = false;
                cert.witness = CoercivityCertificate::Witness::direction;
                cert.direction = y;
            }
        }
    }
    return cert;
}

DomainKind domain_check(const QsPenalty& rho) {
    if (!rho.intervals()) throw Error(ErrorCode::UnsupportedU, "domain_check needs an interval product U");
    if (!rho.M_is_diagonal()) throw Error(ErrorCode::UnsupportedU, "domain_check needs coordinate-aligned M");
    const auto& U = *rho.intervals();
    for (Eigen::Index i = 0; i < U.dim(); ++i) {
        if (rho.M()(i, i) != 0.0) continue;  // Ran(M) covers the coordinate
        const bool lo = std::isfinite(U.lower(i));
        const bool hi = std::isfinite(U.upper(i));
        if (lo && hi) continue;  // barrier cone of a bounded interval is R
        const bool row_zero = rho.B().row(i).isZero(0.0);
        if (!row_zero) return DomainKind::restricted;
        const double bi = rho.b()(i);
        // barrier cone: [l,inf) -> (-inf,0], (-inf,u] -> [0,inf), R -> {0}
        const bool ok = lo ? bi <= 0.0 : (hi ? bi >= 0.0 : bi == 0.0);
        if (!ok) return DomainKind::restricted;
    }
    return DomainKind::finite_everywhere;
}

bool check_ip_condition(const QsPenalty& rho) {
    const auto& P = rho.polyhedron();
    const Eigen::Index m = rho.m();
    if (P.axis_aligned() && rho.M_is_diagonal()) {
        std::vector<bool> bounded(static_cast<std::size_t>(m), false);
        for (Eigen::Index c : P.coords()) bounded[c] = true;
        const double scale = rho.M().size() > 0 ? rho.M().diagonal().cwiseAbs().maxCoeff() : 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (!bounded[i] && !(rho.M()(i, i) > kRankTol * std::max(scale, 1.0))) return false;
        }
        return true;
    }
    Mat stacked(m + P.rows(), m);
    stacked << rho.M(), P.matrix().transpose();
    return rank_check(stacked, kRankTol) == m;
}

}  // namespace plq
