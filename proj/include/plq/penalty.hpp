#pragma once

#include "plq/linalg.hpp"

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Product of closed intervals [lower_i, upper_i]; infinite bounds allowed.
struct IntervalProduct {
    Vec lower;
    Vec upper;

    IntervalProduct() = default;
    IntervalProduct(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {}

    static IntervalProduct whole_space(Eigen::Index m);
    static IntervalProduct uniform(Eigen::Index m, double lo, double hi);

    Eigen::Index dim() const { return lower.size(); }
    bool contains(const Vec& u, double tol = 0.0) const;
    bool is_bounded() const;

    /// A point of the interval product that lies in the relative interior of
    /// every nondegenerate coordinate: 0 when 0 is interior, otherwise the
    /// midpoint of finite bounds or one unit inside a single finite bound.
    Vec interior_point() const;
};

IntervalProduct product(const IntervalProduct& a, const IntervalProduct& b);

/// U = {u : A^T u <= a}. When derived from an IntervalProduct every column of A
/// is +-e_i; the axis-aligned fast paths below rely on that.
class Polyhedron {
public:
    Polyhedron() = default;
    /// General polyhedron; witness must satisfy A^T witness <= a.
    Polyhedron(Mat A, Vec a, Vec witness);

    /// Upper-bound rows for every finite upper bound (coordinate order),
    /// followed by lower-bound rows for every finite lower bound.
    static Polyhedron from_intervals(const IntervalProduct& box);

    Eigen::Index dim() const { return dim_; }
    Eigen::Index rows() const { return a_.size(); }
    const Vec& rhs() const { return a_; }
    const Vec& witness() const { return witness_; }
    bool axis_aligned() const { return axis_aligned_; }
    /// Axis-aligned rows only: constrained coordinate and sign (+1 upper, -1 lower).
    const std::vector<Eigen::Index>& coords() const { return coord_; }
    const std::vector<double>& signs() const { return sign_; }

    Mat matrix() const;                       // A, m x ell
    Vec apply(const Vec& q) const;            // A q
    Vec apply_transpose(const Vec& u) const;  // A^T u
    /// Diagonal of A diag(d) A^T (axis-aligned only).
    Vec gram_diagonal(const Vec& d) const;
    Mat gram(const Vec& d) const;             // A diag(d) A^T

private:
    Eigen::Index dim_ = 0;
    Mat A_;
    Vec a_;
    Vec witness_;
    bool axis_aligned_ = false;
    std::vector<Eigen::Index> coord_;
    std::vector<double> sign_;
};

enum class PenaltyKind { l2, l1, huber, vapnik, hinge, elastic_net, soft_hinge, silf };

std::string_view to_string(PenaltyKind kind);
PenaltyKind parse_penalty_kind(std::string_view name);

struct CatalogueParams {
    double kappa = 1.0;
    double eps = 0.0;
    double lambda = 0.0;
};

/// weight * sum_i phi_kind((S y + t)_i), the closed form carried along by the
/// construction calculus.
struct ClosedFormTerm {
    PenaltyKind kind = PenaltyKind::l2;
    CatalogueParams params;
    double weight = 1.0;
    Mat S;
    Vec t;
};

/// rho(y) = sup_{u in U} <u, b + B y> - 1/2 u^T M u.
class QsPenalty {
public:
    QsPenalty() = default;

    Eigen::Index m() const { return M_.rows(); }
    Eigen::Index n() const { return B_.cols(); }
    Eigen::Index ell() const { return poly_.rows(); }

    const std::optional<IntervalProduct>& intervals() const { return U_; }
    const Polyhedron& polyhedron() const { return poly_; }
    const Mat& M() const { return M_; }
    const Vec& b() const { return b_; }
    const Mat& B() const { return B_; }

    /// Closed-form decomposition, empty when none is known.
    const std::vector<ClosedFormTerm>& closed_form() const { return terms_; }
    /// The catalogue kind when this is an unmodified catalogue penalty.
    std::optional<PenaltyKind> catalogue_kind() const;
    /// True when 0 lies in U, which makes rho nonnegative.
    bool is_penalty() const { return zero_in_U_; }
    bool M_is_diagonal() const { return M_diagonal_; }

private:
    friend QsPenalty make_penalty(IntervalProduct, Mat, Vec, Mat);
    friend QsPenalty make_polyhedral_penalty(Polyhedron, Mat, Vec, Mat);
    friend QsPenalty make_catalogue(PenaltyKind, const CatalogueParams&, Eigen::Index);
    friend QsPenalty sum(const QsPenalty&, const QsPenalty&);
    friend QsPenalty scale(const QsPenalty&, double);
    friend QsPenalty compose_affine_unchecked(const QsPenalty&, const Mat&, const Vec&);

    std::optional<IntervalProduct> U_;
    Polyhedron poly_;
    Mat M_;
    Vec b_;
    Mat B_;
    std::vector<ClosedFormTerm> terms_;
    bool zero_in_U_ = false;
    bool M_diagonal_ = false;
};

/// Validates M symmetric PSD, B injective and U nonempty.
QsPenalty make_penalty(IntervalProduct U, Mat M, Vec b, Mat B);
QsPenalty make_polyhedral_penalty(Polyhedron U, Mat M, Vec b, Mat B);

/// Separable catalogue penalty on R^dim, built per coordinate.
QsPenalty make_catalogue(PenaltyKind kind, const CatalogueParams& params, Eigen::Index dim);

/// rho1 + rho2 on a shared input space.
QsPenalty sum(const QsPenalty& rho1, const QsPenalty& rho2);

/// alpha * rho for alpha > 0 (U scaled by alpha, M by 1/alpha).
QsPenalty scale(const QsPenalty& rho, double alpha);

/// y -> rho(S y + t); requires null(B S) = {0}.
QsPenalty precompose_affine(const QsPenalty& rho, const Mat& S, const Vec& t);

/// Same map without the injectivity check, for building blocks of a larger
/// stacked penalty whose injectivity is verified once assembled.
QsPenalty compose_affine_unchecked(const QsPenalty& rho, const Mat& S, const Vec& t);

/// Scalar closed form of a catalogue kind.
double catalogue_value(PenaltyKind kind, const CatalogueParams& params, double t);

enum class EvalMethod {
    automatic,    ///< closed form, else separable sup, else dual interior point
    closed_form,  ///< catalogue closed forms only (throws if unavailable)
    separable,    ///< coordinate-wise sup; needs diagonal M and interval U
    dual_ip,      ///< concave maximization over U by the interior-point solver
};

/// Value of rho at y; +inf when y is outside dom(rho).
double evaluate(const QsPenalty& rho, const Vec& y, EvalMethod method = EvalMethod::automatic);

/// Coordinate-wise projection onto an interval product in a diagonal metric.
Vec project_box(const Vec& y, const IntervalProduct& U, const Vec& metric_diag);

/// 1/2 y^T M^-1 y - inf_{u in U} 1/2 ||u - M^-1 y||_M^2 for B = I, b = 0, M > 0.
double evaluate_primal(const QsPenalty& rho, const Vec& y);

/// Same representation for U the Euclidean ball of the given radius and
/// M = alpha I (the multivariate Huber variant).
double evaluate_primal_ball(const Mat& M, double radius, const Vec& y);

struct CoercivityCertificate {
    enum class Witness { interior, cone_system, direction };

    bool coercive = false;
    Witness witness = Witness::interior;
    /// Optimal values of max +-e_j^T y over K intersected with the unit box
    /// (cone_system witness), 2n entries.
    std::vector<double> lp_optima;
    /// Nonzero y in K (direction witness).
    Vec direction;
};

CoercivityCertificate is_coercive(const QsPenalty& rho);

enum class DomainKind { finite_everywhere, restricted };

DomainKind domain_check(const QsPenalty& rho);

/// null(M) intersect null(A^T) = {0}.
bool check_ip_condition(const QsPenalty& rho);

}  // namespace plq
