#include "oracles.hpp"

#include "plq/error.hpp"
#include "plq/ip_solver.hpp"

#include <doctest.h>

using namespace plq;

namespace {

struct Toy {
    Mat H, G, R, Q;
    Vec z, mu;
};

Toy toy(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Toy t;
    t.H = oracle::random_mat(m, n, rng);
    t.G = oracle::random_mat(n, n, rng) + 3.0 * Mat::Identity(n, n);
    t.R = oracle::random_spd(m, rng);
    t.Q = oracle::random_spd(n, rng);
    t.z = oracle::random_vec(m, rng, 2.0);
    t.mu = oracle::random_vec(n, rng);
    return t;
}

PlqProblem toy_problem(const Toy& t, PenaltyKind v, PenaltyKind w, const CatalogueParams& p = {1.0, 0.3, 0.0}) {
    return assemble_problem(make_catalogue(v, p, t.z.size()), make_catalogue(w, p, t.mu.size()), t.H, t.G, t.R, t.Q,
                            t.z, t.mu);
}

Mat inv_sqrt(const Mat& A) {
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

double affine_residual(const PlqProblem& p, const KktState& st) {
    const auto& o = p.objective;
    const Mat A = o.polyhedron().matrix();
    double r = (o.B().transpose() * st.u).cwiseAbs().maxCoeff();
    r = std::max(r, (o.B() * st.y - o.M() * st.u - A * st.q + o.b()).cwiseAbs().maxCoeff());
    if (st.s.size() > 0) r = std::max(r, (st.s + A.transpose() * st.u - o.polyhedron().rhs()).cwiseAbs().maxCoeff());
    return r;
}

KktState random_state(const PlqProblem& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pos(0.5, 2.0);
    KktState st;
    st.s = Vec::NullaryExpr(p.ell(), [&](Eigen::Index) { return pos(rng); });
    st.q = Vec::NullaryExpr(p.ell(), [&](Eigen::Index) { return pos(rng); });
    st.u = oracle::random_vec(p.m(), rng);
    st.y = oracle::random_vec(p.n(), rng);
    return st;
}

}  // namespace

TEST_CASE("kkt residual matches direct formula") {
    const auto t = toy(3, 2, 1);
    const auto p = toy_problem(t, PenaltyKind::vapnik, PenaltyKind::huber);
    DenseKktSystem sys(p.objective);
    std::mt19937_64 rng(5);
    const auto st = random_state(p, rng);
    const auto r = kkt_residual(sys, st, 0.3);
    const Mat A = p.objective.polyhedron().matrix();
    const Vec a = p.objective.polyhedron().rhs();
    CHECK((r.r1 - (st.s + A.transpose() * st.u - a)).norm() <= 1e-12);
    CHECK((r.r2 - (st.s.cwiseProduct(st.q) - Vec::Constant(p.ell(), 0.3))).norm() <= 1e-12);
    CHECK((r.r3 - (p.objective.B() * st.y - p.objective.M() * st.u - A * st.q + p.objective.b())).norm() <= 1e-12);
    CHECK((r.r4 - p.objective.B().transpose() * st.u).norm() <= 1e-12);
}

TEST_CASE("newton step matches dense LU of the full system") {
    const auto t = toy(3, 2, 2);
    for (auto v : {PenaltyKind::l1, PenaltyKind::vapnik, PenaltyKind::huber}) {
        const auto p = toy_problem(t, v, PenaltyKind::l2);
        DenseKktSystem sys(p.objective);
        std::mt19937_64 rng(6);
        const auto st = random_state(p, rng);
        const double gamma = 0.05;
        const auto d = newton_step(sys, st, gamma);
        const auto& o = p.objective;
        const auto ref = oracle::dense_newton(o.polyhedron().matrix(), o.polyhedron().rhs(), o.M(), o.b(), o.B(), st.s,
                                              st.q, st.u, st.y, gamma);
        CHECK((d.ds - ref.ds).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((d.dq - ref.dq).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((d.du - ref.du).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((d.dy - ref.dy).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(linearized_residual(sys, st, d, gamma).stacked().cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("newton step vanishes on the central path") {
    const auto t = toy(3, 2, 3);
    const auto p = toy_problem(t, PenaltyKind::l1, PenaltyKind::l2);
    DenseKktSystem sys(p.objective);
    auto st = init_strictly_feasible(p, InitStrategy::l1_l2);
    const double gamma = 0.1;
    for (int i = 0; i < 60; ++i) {
        const auto d = newton_step(sys, st, gamma);
        double alpha = 1.0;
        for (Eigen::Index j = 0; j < st.s.size(); ++j) {
            if (d.ds(j) < 0) alpha = std::min(alpha, -0.9 * st.s(j) / d.ds(j));
            if (d.dq(j) < 0) alpha = std::min(alpha, -0.9 * st.q(j) / d.dq(j));
        }
        st.s += alpha * d.ds;
        st.q += alpha * d.dq;
        st.u += alpha * d.du;
        st.y += alpha * d.dy;
    }
    REQUIRE(kkt_residual(sys, st, gamma).stacked().cwiseAbs().maxCoeff() <= 1e-12);
    const auto d = newton_step(sys, st, gamma);
    CHECK(d.ds.norm() + d.dq.norm() + d.du.norm() + d.dy.norm() <= 1e-10);
}

TEST_CASE("quadratic problem is one Newton step") {
    const auto t = toy(4, 3, 4);
    const auto p = toy_problem(t, PenaltyKind::l2, PenaltyKind::l2);
    CHECK(p.ell() == 0);
    const auto r = solve(p);
    const Mat Ri = t.R.inverse(), Qi = t.Q.inverse();
    const Mat lhs = t.H.transpose() * Ri * t.H + t.G.transpose() * Qi * t.G;
    const Vec rhs = t.H.transpose() * Ri * t.z + t.G.transpose() * Qi * t.mu;
    const Vec ref = lhs.ldlt().solve(rhs);
    CHECK((r.y - ref).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(r.stats.iterations <= 2);
    // objective is the half-weighted least squares
    const Vec a = inv_sqrt(t.R) * (t.H * ref - t.z), b = inv_sqrt(t.Q) * (t.G * ref - t.mu);
    CHECK(objective_value(p, ref) == doctest::Approx(0.5 * a.squaredNorm() + 0.5 * b.squaredNorm()));
}

TEST_CASE("l1-l2 solve matches grid search") {
    const auto t = toy(3, 2, 12);
    const auto p = toy_problem(t, PenaltyKind::l1, PenaltyKind::l2);
    const Mat Rih = inv_sqrt(t.R), Qih = inv_sqrt(t.Q);
    auto f = [&](double y0, double y1) {
        const Vec y(Eigen::Vector2d(y0, y1));
        return (Rih * (t.H * y - t.z)).lpNorm<1>() + 0.5 * (Qih * (t.G * y - t.mu)).squaredNorm();
    };
    const auto r = solve(p, {}, InitStrategy::l1_l2);
    CHECK(objective_value(p, r.y) == doctest::Approx(f(r.y(0), r.y(1))).epsilon(1e-12));
    const auto g = oracle::grid_min_2d(f, Eigen::Vector2d(-10, -10), Eigen::Vector2d(10, 10));
    CHECK(std::abs(objective_value(p, r.y) - f(g(0), g(1))) <= 1e-5);
    CHECK(objective_value(p, r.y) <= f(g(0), g(1)) + 1e-9);
}

TEST_CASE("vapnik-huber objective is the sum of catalogue terms") {
    const auto t = toy(3, 2, 13);
    const CatalogueParams par{1.0, 0.3, 0.0};
    const auto p = toy_problem(t, PenaltyKind::vapnik, PenaltyKind::huber, par);
    const Mat Rih = inv_sqrt(t.R), Qih = inv_sqrt(t.Q);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 10; ++i) {
        const Vec y = oracle::random_vec(2, rng, 2.0);
        const Vec a = Rih * (t.H * y - t.z), b = Qih * (t.G * y - t.mu);
        double ref = 0;
        for (Eigen::Index k = 0; k < a.size(); ++k) ref += oracle::vapnik(a(k), 0.3);
        for (Eigen::Index k = 0; k < b.size(); ++k) ref += oracle::huber(b(k), 1.0);
        CHECK(objective_value(p, y) == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("structured starting points are strictly feasible") {
    const auto t = toy(3, 2, 21);
    const auto p41 = toy_problem(t, PenaltyKind::l1, PenaltyKind::l2);
    const auto s41 = init_strictly_feasible(p41, InitStrategy::l1_l2);
    CHECK(s41.s.minCoeff() > 0);
    CHECK(s41.q.minCoeff() > 0);
    CHECK(s41.s.isOnes());
    CHECK(s41.u.isZero());
    CHECK((t.G * s41.y - t.mu).norm() <= 1e-12);
    CHECK(affine_residual(p41, s41) <= 1e-12);

    const auto p42 = toy_problem(t, PenaltyKind::vapnik, PenaltyKind::huber, {2.0, 0.3, 0.0});
    const auto s42 = init_strictly_feasible(p42, InitStrategy::vapnik_huber);
    CHECK(s42.s.minCoeff() > 0);
    CHECK(s42.q.minCoeff() > 0);
    CHECK(s42.y.isZero());
    CHECK(affine_residual(p42, s42) <= 1e-12);
    // vapnik slacks are 1/2, huber slacks are kappa
    const Eigen::Index nv = 2 * 2 * t.z.size();
    CHECK(std::count_if(s42.s.begin(), s42.s.end(), [](double v) { return std::abs(v - 0.5) <= 1e-12; }) == nv);
    CHECK(std::count_if(s42.s.begin(), s42.s.end(), [](double v) { return std::abs(v - 2.0) <= 1e-12; }) ==
          p42.ell() - nv);

    const auto g = init_strictly_feasible(p42, InitStrategy::generic);
    CHECK(g.s.minCoeff() > 0);
    CHECK(g.q.minCoeff() > 0);
    CHECK(affine_residual(p42, g) <= 1e-10);
}

TEST_CASE("converged solves certify KKT and shrink the gap") {
    const auto t = toy(5, 3, 33);
    const PenaltyKind kinds[] = {PenaltyKind::l2, PenaltyKind::l1, PenaltyKind::huber, PenaltyKind::vapnik};
    for (auto v : kinds) {
        for (auto w : kinds) {
            CAPTURE(to_string(v));
            CAPTURE(to_string(w));
            const auto p = toy_problem(t, v, w);
            int accepted = 0;
            SolveOptions opts;
            opts.observer = [&](int, const KktState& st) {
                if (st.s.size() > 0) {
                    CHECK(st.s.minCoeff() > 0);
                    CHECK(st.q.minCoeff() > 0);
                }
                ++accepted;
            };
            const auto r = solve(p, opts);
            CHECK(r.stats.status == SolveStatus::converged);
            DenseKktSystem sys(p.objective);
            const auto c = kkt_certificate(sys, r.state);
            CHECK(c.worst() <= 1e-7);
            CHECK(c.complementarity <= 1e-7);
            const auto& gap = r.stats.gap_trajectory;
            for (std::size_t i = 1; i < gap.size(); ++i) {
                if (gap[i - 1] > 0) CHECK(gap[i] <= 0.95 * gap[i - 1]);
            }
            CHECK(dual_value(p, r.y, r.u) <= objective_value(p, r.y) + 1e-8);
            CHECK(objective_value(p, r.y) - dual_value(p, r.y, r.u) <= 1e-7 * (1.0 + std::abs(objective_value(p, r.y))));
        }
    }
}

TEST_CASE("singular G and unbounded problems are rejected") {
    auto t = toy(3, 2, 40);
    t.G = Mat::Ones(2, 2);
    CHECK_THROWS_AS(toy_problem(t, PenaltyKind::l1, PenaltyKind::l2), Error);

    // a hinge penalty alone on y has no minimizer
    const auto hinge = make_catalogue(PenaltyKind::hinge, {}, 1);
    const auto flat = make_penalty(IntervalProduct::whole_space(1), Mat::Zero(1, 1), Vec::Zero(1), Mat::Identity(1, 1));
    CHECK_THROWS_AS(make_problem(flat), Error);
    const auto p = make_problem(hinge);
    CHECK_THROWS_AS(solve(p), Error);
}

TEST_CASE("multipliers_for") {
    const auto box = Polyhedron::from_intervals(IntervalProduct(Vec(Eigen::Vector3d(-1, 0, -kInf)),
                                                                Vec(Eigen::Vector3d(1, kInf, kInf))));
    const auto q = multipliers_for(box, Vec(Eigen::Vector3d(0.5, -2.0, 0.0)), 1e-12);
    REQUIRE(q.has_value());
    CHECK(q->minCoeff() >= 0);
    CHECK((box.apply(*q) - Vec(Eigen::Vector3d(0.5, -2.0, 0.0))).norm() <= 1e-14);
    CHECK_FALSE(multipliers_for(box, Vec(Eigen::Vector3d(0.5, 2.0, 0.0)), 1e-12).has_value());
    CHECK_FALSE(multipliers_for(box, Vec(Eigen::Vector3d(0.5, -2.0, 1.0)), 1e-12).has_value());
}
