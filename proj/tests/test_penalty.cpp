#include "oracles.hpp"

#include "plq/error.hpp"
#include "plq/penalty.hpp"

#include <doctest.h>

using namespace plq;

namespace {
Vec v1(double x) { return Vec::Constant(1, x); }
Mat m1(double x) { return Mat::Constant(1, 1, x); }
}  // namespace

TEST_CASE("make_penalty basic objects") {
    const auto l2 = make_penalty(IntervalProduct::whole_space(1), m1(1), v1(0), m1(1));
    CHECK(l2.ell() == 0);
    CHECK(evaluate(l2, v1(3)) == doctest::Approx(4.5));
    const auto l1 = make_penalty(IntervalProduct::uniform(1, -1, 1), m1(0), v1(0), m1(1));
    CHECK(l1.ell() == 2);
    CHECK(evaluate(l1, v1(-2.5)) == doctest::Approx(2.5));
    CHECK_THROWS_AS(make_penalty(IntervalProduct::whole_space(1), m1(1), v1(0), Mat::Zero(1, 2)), Error);
    try {
        make_penalty(IntervalProduct::whole_space(1), m1(1), v1(0), m1(0));
        FAIL("expected NonInjectiveB");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonInjectiveB);
    }
    try {
        make_penalty(IntervalProduct::whole_space(1), m1(-1), v1(0), m1(1));
        FAIL("expected NonPsdM");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonPsdM);
    }
}

TEST_CASE("catalogue structure") {
    CatalogueParams p;
    p.kappa = 1.0;
    const auto h = make_catalogue(PenaltyKind::huber, p, 1);
    REQUIRE(h.intervals().has_value());
    CHECK(h.intervals()->lower(0) == -1.0);
    CHECK(h.intervals()->upper(0) == 1.0);
    CHECK(h.M()(0, 0) == 1.0);
    CHECK(h.B()(0, 0) == 1.0);
    CHECK(h.b()(0) == 0.0);

    p.eps = 0.5;
    const auto v = make_catalogue(PenaltyKind::vapnik, p, 2);
    CHECK(v.B().rows() == 4);
    CHECK(v.B().cols() == 2);
    Mat Bref = Mat::Zero(4, 2);
    Bref(0, 0) = 1;
    Bref(1, 0) = -1;
    Bref(2, 1) = 1;
    Bref(3, 1) = -1;
    CHECK((v.B() - Bref).norm() == 0.0);
    CHECK((v.b() + Vec::Constant(4, 0.5)).norm() == 0.0);
    CHECK(v.M().isZero());

    const auto s = make_catalogue(PenaltyKind::silf, p, 1);
    CHECK(s.M().isIdentity());
    CHECK(s.intervals()->lower.isZero());
    CHECK(s.intervals()->upper.isOnes());

    p.kappa = -1.0;
    CHECK_THROWS_AS(make_catalogue(PenaltyKind::huber, p, 1), Error);
}

TEST_CASE("evaluate examples") {
    CatalogueParams p;
    p.kappa = 1.0;
    CHECK(evaluate(make_catalogue(PenaltyKind::huber, p, 1), v1(2)) == doctest::Approx(1.5));
    CHECK(evaluate(make_catalogue(PenaltyKind::l1, p, 1), v1(0)) == 0.0);
    p.eps = 0.5;
    CHECK(evaluate(make_catalogue(PenaltyKind::vapnik, p, 1), v1(1.2)) == doctest::Approx(0.7));
}

TEST_CASE("sum and scale calculus") {
    CatalogueParams p;
    const auto l2 = make_catalogue(PenaltyKind::l2, p, 1);
    const auto l1 = make_catalogue(PenaltyKind::l1, p, 1);
    CHECK(evaluate(sum(l2, scale(l1, 0.5)), v1(1)) == doctest::Approx(1.0));
    const auto h = make_catalogue(PenaltyKind::huber, p, 1);
    CHECK(evaluate(sum(h, h), v1(2)) == doctest::Approx(3.0));
    const auto zero = make_penalty(IntervalProduct::uniform(1, 0, 0), m1(0), v1(0), m1(1));
    CHECK(evaluate(sum(h, zero), v1(2.7)) == doctest::Approx(evaluate(h, v1(2.7))));
    CHECK_THROWS_AS(sum(h, make_catalogue(PenaltyKind::l2, p, 2)), Error);

    std::mt19937_64 rng(4);
    p.eps = 0.3;
    const auto a = make_catalogue(PenaltyKind::vapnik, p, 3);
    const auto b = make_catalogue(PenaltyKind::elastic_net, CatalogueParams{1.0, 0.0, 0.7}, 3);
    const auto ab = sum(a, b);
    for (int i = 0; i < 100; ++i) {
        const Vec y = oracle::random_vec(3, rng, 2.0);
        CHECK(std::abs(evaluate(ab, y) - evaluate(a, y) - evaluate(b, y)) <= 1e-12);
    }
}

TEST_CASE("precompose_affine") {
    CatalogueParams p;
    const auto l2 = make_catalogue(PenaltyKind::l2, p, 1);
    CHECK(evaluate(precompose_affine(l2, m1(2), v1(0)), v1(1)) == doctest::Approx(2.0));
    const auto h = make_catalogue(PenaltyKind::huber, p, 2);
    const auto same = precompose_affine(h, Mat::Identity(2, 2), Vec::Zero(2));
    const Vec y(Eigen::Vector2d(0.3, -4.0));
    CHECK(evaluate(same, y) == doctest::Approx(evaluate(h, y)));
    Mat S(2, 2);
    S << 1, 1, 1, 1;
    CHECK_THROWS_AS(precompose_affine(h, S, Vec::Zero(2)), Error);
    // huber with R^{-1/2}
    const Mat Rih = Mat::Identity(2, 2) * 0.5;
    const Vec t(Eigen::Vector2d(1.0, -1.0));
    const auto hv = precompose_affine(h, Rih, t);
    CHECK(evaluate(hv, y) == doctest::Approx(oracle::huber(0.5 * 0.3 + 1.0, 1.0) + oracle::huber(-2.0 - 1.0, 1.0)));
}

TEST_CASE("closed form matches dual interior point") {
    std::mt19937_64 rng(2024);
    const CatalogueParams p{1.3, 0.4, 0.6};
    for (auto kind : {PenaltyKind::l2, PenaltyKind::l1, PenaltyKind::huber, PenaltyKind::vapnik, PenaltyKind::hinge,
                      PenaltyKind::elastic_net, PenaltyKind::soft_hinge, PenaltyKind::silf}) {
        const auto rho = make_catalogue(kind, p, 2);
        for (int i = 0; i < 20; ++i) {
            const Vec y = oracle::random_vec(2, rng, 3.0);
            const double cf = evaluate(rho, y, EvalMethod::closed_form);
            CHECK(std::abs(cf - evaluate(rho, y, EvalMethod::dual_ip)) <= 1e-8 * (1.0 + std::abs(cf)));
            CHECK(std::abs(cf - evaluate(rho, y, EvalMethod::separable)) <= 1e-12 * (1.0 + std::abs(cf)));
        }
    }
}

TEST_CASE("dual evaluation outside the domain is infinite") {
    const auto half = make_penalty(IntervalProduct(v1(0), v1(kInf)), m1(0), v1(0), m1(1));
    CHECK(std::abs(evaluate(half, v1(-1.0), EvalMethod::dual_ip)) <= 1e-12);
    CHECK(std::isinf(evaluate(half, v1(1.0), EvalMethod::dual_ip)));
}

TEST_CASE("primal representation") {
    CatalogueParams p;
    const auto h = make_catalogue(PenaltyKind::huber, p, 1);
    CHECK(evaluate_primal(h, v1(0.5)) == doctest::Approx(0.125));
    CHECK(evaluate_primal(h, v1(3)) == doctest::Approx(2.5));
    CHECK(evaluate_primal_ball(Mat::Identity(2, 2), 1.0, Vec(Eigen::Vector2d(3, 4))) == doctest::Approx(4.5));
    std::mt19937_64 rng(9);
    for (int i = 0; i < 30; ++i) {
        const Vec y = oracle::random_vec(1, rng, 3.0);
        CHECK(std::abs(evaluate_primal(h, y) - evaluate(h, y)) <= 1e-10);
    }
    const auto l1 = make_catalogue(PenaltyKind::l1, p, 1);
    CHECK_THROWS_AS(evaluate_primal(l1, v1(1)), Error);
}

TEST_CASE("project_box") {
    const auto U = IntervalProduct::uniform(2, -1, 1);
    const Vec z = project_box(Vec(Eigen::Vector2d(2, -3)), U, Vec::Ones(2));
    CHECK(z(0) == 1.0);
    CHECK(z(1) == -1.0);
    const Vec in(Eigen::Vector2d(0.2, -0.4));
    CHECK(project_box(in, U, Vec::Ones(2)) == in);
    CHECK(project_box(v1(0.5), IntervalProduct::uniform(1, -1, 1), v1(4))(0) == 0.5);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unif(-1, 1);
    const Vec W(Eigen::Vector2d(2.0, 0.5));
    for (int k = 0; k < 10; ++k) {
        const Vec y = oracle::random_vec(2, rng, 3.0);
        const Vec p = project_box(y, U, W);
        for (int i = 0; i < 50; ++i) {
            const Vec x(Eigen::Vector2d(unif(rng), unif(rng)));
            CHECK((x - p).cwiseProduct(W).dot(y - p) <= 1e-12);
        }
    }
}

TEST_CASE("coercivity") {
    const CatalogueParams p{1.0, 0.3, 0.5};
    CHECK(is_coercive(make_catalogue(PenaltyKind::huber, p, 1)).coercive);
    CHECK(is_coercive(make_catalogue(PenaltyKind::vapnik, p, 1)).coercive);
    CHECK(is_coercive(make_catalogue(PenaltyKind::l2, p, 2)).coercive);
    const auto hinge = is_coercive(make_catalogue(PenaltyKind::hinge, p, 1));
    CHECK_FALSE(hinge.coercive);
    REQUIRE(hinge.direction.size() == 1);
    CHECK(hinge.direction(0) < 0.0);
}

TEST_CASE("domain check") {
    const CatalogueParams p;
    CHECK(domain_check(make_catalogue(PenaltyKind::l1, p, 1)) == DomainKind::finite_everywhere);
    CHECK(domain_check(make_catalogue(PenaltyKind::hinge, p, 1)) == DomainKind::finite_everywhere);
    const auto half = make_penalty(IntervalProduct(v1(0), v1(kInf)), m1(0), v1(0), m1(1));
    CHECK(domain_check(half) == DomainKind::restricted);
}

TEST_CASE("interior point condition") {
    const CatalogueParams p;
    CHECK(check_ip_condition(make_catalogue(PenaltyKind::l2, p, 1)));
    CHECK(check_ip_condition(make_catalogue(PenaltyKind::huber, p, 1)));
    const auto flat = make_penalty(IntervalProduct::whole_space(1), m1(0), v1(0), m1(1));
    CHECK_FALSE(check_ip_condition(flat));
}

TEST_CASE("kind names round trip") {
    for (auto kind : {PenaltyKind::l2, PenaltyKind::l1, PenaltyKind::huber, PenaltyKind::vapnik, PenaltyKind::hinge,
                      PenaltyKind::elastic_net, PenaltyKind::soft_hinge, PenaltyKind::silf}) {
        CHECK(parse_penalty_kind(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_penalty_kind("nope"), Error);
}
