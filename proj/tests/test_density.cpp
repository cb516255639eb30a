#include "oracles.hpp"

#include "plq/density.hpp"
#include "plq/error.hpp"

#include <doctest.h>

#include <numeric>

using namespace plq;

namespace {

struct Moments {
    double mass, mean, second;
};

Moments standardized_moments(const QsPenalty& rho, double c1, double T) {
    auto f = [&](double t, int k) { return std::pow(t, k) * std::exp(-evaluate(rho, Vec::Constant(1, t))) / c1; };
    return {oracle::simpson_line([&](double t) { return f(t, 0); }, T),
            oracle::simpson_line([&](double t) { return f(t, 1); }, T),
            oracle::simpson_line([&](double t) { return f(t, 2); }, T)};
}

}  // namespace

TEST_CASE("normal cdf") {
    CHECK(std_normal_cdf(0.0) == 0.5);
    CHECK(std_normal_cdf(kInf) == 1.0);
    const double ref = 0.5 + oracle::simpson([](double x) { return std::exp(-0.5 * x * x); }, 0.0, 1.0, 1e-15) /
                                 std::sqrt(2.0 * M_PI);
    CHECK(std::abs(std_normal_cdf(1.0) - ref) <= 1e-12);
    CHECK(std::abs(std_normal_cdf(1.0) - 0.8413447460685429) <= 1e-12);
}

TEST_CASE("huber constants") {
    const auto c = huber_constants(1.0);
    // frozen from an independent adaptive quadrature
    CHECK(std::abs(c.m0 - 2.924310103209564) <= 1e-8);
    CHECK(std::abs(c.m2 - 6.563494061485366) <= 1e-8);
    const double m0 = oracle::simpson_line([](double y) { return std::exp(-oracle::huber(y, 1.0)); }, 60.0);
    const double m2 = oracle::simpson_line([](double y) { return y * y * std::exp(-oracle::huber(y, 1.0)); }, 80.0);
    CHECK(std::abs(c.m0 - m0) <= 1e-8);
    CHECK(std::abs(c.m2 - m2) <= 1e-8);
    CHECK(c.c2 == doctest::Approx(std::sqrt(c.m2 / c.m0)));
    CHECK(c.c1 == doctest::Approx(c.m0 / c.c2));

    const auto big = huber_constants(40.0);
    CHECK(big.c1 == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-10));
    CHECK(big.c2 == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("vapnik constants") {
    const auto c = vapnik_constants(0.5);
    CHECK(c.m0 == doctest::Approx(3.0));
    CHECK(c.m2 == doctest::Approx(6.583333333333333));
    const double m2 = oracle::simpson_line([](double y) { return y * y * std::exp(-oracle::vapnik(y, 0.5)); }, 80.0);
    CHECK(std::abs(c.m2 - m2) <= 1e-8);
    const auto z = vapnik_constants(0.0);
    CHECK(z.m0 == doctest::Approx(2.0));
    CHECK(z.m2 == doctest::Approx(4.0));
}

TEST_CASE("generic constants") {
    const CatalogueParams p;
    const auto g = generic_constants(make_catalogue(PenaltyKind::l2, p, 1));
    CHECK(g.c1 == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-9));
    CHECK(g.c2 == doctest::Approx(1.0).epsilon(1e-9));
    const auto h = generic_constants(make_catalogue(PenaltyKind::huber, p, 1));
    const auto hc = huber_constants(1.0);
    CHECK(std::abs(h.c1 - hc.c1) <= 1e-8);
    CHECK(std::abs(h.c2 - hc.c2) <= 1e-8);

    // l1 with B = sqrt 2 has unit variance
    const auto l1s = make_penalty(IntervalProduct::uniform(1, -1, 1), Mat::Zero(1, 1), Vec::Zero(1),
                                  Mat::Constant(1, 1, std::sqrt(2.0)));
    const auto c = generic_constants(l1s);
    CHECK(c.m2 / c.m0 == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(generic_constants(make_catalogue(PenaltyKind::hinge, p, 1)), Error);
    CatalogueParams sh{1.0, 0.5, 0.0};
    CHECK_THROWS_AS(generic_constants(make_catalogue(PenaltyKind::soft_hinge, sh, 1)), Error);
}

TEST_CASE("standardized densities have unit mass and variance") {
    struct Case {
        PenaltyKind kind;
        CatalogueParams p;
    };
    const Case cases[] = {{PenaltyKind::l2, {}},
                          {PenaltyKind::l1, {}},
                          {PenaltyKind::huber, {0.5, 0, 0}},
                          {PenaltyKind::huber, {1.0, 0, 0}},
                          {PenaltyKind::huber, {2.0, 0, 0}},
                          {PenaltyKind::vapnik, {1, 0.1, 0}},
                          {PenaltyKind::vapnik, {1, 0.45, 0}},
                          {PenaltyKind::vapnik, {1, 1.0, 0}}};
    for (const auto& cs : cases) {
        CAPTURE(to_string(cs.kind));
        const auto block = make_block(cs.kind, cs.p);
        const auto m = standardized_moments(standardized(block), block.constants.c1, 40.0);
        CHECK(std::abs(m.mass - 1.0) <= 1e-6);
        CHECK(std::abs(m.mean) <= 1e-9);
        CHECK(std::abs(m.second - 1.0) <= 1e-4);
    }
}

TEST_CASE("penalty_moment quadrature") {
    const CatalogueParams p{1.0, 0.45, 0};
    const auto v = make_catalogue(PenaltyKind::vapnik, p, 1);
    CHECK(std::abs(penalty_moment(v, 0) - 2.0 * 1.45) <= 1e-12);
    CHECK(std::abs(penalty_moment(v, 2) - vapnik_constants(0.45).m2) <= 1e-10);
}

TEST_CASE("density construction") {
    const CatalogueParams p;
    std::vector<DensityBlock> g(3, make_block(PenaltyKind::l2, p));
    const auto d = make_density(g, Vec::Zero(3), Mat::Identity(3, 3));
    CHECK(log_density(d, Vec::Zero(3)) == doctest::Approx(-1.5 * std::log(2.0 * M_PI)));

    std::mt19937_64 rng(8);
    const Mat Q = oracle::random_spd(3, rng);
    const Vec mu = oracle::random_vec(3, rng);
    const auto dq = make_density(g, mu, Q);
    for (int i = 0; i < 5; ++i) {
        const Vec y = oracle::random_vec(3, rng, 2.0);
        const Vec r = y - mu;
        const double ref = -0.5 * r.dot(Q.llt().solve(r)) - 1.5 * std::log(2.0 * M_PI) - 0.5 * std::log(Q.determinant());
        CHECK(std::abs(log_density(dq, y) - ref) <= 1e-12 * (1.0 + std::abs(ref)));
    }

    // Huber block scaled by Q = 4 has variance about 4
    const auto hb = make_block(PenaltyKind::huber, p);
    const auto dh = make_density({hb}, Vec::Zero(1), Mat::Constant(1, 1, 4.0));
    const double var = oracle::simpson_line(
        [&](double y) { return y * y * std::exp(log_density(dh, Vec::Constant(1, y))); }, 80.0);
    CHECK(std::abs(var - 4.0) <= 1e-3);

    const auto dh2 = make_density({hb, hb}, Vec::Zero(2), Mat::Identity(2, 2));
    CHECK(std::isfinite(log_density(dh2, Vec::Constant(2, 10.0))));
    CHECK(log_density(dh2, Vec::Zero(2)) == doctest::Approx(-dh2.log_partition));

    Mat bad = Mat::Identity(2, 2);
    bad(1, 1) = -1;
    CHECK_THROWS_AS(make_density({hb, hb}, Vec::Zero(2), bad), Error);
}

TEST_CASE("gaussian mixture sampler") {
    auto var = [](const std::vector<double>& x) {
        const double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
        double s = 0;
        for (double v : x) s += (v - m) * (v - m);
        return s / x.size();
    };
    CHECK(std::abs(var(sample_gaussian_mixture(0.0, 0.5, 5.0, 100000, 1)) - 0.25) <= 0.05 * 0.25);
    CHECK(std::abs(var(sample_gaussian_mixture(1.0, 0.5, 5.0, 100000, 2)) - 25.0) <= 0.05 * 25.0);
    CHECK(std::abs(var(sample_gaussian_mixture(0.1, 0.5, 5.0, 1000000, 3)) - 2.725) <= 0.03 * 2.725);
    CHECK(sample_gaussian_mixture(0.1, 0.5, 5.0, 10, 42) == sample_gaussian_mixture(0.1, 0.5, 5.0, 10, 42));
    CHECK_THROWS_AS(sample_gaussian_mixture(1.5, 1, 1, 10, 1), Error);
}
