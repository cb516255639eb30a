#include "plq/density.hpp"

#include "plq/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace plq {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

NormalizationConstants constants_from_moments(double m0, double m2, std::string kind) {
    NormalizationConstants c;
    c.m0 = m0;
    c.m2 = m2;
    c.c2 = std::sqrt(m2 / m0);
    c.c1 = m0 / c.c2;
    c.kind = std::move(kind);
    return c;
}

NormalizationConstants huber_constants(double kappa) {
    if (!(kappa > 0.0)) throw Error(ErrorCode::BadParameter, "huber kappa must be positive");
    const double k2 = kappa * kappa;
    const double gauss = std::sqrt(2.0 * std::numbers::pi) * (2.0 * std_normal_cdf(kappa) - 1.0);
    const double tail = std::exp(-0.5 * k2);
    const double m0 = 2.0 * tail / kappa + gauss;
    const double m2 = 4.0 * tail * (1.0 + k2) / (k2 * kappa) + gauss;
    return constants_from_moments(m0, m2, "huber");
}

NormalizationConstants vapnik_constants(double eps) {
    if (!(eps >= 0.0)) throw Error(ErrorCode::BadParameter, "vapnik eps must be nonnegative");
    const double m0 = 2.0 * (eps + 1.0);
    const double m2 = (2.0 / 3.0) * eps * eps * eps + 2.0 * (eps * eps + 2.0 * eps + 2.0);
    return constants_from_moments(m0, m2, "vapnik");
}

namespace {

double scalar_value(const QsPenalty& rho, double y) {
    Vec v(1);
    v(0) = y;
    return evaluate(rho, v);
}

// Kinks of a separable scalar penalty on (0, inf).
std::vector<double> positive_kinks(const QsPenalty& rho) {
    std::vector<double> out;
    const auto& U = rho.intervals();
    if (!U || !rho.M_is_diagonal()) return out;
    for (Eigen::Index i = 0; i < rho.m(); ++i) {
        const double B = rho.B()(i, 0);
        if (B == 0.0) continue;
        const double b = rho.b()(i);
        const double M = rho.M()(i, i);
        if (M > 0.0) {
            for (double bound : {U->lower(i), U->upper(i)}) {
                if (std::isfinite(bound)) out.push_back((bound * M - b) / B);
            }
        } else {
            out.push_back(-b / B);
        }
    }
    std::erase_if(out, [](double t) { return !(t > 0.0); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void require_symmetric(const QsPenalty& rho) {
    for (double y : {0.37, 1.3, 2.9, 7.1, 23.0}) {
        const double a = scalar_value(rho, y);
        const double b = scalar_value(rho, -y);
        if (std::isinf(a) != std::isinf(b) || (std::isfinite(a) && std::abs(a - b) > 1e-9 * (1.0 + std::abs(a)))) {
            throw Error(ErrorCode::NotSymmetric, "penalty is not symmetric about 0");
        }
    }
}

// Truncation point where int_T^inf y^k exp(-rho) < tol, using the secant slope
// as a lower bound on the derivative of the convex rho beyond T.
double truncation_radius(const QsPenalty& rho, int k, double start) {
    double T = std::max(start, 1.0);
    for (int it = 0; it < 200; ++it, T *= 2.0) {
        const double r_hi = scalar_value(rho, T);
        const double r_lo = scalar_value(rho, 0.5 * T);
        const double s = (r_hi - r_lo) / (0.5 * T);
        if (!(s > 0.0)) continue;
        double bound = 0.0;
        if (k == 0) bound = 1.0 / s;
        else if (k == 1) bound = T / s + 1.0 / (s * s);
        else if (k == 2) bound = T * T / s + 2.0 * T / (s * s) + 2.0 / (s * s * s);
        else bound = std::tgamma(k + 1.0) * std::pow(T + 1.0 / s, k) / s;
        if (std::exp(-r_hi) * bound < 1e-14) return T;
    }
    throw Error(ErrorCode::NotCoercive, "no exponential tail found");
}

}  // namespace

double penalty_moment(const QsPenalty& rho, int k) {
    if (rho.n() != 1) throw Error(ErrorCode::DimensionMismatch, "penalty_moment needs a scalar penalty");
    std::vector<double> kinks = positive_kinks(rho);
    const double T = truncation_radius(rho, k, kinks.empty() ? 1.0 : 2.0 * kinks.back());
    std::vector<double> pts{0.0};
    for (double t : kinks) {
        if (t < T) pts.push_back(t);
    }
    pts.push_back(T);
    double total = 0.0;
    for (int sign : {1, -1}) {
        auto f = [&](double t) {
            const double y = sign * t;
            return std::pow(y, k) * std::exp(-scalar_value(rho, y));
        };
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) total += integrate(f, pts[i], pts[i + 1], 1e-12);
    }
    return total;
}

NormalizationConstants generic_constants(const QsPenalty& rho) {
    if (rho.n() != 1) throw Error(ErrorCode::DimensionMismatch, "generic_constants needs a scalar penalty");
    if (!is_coercive(rho).coercive) throw Error(ErrorCode::NotCoercive, "penalty is not coercive");
    require_symmetric(rho);
    return constants_from_moments(penalty_moment(rho, 0), penalty_moment(rho, 2), "generic");
}

NormalizationConstants catalogue_constants(PenaltyKind kind, const CatalogueParams& params) {
    switch (kind) {
        case PenaltyKind::l2:
            return constants_from_moments(std::sqrt(2.0 * std::numbers::pi), std::sqrt(2.0 * std::numbers::pi), "l2");
        case PenaltyKind::l1:
            return constants_from_moments(2.0, 4.0, "l1");
        case PenaltyKind::huber:
            return huber_constants(params.kappa);
        case PenaltyKind::vapnik:
            return vapnik_constants(params.eps);
        default: {
            NormalizationConstants c = generic_constants(make_catalogue(kind, params, 1));
            c.kind = std::string(to_string(kind));
            return c;
        }
    }
}

DensityBlock make_block(PenaltyKind kind, const CatalogueParams& params) {
    return DensityBlock{make_catalogue(kind, params, 1), catalogue_constants(kind, params)};
}

QsPenalty standardized(const DensityBlock& block) {
    return precompose_affine(block.rho, Mat::Constant(1, 1, block.constants.c2), Vec::Zero(1));
}

PlqDensity make_density(std::vector<DensityBlock> blocks, Vec mu, Mat Q) {
    const Eigen::Index n = mu.size();
    if (static_cast<Eigen::Index>(blocks.size()) != n || Q.rows() != n || Q.cols() != n) {
        throw Error(ErrorCode::DimensionMismatch, "make_density: inconsistent dimensions");
    }
    if (!Q.isApprox(Q.transpose(), 1e-12)) throw Error(ErrorCode::NonSpdQ, "Q is not symmetric");
    SymmetricRoots roots;
    try {
        roots = symmetric_roots(Q);
    } catch (const Error&) {
        throw Error(ErrorCode::NonSpdQ, "Q is not positive definite");
    }
    PlqDensity d;
    d.log_partition = 0.5 * roots.log_det;
    for (const auto& b : blocks) d.log_partition += std::log(b.constants.c1);
    d.blocks = std::move(blocks);
    d.mu = std::move(mu);
    d.Q = std::move(Q);
    d.Q_sqrt = std::move(roots.sqrt);
    d.Q_inv_sqrt = std::move(roots.inv_sqrt);
    return d;
}

double log_density(const PlqDensity& d, const Vec& y) {
    const Vec t = d.Q_inv_sqrt * (y - d.mu);
    double total = -d.log_partition;
    Vec v(1);
    for (std::size_t i = 0; i < d.blocks.size(); ++i) {
        v(0) = d.blocks[i].constants.c2 * t(static_cast<Eigen::Index>(i));
        total -= evaluate(d.blocks[i].rho, v);
    }
    return total;
}

std::vector<double> sample_gaussian_mixture(double p, double sigma1, double sigma2, std::size_t count,
                                            std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::BadFraction, "mixture fraction must lie in [0, 1]");
    std::mt19937_64 gen(seed);
    auto uniform = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    std::vector<double> out(count);
    for (auto& x : out) {
        const double pick = uniform();
        const double u1 = uniform();
        const double u2 = uniform();
        const double z = std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
        x = (pick < p ? sigma2 : sigma1) * z;
    }
    return out;
}

}  // namespace plq
