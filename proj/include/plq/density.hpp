#pragma once

#include "plq/penalty.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace plq {

double std_normal_cdf(double x);

/// m0 = int exp(-rho), m2 = int y^2 exp(-rho); c2 = sqrt(m2/m0), c1 = m0/c2.
/// Then exp(-rho(c2 t)) / c1 has unit mass and unit variance.
struct NormalizationConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    double m0 = 0.0;
    double m2 = 0.0;
    std::string kind;
};

NormalizationConstants constants_from_moments(double m0, double m2, std::string kind);

NormalizationConstants huber_constants(double kappa);
NormalizationConstants vapnik_constants(double eps);

/// Quadrature for a scalar, symmetric, coercive penalty.
NormalizationConstants generic_constants(const QsPenalty& rho);

/// Closed forms where known (l2, l1, huber, vapnik), quadrature otherwise.
NormalizationConstants catalogue_constants(PenaltyKind kind, const CatalogueParams& params);

/// Adaptive Gauss-Kronrod integral of f over [a, b].
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-12);

/// int_{-inf}^{inf} y^k exp(-rho(y)) dy for scalar coercive rho, split at the
/// kinks and truncated where the convex tail bound drops below 1e-13.
double penalty_moment(const QsPenalty& rho, int k);

struct DensityBlock {
    QsPenalty rho;  // scalar, unstandardized
    NormalizationConstants constants;
};

DensityBlock make_block(PenaltyKind kind, const CatalogueParams& params);

/// t -> rho(c2 t): zero mean, unit variance.
QsPenalty standardized(const DensityBlock& block);

struct PlqDensity {
    std::vector<DensityBlock> blocks;
    Vec mu;
    Mat Q;
    Mat Q_sqrt;
    Mat Q_inv_sqrt;
    double log_partition = 0.0;  // sum log c1_i + 1/2 log det Q
};

/// Density of Q^{1/2} t + mu with independent standardized coordinates t_i.
PlqDensity make_density(std::vector<DensityBlock> blocks, Vec mu, Mat Q);

double log_density(const PlqDensity& d, const Vec& y);

/// Draws from (1-p) N(0, sigma1^2) + p N(0, sigma2^2).
/// PRNG: mt19937_64; uniforms (x >> 11) * 2^-53; for each sample one uniform
/// picks the component, two more give a Box-Muller normal
/// sqrt(-2 log(1 - u1)) cos(2 pi u2).
std::vector<double> sample_gaussian_mixture(double p, double sigma1, double sigma2, std::size_t count,
                                            std::uint64_t seed);

}  // namespace plq

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace plq {

template <class F>
double integrate(F&& f, double a, double b, double rel_tol) {
    if (!(b > a)) return 0.0;
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, rel_tol, &err);
}

}  // namespace plq
