#include "plq/lbfgs.hpp"

#include "plq/error.hpp"

#include <cmath>
#include <algorithm>
#include <deque>
#include <optional>
#include <vector>

namespace plq {

namespace {

constexpr double c1 = 1e-4;
constexpr double c2 = 0.9;

struct Probe {
    double alpha, f, slope;
    Vec x, g;
};

Probe probe(const Objective& f, const Vec& x, const Vec& d, double alpha) {
    Probe p;
    p.alpha = alpha;
    p.x = x + alpha * d;
    p.g.resize(x.size());
    p.f = f(p.x, p.g);
    p.slope = p.g.dot(d);
    return p;
}

// Minimizer of the cubic through (a, fa, da), (b, fb, db), safeguarded into the bracket.
double cubic_step(const Probe& a, const Probe& b) {
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.slope * b.slope;
    const double lo = std::min(a.alpha, b.alpha);
    const double hi = std::max(a.alpha, b.alpha);
    double t = 0.5 * (lo + hi);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
        const double c = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
        if (std::isfinite(c)) t = c;
    }
    const double margin = 0.1 * (hi - lo);
    return std::clamp(t, lo + margin, hi - margin);
}

std::optional<Probe> zoom(const Objective& f, const Vec& x, const Vec& d, double f0, double slope0, Probe lo,
                          Probe hi) {
    for (int it = 0; it < 60; ++it) {
        Probe p = probe(f, x, d, cubic_step(lo, hi));
        if (p.f > f0 + c1 * p.alpha * slope0 || p.f >= lo.f) {
            hi = std::move(p);
        } else {
            if (std::abs(p.slope) <= -c2 * slope0) return p;
            if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = std::move(lo);
            lo = std::move(p);
        }
        if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
    }
    // Accept sufficient decrease alone once the bracket collapses.
    if (lo.alpha > 0.0 && lo.f <= f0 + c1 * lo.alpha * slope0) return lo;
    return std::nullopt;
}

std::optional<Probe> wolfe_search(const Objective& f, const Vec& x, const Vec& d, double f0, const Vec& g0,
                                  double alpha0) {
    const double slope0 = g0.dot(d);
    Probe prev{0.0, f0, slope0, x, g0};
    double alpha = alpha0;
    for (int it = 0; it < 40; ++it) {
        Probe p = probe(f, x, d, alpha);
        if (!std::isfinite(p.f) || p.f > f0 + c1 * alpha * slope0 || (it > 0 && p.f >= prev.f)) {
            return zoom(f, x, d, f0, slope0, std::move(prev), std::move(p));
        }
        if (std::abs(p.slope) <= -c2 * slope0) return p;
        if (p.slope >= 0.0) return zoom(f, x, d, f0, slope0, std::move(p), std::move(prev));
        prev = std::move(p);
        alpha *= 2.0;
    }
    return std::nullopt;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, Vec x0, const LbfgsOptions& opts) {
    LbfgsResult res;
    res.x = std::move(x0);
    Vec g(res.x.size());
    res.f = f(res.x, g);
    std::deque<std::pair<Vec, Vec>> hist;  // (s, y)

    for (;;) {
        res.grad_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
        if (res.grad_norm <= opts.grad_tol) {
            res.converged = true;
            return res;
        }
        if (res.iterations >= opts.max_iterations) return res;

        // two-loop recursion
        Vec d = -g;
        std::vector<double> rho(hist.size()), a(hist.size());
        for (std::size_t i = hist.size(); i-- > 0;) {
            rho[i] = 1.0 / hist[i].second.dot(hist[i].first);
            a[i] = rho[i] * hist[i].first.dot(d);
            d -= a[i] * hist[i].second;
        }
        if (!hist.empty()) {
            const auto& [s, y] = hist.back();
            d *= s.dot(y) / y.squaredNorm();
        }
        for (std::size_t i = 0; i < hist.size(); ++i) {
            const double b = rho[i] * hist[i].second.dot(d);
            d += (a[i] - b) * hist[i].first;
        }
        if (!(d.dot(g) < 0.0)) {
            hist.clear();
            d = -g;
        }

        const double alpha0 = hist.empty() ? std::min(1.0, 1.0 / d.cwiseAbs().maxCoeff()) : 1.0;
        auto step = wolfe_search(f, res.x, d, res.f, g, alpha0);
        if (!step) {
            if (!hist.empty()) {
                hist.clear();
                continue;
            }
            // Predicted decrease below the rounding level of f: nothing left to gain.
            if (-g.dot(d) * alpha0 <= 1e-12 * (1.0 + std::abs(res.f))) return res;
            throw Error(ErrorCode::LineSearchFailed, "no step satisfies the Wolfe conditions");
        }
        Vec s = step->x - res.x;
        Vec y = step->g - g;
        if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
            hist.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(hist.size()) > opts.memory) hist.pop_front();
        }
        const bool stalled = step->f >= res.f && std::abs(step->f - res.f) <= 1e-16 * std::abs(res.f);
        res.x = std::move(step->x);
        res.f = step->f;
        g = std::move(step->g);
        ++res.iterations;
        if (stalled && g.cwiseAbs().maxCoeff() > opts.grad_tol) {
            res.grad_norm = g.cwiseAbs().maxCoeff();
            return res;
        }
    }
}

}  // namespace plq
