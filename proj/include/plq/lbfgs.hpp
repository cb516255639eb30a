#pragma once

#include "plq/linalg.hpp"

#include <functional>

namespace plq {

/// Returns f(x) and writes the gradient.
using Objective = std::function<double(const Vec& x, Vec& grad)>;

struct LbfgsOptions {
    int memory = 10;
    double grad_tol = 1e-8;  // inf-norm
    int max_iterations = 1000;
};

struct LbfgsResult {
    Vec x;
    double f = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Limited-memory BFGS with a strong Wolfe line search. Throws
/// LineSearchFailed when no acceptable step exists along a descent direction.
LbfgsResult lbfgs_minimize(const Objective& f, Vec x0, const LbfgsOptions& opts = {});

}  // namespace plq
