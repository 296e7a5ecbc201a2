#pragma once

#include <functional>
#include <vector>

namespace fracmin {

// Gauss-Legendre rule on [-1, 1]; nodes/weights cached per order.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussRule& gauss_rule(int order);

// Fixed-order Gauss on [a, b].
double gauss_integrate(const std::function<double(double)>& f, double a, double b, int order);

// Adaptive Gauss by interval bisection: an interval is accepted when the
// whole-interval estimate agrees with the sum of its halves.
double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, double abs_tol, int max_depth = 48);

// tanh-sinh rule on [a, b]; converges for integrable endpoint
// singularities like d^{-s}. Levels are doubled until two estimates agree.
// When the endpoint exponents are known (f ~ c (x-a)^{-pa} etc., 0 <= p < 1),
// the mass below the machine-representable offset floor is restored
// analytically from the innermost evaluated node.
double tanh_sinh_integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, double abs_tol, int max_levels = 9,
                           double sing_pow_a = 0.0, double sing_pow_b = 0.0);

// Deterministic pairwise-tree reduction; the result depends only on the
// element order, never on thread count.
double pairwise_sum(const std::vector<double>& v);

} // namespace fracmin
