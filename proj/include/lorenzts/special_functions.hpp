#pragma once
/*
 * Scalar special functions and Gauss-Legendre quadrature.
 *
 * These are the numerical primitives behind the Lorenz curve families
 * and the Dirichlet log-density: log-gamma, the regularized incomplete
 * beta function, the standard normal CDF/quantile pair, and fixed-order
 * quadrature rules with a graded composite variant for integrands that
 * are singular at the ends of the unit interval.
 *
 * Everything here is a pure function of its arguments and safe to call
 * concurrently.
 */

#include <functional>

#include <Eigen/Dense>

namespace lorenzts {

/* ln Gamma(x) for x > 0. Relative error about 1e-13 over [1e-6, 1e6]
 * (absolute near the zeros at x = 1 and x = 2). Throws std::domain_error
 * for x <= 0 or non-finite x. */
double log_gamma(double x);

/* ln B(a,b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a+b). */
double log_beta(double a, double b);

/* Regularized incomplete beta I_z(a,b), continued-fraction evaluation
 * with the usual symmetry split at z = (a+1)/(a+b+2). Inputs with
 * z < 1e-15 are clamped to exact 0 and z > 1-1e-15 to exact 1 so that
 * downstream code never takes log(0) from an endpoint evaluation.
 * Throws std::domain_error for z outside [0,1] or a, b <= 0. */
double reg_inc_beta(double z, double a, double b);

/* Variant taking the precomputed complement zc = 1-z, unclamped.
 * When z arises from an expression like 1 - pow(1-p, 1/g) the caller
 * has zc to full relative precision even though 1-z in doubles is not;
 * passing both keeps deep-tail evaluations accurate. Requires z and zc
 * in [0,1]; trusts the caller that z + zc = 1. */
double reg_inc_beta_c(double z, double zc, double a, double b);

/* Standard normal CDF, accurate to machine precision via erfc. */
double normal_cdf(double x);

/* Standard normal quantile on (0,1); rational initial guess refined by
 * one Halley step, absolute error below 1e-13. Throws std::domain_error
 * at or outside {0,1}. */
double normal_quantile(double p);

struct QuadratureRule {
  Eigen::VectorXd nodes;    // strictly increasing, inside (-1,1)
  Eigen::VectorXd weights;  // positive, sum to 2
  int order = 0;
};

/* Nodes and weights of the order-point Gauss-Legendre rule on [-1,1],
 * computed by Newton iteration on the Legendre recurrence. */
QuadratureRule gauss_legendre_rule(int order);

/* Single-panel quadrature of f over [lo, hi]; exact for polynomials of
 * degree <= 2*order - 1 up to rounding. */
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadratureRule& rule);

/* Composite quadrature on [0,1] with panel widths shrinking geometrically
 * into both endpoints (down to 2^-45). Lorenz curves can have unbounded
 * derivatives at 0 and 1, where a single panel loses several digits; the
 * graded mesh restores machine-precision accuracy at ~90x the cost. */
double integrate_unit_graded(const std::function<double(double)>& f,
                             const QuadratureRule& rule);

}  // namespace lorenzts
