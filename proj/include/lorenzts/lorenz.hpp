#pragma once
/*
 * Parametric Lorenz curve families.
 *
 * Six families are supported, identified by Family tags:
 *   LN  lognormal,          L(p) = Phi(Phi^-1(p) - sigma)
 *   SM  Singh-Maddala,      L(p) = I_z(1 + 1/alpha, gamma - 1/alpha),
 *                           z = 1 - (1-p)^(1/gamma), requires alpha*gamma > 1
 *   DA  Dagum,              L(p) = I_z(kappa + 1/alpha, 1 - 1/alpha),
 *                           z = p^(1/kappa), requires alpha > 1
 *   KA  Kakwani,            L(p) = p - nu p^xi (1-p)^delta
 *   OR  Ortega,             L(p) = p^alpha (1 - (1-p)^delta)
 *   RA  Rasche,             L(p) = (1 - (1-p)^delta)^gamma
 *
 * Each family carries a bijection between its natural parameters and an
 * unconstrained latent vector (log links for positive parameters, logit
 * links for unit-interval ones). KA is the one family whose curves can
 * leave [0,1] or lose monotonicity inside the parameter box; that is
 * reported through the increment validity flag rather than an error.
 */

#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "lorenzts/special_functions.hpp"

namespace lorenzts {

enum class Family { LN, SM, DA, KA, OR, RA };

int family_dim(Family f);
const char* family_name(Family f);  // "ln", "sm", "da", "ka", "or", "ra"
std::optional<Family> family_from_string(std::string_view s);

/* Natural-scale parameters: LN (sigma); SM (alpha, gamma); DA (alpha,
 * kappa); KA (nu, xi, delta); OR (alpha, delta); RA (gamma, delta). */
struct ThetaVector {
  Family family;
  Eigen::VectorXd values;
};

/* Unconstrained coordinates u = h(theta). */
struct LatentVector {
  Family family;
  Eigen::VectorXd values;
};

/* Positivity, unit-interval, and finite-mean constraints: sigma > 0;
 * SM alpha, gamma > 0 with alpha*gamma > 1; DA alpha > 1, kappa > 0;
 * KA nu > 0, xi, delta in (0,1); OR alpha > 0, delta in (0,1);
 * RA gamma > 0, delta in (0,1). */
bool theta_valid(const ThetaVector& theta);

/* L(p); exact 0 at p <= 0 and 1 at p >= 1. Throws std::invalid_argument
 * when theta_valid fails. KA values may fall outside [0,1]; callers
 * assess that through lorenz_increments. */
double lorenz_value(const ThetaVector& theta, double p);

struct IncrementsResult {
  Eigen::VectorXd delta;  // K curve increments over the grid cells
  bool valid = false;     // true iff every increment is strictly positive
};

/* Differences of L over a grid 0 = p_0 < ... < p_K = 1. The increments
 * telescope, so they sum to exactly L(1) - L(0) = 1. */
IncrementsResult lorenz_increments(const ThetaVector& theta,
                                   const Eigen::VectorXd& p_grid);

/* Gini coefficient 1 - 2 * integral of L over [0,1]. Closed forms for
 * LN and SM; graded-mesh quadrature for DA, KA, OR, RA. */
double gini(const ThetaVector& theta);

/* Quadrature evaluation for any family (the graded composite rule).
 * The one-argument form uses a 64-point panel rule; pass a rule to
 * check stability under order changes. */
double gini_quadrature(const ThetaVector& theta);
double gini_quadrature(const ThetaVector& theta, const QuadratureRule& rule);

/* The gamma-ratio expression often quoted as the Dagum Gini,
 * Gamma(kappa) Gamma(2 kappa + 1/alpha) /
 * (Gamma(kappa + 1/alpha) Gamma(2 kappa)). As written it exceeds 1 for
 * typical parameters; the quadrature Gini equals this ratio minus 1.
 * Shipped for reference only; gini() does not use it. */
double dagum_gini_ratio(double alpha, double kappa);

/* Log/logit transforms between natural and unconstrained coordinates.
 * Forward requires a valid theta, so boundary values where the logit is
 * undefined (xi or delta at 0 or 1) are rejected by the validity gate
 * with std::invalid_argument; inverse is total on finite inputs. Note
 * the inverse cannot and does not enforce the SM alpha*gamma > 1 or
 * DA alpha > 1 constraints; likelihood code rejects those states
 * instead. */
LatentVector theta_to_latent(const ThetaVector& theta);
ThetaVector latent_to_theta(const LatentVector& u);

/* Fixed per-family starting points used to initialize optimizers and
 * chains: LN sigma=0.5; SM (3, 1.5); DA (3, 0.6); KA (0.6, 0.9, 0.6);
 * OR (0.5, 0.6); RA (0.9, 0.7). */
ThetaVector family_init_theta(Family f);

}  // namespace lorenzts
