#pragma once

#include <utility>

#include <Eigen/Dense>

#include "lorenzts/lorenz.hpp"
#include "lorenzts/mcmc.hpp"

namespace lorenzts {

/* Which per-period scalar to extract from posterior draws. */
struct FunctionalSpec {
  enum class Kind { Gini, LorenzAt, NaturalParam };
  Kind kind = Kind::Gini;
  double p = 0.0;  // LorenzAt: evaluation point
  int j = 0;       // NaturalParam: parameter index

  static FunctionalSpec gini_spec() { return {Kind::Gini, 0.0, 0}; }
  static FunctionalSpec lorenz_at(double p) { return {Kind::LorenzAt, p, 0}; }
  static FunctionalSpec natural_param(int j) {
    return {Kind::NaturalParam, 0.0, j};
  }
};

/*
 * Evaluate the functional on every retained latent snapshot: returns an
 * n_snaps x T matrix, one column per period.
 */
Eigen::MatrixXd functional_draws(const PosteriorDraws& draws, Family family,
                                 const FunctionalSpec& what);

/* (estimate - truth) / truth; rejects zero truth. */
double relative_bias(double estimate, double truth);
Eigen::VectorXd relative_bias(const Eigen::VectorXd& estimates,
                              const Eigen::VectorXd& truths);

/* Empirical quantile with linear interpolation between order statistics. */
double quantile(const Eigen::VectorXd& draws, double prob);

/* Equal-tailed credible interval from >= 100 draws. */
std::pair<double, double> credible_interval(const Eigen::VectorXd& draws,
                                            double level = 0.95);

}  // namespace lorenzts
