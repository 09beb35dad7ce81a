#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lorenzts/baselines.hpp"
#include "lorenzts/mcmc.hpp"
#include "lorenzts/model.hpp"

namespace lorenzts {

/*
 * Posterior predictive loss: PPL_r = sum_tk V_tk + (r/(r+1)) sum_tk (q_tk - E_tk)^2
 * where E and V are the mean and variance of the posterior predictive share
 * distribution. Lower is better; the variance term penalizes complexity, the
 * squared-error term rewards fit. Scores are reported as ln(total).
 */
struct PplResult {
  std::string label;
  Eigen::MatrixXd E;  // T x K predictive means
  Eigen::MatrixXd V;  // T x K predictive variances
  double score_r1 = 0.0;
  double score_rinf = 0.0;
};

/*
 * Predictive moments from a fitted chain, via the law of total variance over
 * the retained latent snapshots: per snapshot the conditional mean is the
 * Lorenz-increment vector and the conditional variance is m_k(1-m_k)/(lambda_t+1).
 */
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> predictive_moments(
    const PosteriorDraws& draws, const GroupedSeries& data, Family family);

/*
 * Same moments from per-period separate fits, subsampling every `thin`-th
 * draw so the Monte Carlo effort matches the chain-snapshot variant.
 */
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> predictive_moments(
    const std::vector<SeparateFitResult>& fits, const GroupedSeries& data,
    Family family, int thin = 10);

/*
 * ln of the PPL total at weight r/(r+1); pass r = infinity for weight 1.
 * A zero total (perfect degenerate prediction) reports -infinity.
 */
double ppl_score(const Eigen::MatrixXd& E, const Eigen::MatrixXd& V,
                 const GroupedSeries& data, double r);

}  // namespace lorenzts
