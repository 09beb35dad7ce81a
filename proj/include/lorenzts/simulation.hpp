#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lorenzts/lorenz.hpp"
#include "lorenzts/model.hpp"
#include "lorenzts/rng.hpp"

namespace lorenzts {

/*
 * Synthetic-data generator: a latent AR(1)/random-walk path drives the income
 * distribution per period; incomes are sampled, sorted, and grouped into K
 * equal-size classes whose income shares form the observed series.
 */
struct SimConfig {
  int T = 500;
  int K = 5;
  Family family = Family::SM;
  LatentProcessSpec process;        // true latent dynamics
  std::vector<double> n_pool;       // admissible per-period sample sizes
  std::uint64_t rng_seed = 1;

  // Benchmark configuration: T=500, K=5, Singh-Maddala, AR(1) with
  // mu=(1.25, 0.4), rho=(0.8, 0.5), tau2=(0.015, 0.02), pool {5000,...,15000}.
  static SimConfig defaults();
};

struct SimTruth {
  Eigen::MatrixXd u;       // T x d true latent path
  Eigen::MatrixXd theta;   // T x d true natural parameters
  Eigen::VectorXd gini;    // T true Gini coefficients
  Eigen::MatrixXd lorenz;  // T x (K+1) true Lorenz values on the p grid
};

/* Draw a T x d latent path: row 0 from the initial law, then the recursion. */
Eigen::MatrixXd simulate_latent(const LatentProcessSpec& spec, int T, Rng& rng);

/* Inverse-CDF sampling of n Singh-Maddala incomes, x = beta*((1-v)^(-1/gamma)-1)^(1/alpha). */
std::vector<double> sample_sm_income(double alpha, double beta, double gamma,
                                     int n, Rng& rng);

/*
 * Sort incomes ascending, split into K equal-count classes, return each
 * class's share of total income. Requires K to divide the sample size.
 */
Eigen::VectorXd group_shares(std::vector<double> incomes, int K);

/* Full generator: deterministic given cfg.rng_seed. */
std::pair<GroupedSeries, SimTruth> generate_dataset(const SimConfig& cfg);

}  // namespace lorenzts
