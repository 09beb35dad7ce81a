#include "lorenzts/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lorenzts {

SimConfig SimConfig::defaults() {
  SimConfig cfg;
  cfg.process.kind = ProcessKind::AR1;
  cfg.process.mu = Eigen::Vector2d(1.25, 0.4);
  cfg.process.rho = Eigen::Vector2d(0.8, 0.5);
  cfg.process.tau2 = Eigen::Vector2d(0.015, 0.02);
  for (int n = 5000; n <= 15000; n += 1000) cfg.n_pool.push_back(n);
  return cfg;
}

Eigen::MatrixXd simulate_latent(const LatentProcessSpec& spec, int T, Rng& rng) {
  const int d = static_cast<int>(spec.tau2.size());
  if (T < 1) throw std::invalid_argument("simulate_latent: T must be positive");
  Eigen::MatrixXd u(T, d);
  for (int j = 0; j < d; ++j) {
    double tau = std::sqrt(spec.tau2[j]);
    if (spec.kind == ProcessKind::AR1) {
      double sd0 = tau / std::sqrt(1.0 - spec.rho[j] * spec.rho[j]);
      u(0, j) = spec.mu[j] + sd0 * rng.normal();
      for (int t = 1; t < T; ++t)
        u(t, j) = spec.mu[j] + spec.rho[j] * (u(t - 1, j) - spec.mu[j]) +
                  tau * rng.normal();
    } else {
      u(0, j) = std::sqrt(spec.c) * tau * rng.normal();
      for (int t = 1; t < T; ++t) u(t, j) = u(t - 1, j) + tau * rng.normal();
    }
  }
  return u;
}

std::vector<double> sample_sm_income(double alpha, double beta, double gamma,
                                     int n, Rng& rng) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument("sample_sm_income: parameters must be positive");
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    double v = rng.uniform_open();
    x[i] = beta * std::pow(std::pow(1.0 - v, -1.0 / gamma) - 1.0, 1.0 / alpha);
  }
  return x;
}

Eigen::VectorXd group_shares(std::vector<double> incomes, int K) {
  const int n = static_cast<int>(incomes.size());
  if (K < 1 || n % K != 0)
    throw std::invalid_argument(
        "group_shares: class count must divide the sample size");
  std::sort(incomes.begin(), incomes.end());
  const int block = n / K;
  Eigen::VectorXd q(K);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    double s = std::accumulate(incomes.begin() + k * block,
                               incomes.begin() + (k + 1) * block, 0.0);
    q[k] = s;
    total += s;
  }
  if (!(total > 0.0))
    throw std::invalid_argument("group_shares: total income must be positive");
  q /= total;
  return q;
}

std::pair<GroupedSeries, SimTruth> generate_dataset(const SimConfig& cfg) {
  if (cfg.n_pool.empty())
    throw std::invalid_argument("generate_dataset: empty sample-size pool");
  for (double n : cfg.n_pool)
    if (static_cast<long>(n) % cfg.K != 0)
      throw std::invalid_argument(
          "generate_dataset: pool entries must be divisible by K");

  const int d = family_dim(cfg.family);
  if (static_cast<int>(cfg.process.tau2.size()) != d)
    throw std::invalid_argument(
        "generate_dataset: process dimension does not match the family");

  Rng rng(cfg.rng_seed);

  // Redraw the path wholesale in the (practically unreachable) event that it
  // wanders outside the family's valid region.
  Eigen::MatrixXd u;
  bool ok = false;
  for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
    u = simulate_latent(cfg.process, cfg.T, rng);
    ok = true;
    for (int t = 0; t < cfg.T && ok; ++t)
      ok = theta_valid(latent_to_theta({cfg.family, u.row(t).transpose()}));
  }
  if (!ok)
    throw std::runtime_error(
        "generate_dataset: no valid latent path in 100 attempts");

  GroupedSeries data;
  data.p_grid = equal_grid(cfg.K);
  data.q.resize(cfg.T, cfg.K);
  data.n.resize(cfg.T);
  data.labels.resize(cfg.T);

  SimTruth truth;
  truth.u = u;
  truth.theta.resize(cfg.T, d);
  truth.gini.resize(cfg.T);
  truth.lorenz.resize(cfg.T, cfg.K + 1);

  for (int t = 0; t < cfg.T; ++t) {
    ThetaVector theta = latent_to_theta({cfg.family, u.row(t).transpose()});
    truth.theta.row(t) = theta.values.transpose();
    truth.gini[t] = gini(theta);
    for (int k = 0; k <= cfg.K; ++k)
      truth.lorenz(t, k) = lorenz_value(theta, data.p_grid[k]);

    int n_t = static_cast<int>(cfg.n_pool[rng.uniform_int(cfg.n_pool.size())]);
    data.n[t] = n_t;
    data.labels[t] = std::to_string(t + 1);

    if (cfg.family != Family::SM)
      throw std::invalid_argument(
          "generate_dataset: income sampling implemented for the "
          "Singh-Maddala family only");
    std::vector<double> x =
        sample_sm_income(theta.values[0], 1.0, theta.values[1], n_t, rng);
    data.q.row(t) = group_shares(std::move(x), cfg.K).transpose();
  }

  validate(data);
  return {std::move(data), std::move(truth)};
}

}  // namespace lorenzts
