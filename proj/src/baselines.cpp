#include "lorenzts/baselines.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace lorenzts {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double normal_lpdf(double x, double mean, double var) {
  double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

/* Golden-section maximization of a unimodal scalar function. */
double golden_max(const std::function<double(double)>& f, double lo, double hi) {
  const double phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 80; ++i) {
    if (f1 < f2) {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + phi * (b - a); f2 = f(x2);
    } else {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - phi * (b - a); f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

SeparateFitResult fit_separate(const Eigen::VectorXd& q_row,
                               const Eigen::VectorXd& p_grid, Family family,
                               const PriorSpec& priors, const SamplerConfig& cfg,
                               Rng& rng) {
  const int d = family_dim(family);
  const int K = static_cast<int>(q_row.size());
  if (p_grid.size() != K + 1)
    throw std::invalid_argument("fit_separate: grid size must be K + 1");

  auto increments_of = [&](const Eigen::VectorXd& u) -> IncrementsResult {
    ThetaVector theta = latent_to_theta({family, u});
    if (!theta_valid(theta)) return {};
    return lorenz_increments(theta, p_grid);
  };

  // z = (u_1..u_d, log lambda)
  auto logtarget = [&](const Eigen::VectorXd& z) {
    IncrementsResult inc = increments_of(z.head(d));
    if (!inc.valid) return kNegInf;
    double lam = std::exp(z[d]);
    if (!std::isfinite(lam) || !(lam > 0.0)) return kNegInf;
    double acc = dirichlet_logpdf(q_row, (lam * inc.delta).eval());
    for (int j = 0; j < d; ++j) acc += normal_lpdf(z[j], priors.m[j], priors.v2[j]);
    acc += normal_lpdf(z[d], priors.m_psi, priors.v2_psi);
    return std::isfinite(acc) ? acc : kNegInf;
  };

  // Initialize u at the family's fixed starting point refined by a short
  // likelihood climb at a neutral precision, then log lambda at its
  // conditional maximum.
  GroupedSeries one;
  one.p_grid = p_grid;
  one.q = q_row.transpose();
  one.n = Eigen::VectorXd::Constant(1, 100.0);
  Eigen::VectorXd z(d + 1);
  z.head(d) = init_latent(one, family).row(0).transpose();
  {
    IncrementsResult inc = increments_of(z.head(d));
    if (!inc.valid)
      throw std::runtime_error("fit_separate: could not find a valid starting curve");
    auto f = [&](double s) {
      return dirichlet_logpdf(q_row, (std::exp(s) * inc.delta).eval()) +
             normal_lpdf(s, priors.m_psi, priors.v2_psi);
    };
    z[d] = golden_max(f, -5.0, 25.0);
  }

  double scale = 0.3;
  double lp = logtarget(z);
  const int total = cfg.n_burnin + cfg.n_draws;
  const int thin = std::max(1, cfg.u_thin);

  SeparateFitResult out;
  out.theta.resize(cfg.n_draws, d);
  out.log_lambda.resize(cfg.n_draws);
  out.gini.resize((cfg.n_draws + thin - 1) / thin);

  long accepts = 0;
  int invalid_streak = 0;
  int gi = 0;
  for (int sweep = 0; sweep < total; ++sweep) {
    const bool burnin = sweep < cfg.n_burnin;
    Eigen::VectorXd prop = z;
    for (int i = 0; i <= d; ++i) prop[i] += scale * rng.normal();
    double lp_prop = logtarget(prop);
    bool acc = false;
    if (lp_prop > kNegInf) {
      invalid_streak = 0;
      double la = lp_prop - lp;
      if (la >= 0.0 || std::log(rng.uniform_open()) < la) {
        z = prop;
        lp = lp_prop;
        acc = true;
      }
    } else if (++invalid_streak >= 1000) {
      throw std::runtime_error(
          "fit_separate: 1000 consecutive proposals left the valid region");
    }

    if (burnin) {
      double ci = std::pow(sweep + 1.0, -0.6);
      scale = std::clamp(scale * std::exp(ci * ((acc ? 1.0 : 0.0) - cfg.adapt_target)),
                         1e-4, 10.0);
    } else {
      if (acc) ++accepts;
      int idx = sweep - cfg.n_burnin;
      ThetaVector theta = latent_to_theta({family, z.head(d)});
      out.theta.row(idx) = theta.values.transpose();
      out.log_lambda[idx] = z[d];
      if (idx % thin == 0) out.gini[gi++] = gini(theta);
    }
  }
  out.gini.conservativeResize(gi);
  out.accept_rate = static_cast<double>(accepts) / cfg.n_draws;
  return out;
}

std::vector<SeparateFitResult> fit_separate_series(const GroupedSeries& data,
                                                   Family family,
                                                   const PriorSpec& priors,
                                                   const SamplerConfig& cfg,
                                                   int n_threads) {
  validate(data);
  const int T = data.T();
  std::vector<SeparateFitResult> out(T);
  n_threads = std::max(1, std::min(n_threads, T));

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      int t = next.fetch_add(1);
      if (t >= T) return;
      try {
        Rng rng(cfg.rng_seed + static_cast<std::uint64_t>(t));
        out[t] = fit_separate(data.q.row(t).transpose(), data.p_grid, family,
                              priors, cfg, rng);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

double crude_gini(const Eigen::VectorXd& q_row, const Eigen::VectorXd& p_grid) {
  const Eigen::Index K = q_row.size();
  if (p_grid.size() != K + 1)
    throw std::invalid_argument("crude_gini: grid size must be K + 1");
  double acc = 0.0, y_prev = 0.0, y = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    y += q_row[k];
    acc += (y + y_prev) * (p_grid[k + 1] - p_grid[k]);
    y_prev = y;
  }
  return 1.0 - acc;
}

}  // namespace lorenzts
