#include "lorenzts/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "lorenzts/special_functions.hpp"

namespace lorenzts {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double normal_lpdf(double x, double mean, double var) {
  double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

/* Nelder-Mead maximization for the low-dimensional (d <= 3) per-period
 * initializer. f returns -infinity outside the valid region. */
Eigen::VectorXd nelder_mead_max(const std::function<double(const Eigen::VectorXd&)>& f,
                                const Eigen::VectorXd& start, int max_iter) {
  const int d = static_cast<int>(start.size());
  std::vector<Eigen::VectorXd> x(d + 1, start);
  std::vector<double> fx(d + 1);
  for (int i = 1; i <= d; ++i) x[i][i - 1] += 0.25;
  for (int i = 0; i <= d; ++i) fx[i] = f(x[i]);

  auto order = [&] {
    for (int i = 0; i <= d; ++i)
      for (int j = i + 1; j <= d; ++j)
        if (fx[j] > fx[i]) {
          std::swap(fx[i], fx[j]);
          std::swap(x[i], x[j]);
        }
  };

  order();
  for (int it = 0; it < max_iter; ++it) {
    if (std::isfinite(fx[0]) && std::isfinite(fx[d]) && fx[0] - fx[d] < 1e-10) break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += x[i];
    centroid /= d;

    Eigen::VectorXd xr = centroid + (centroid - x[d]);
    double fr = f(xr);
    if (fr > fx[0]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - x[d]);
      double fe = f(xe);
      if (fe > fr) { x[d] = xe; fx[d] = fe; }
      else { x[d] = xr; fx[d] = fr; }
    } else if (fr > fx[d - 1]) {
      x[d] = xr; fx[d] = fr;
    } else {
      Eigen::VectorXd xc = centroid + 0.5 * (x[d] - centroid);
      double fc = f(xc);
      if (fc > fx[d]) { x[d] = xc; fx[d] = fc; }
      else {
        for (int i = 1; i <= d; ++i) {
          x[i] = x[0] + 0.5 * (x[i] - x[0]);
          fx[i] = f(x[i]);
        }
      }
    }
    order();
  }
  return x[0];
}

}  // namespace

void validate(const GroupedSeries& data) {
  const int T = data.T(), K = data.K();
  if (T < 1 || K < 2) throw std::invalid_argument("series needs T >= 1 and K >= 2");
  if (data.p_grid.size() != K + 1)
    throw std::invalid_argument("p_grid size must be K + 1");
  if (data.p_grid[0] != 0.0 || data.p_grid[K] != 1.0)
    throw std::invalid_argument("p_grid must start at 0 and end at 1");
  for (int k = 0; k < K; ++k)
    if (!(data.p_grid[k] < data.p_grid[k + 1]))
      throw std::invalid_argument("p_grid must be strictly increasing");
  if (data.n.size() != T) throw std::invalid_argument("n must have one entry per period");
  auto period_name = [&](int t) {
    return t < static_cast<int>(data.labels.size()) && !data.labels[t].empty()
               ? data.labels[t]
               : std::to_string(t + 1);
  };
  for (int t = 0; t < T; ++t) {
    double nt = data.n[t];
    if (!(nt >= 1.0) || nt != std::floor(nt))
      throw std::invalid_argument("period " + period_name(t) +
                                  ": sample size must be an integer >= 1");
    for (int k = 0; k < K; ++k)
      if (!(data.q(t, k) > 0.0))
        throw std::invalid_argument("period " + period_name(t) +
                                    ": shares must be strictly positive");
    double sum = data.q.row(t).sum();
    if (std::fabs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("period " + period_name(t) +
                                  ": shares sum to " + std::to_string(sum) +
                                  ", expected 1");
  }
}

PriorSpec PriorSpec::defaults(int d) {
  PriorSpec p;
  p.m = Eigen::VectorXd::Zero(d);
  p.v2 = Eigen::VectorXd::Ones(d);
  p.r = Eigen::VectorXd::Constant(d, 3.0);
  p.s = Eigen::VectorXd::Constant(d, 0.1);
  return p;
}

double dirichlet_logpdf(const Eigen::VectorXd& q_row, const Eigen::VectorXd& a) {
  if (q_row.size() != a.size())
    throw std::domain_error("dirichlet_logpdf: dimension mismatch");
  double total = 0.0, acc = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (!(a[k] > 0.0)) throw std::domain_error("dirichlet_logpdf: parameters must be positive");
    if (!(q_row[k] > 0.0)) throw std::domain_error("dirichlet_logpdf: shares must be positive");
    total += a[k];
    acc += (a[k] - 1.0) * std::log(q_row[k]) - log_gamma(a[k]);
  }
  return log_gamma(total) + acc;
}

double lambda_t(double psi, double n_t) { return n_t * std::exp(psi); }

double obs_loglik_t(const Eigen::VectorXd& q_row, const LatentVector& u_t,
                    double psi, double n_t, const Eigen::VectorXd& p_grid) {
  ThetaVector theta = latent_to_theta(u_t);
  if (!theta_valid(theta)) return kNegInf;
  IncrementsResult inc = lorenz_increments(theta, p_grid);
  if (!inc.valid) return kNegInf;
  double lam = lambda_t(psi, n_t);
  if (!(lam > 0.0) || !std::isfinite(lam)) return kNegInf;
  double ll = dirichlet_logpdf(q_row, lam * inc.delta);
  return std::isfinite(ll) ? ll : kNegInf;
}

double latent_logdensity(const Eigen::MatrixXd& u, const LatentProcessSpec& spec) {
  const Eigen::Index T = u.rows(), d = u.cols();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double tau2 = spec.tau2[j];
    if (!(tau2 > 0.0)) return kNegInf;
    if (spec.kind == ProcessKind::AR1) {
      double mu = spec.mu[j], rho = spec.rho[j];
      if (!(std::fabs(rho) < 1.0)) return kNegInf;
      acc += normal_lpdf(u(0, j), mu, tau2 / (1.0 - rho * rho));
      for (Eigen::Index t = 1; t < T; ++t)
        acc += normal_lpdf(u(t, j), mu + rho * (u(t - 1, j) - mu), tau2);
    } else {
      acc += normal_lpdf(u(0, j), 0.0, spec.c * tau2);
      for (Eigen::Index t = 1; t < T; ++t)
        acc += normal_lpdf(u(t, j), u(t - 1, j), tau2);
    }
  }
  return acc;
}

double log_prior(const ChainState& state, const PriorSpec& priors) {
  const LatentProcessSpec& pr = state.process;
  const Eigen::Index d = pr.tau2.size();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double tau2 = pr.tau2[j];
    if (!(tau2 > 0.0)) return kNegInf;
    acc += priors.r[j] * std::log(priors.s[j]) - log_gamma(priors.r[j]) -
           (priors.r[j] + 1.0) * std::log(tau2) - priors.s[j] / tau2;
    if (pr.kind == ProcessKind::AR1) {
      if (!(std::fabs(pr.rho[j]) < 1.0)) return kNegInf;
      acc += std::log(0.5);  // uniform(-1,1)
      acc += normal_lpdf(pr.mu[j], priors.m[j], priors.v2[j]);
    }
  }
  acc += normal_lpdf(state.psi, priors.m_psi, priors.v2_psi);
  return acc;
}

double log_joint(const ChainState& state, const GroupedSeries& data,
                 const PriorSpec& priors, Family family) {
  double acc = log_prior(state, priors);
  if (!std::isfinite(acc)) return kNegInf;
  double lat = latent_logdensity(state.u, state.process);
  if (!std::isfinite(lat)) return kNegInf;
  acc += lat;
  for (int t = 0; t < data.T(); ++t) {
    LatentVector u_t{family, state.u.row(t).transpose()};
    double ll = obs_loglik_t(data.q.row(t).transpose(), u_t, state.psi, data.n[t],
                             data.p_grid);
    if (!std::isfinite(ll)) return kNegInf;
    acc += ll;
  }
  return acc;
}

Eigen::MatrixXd init_latent(const GroupedSeries& data, Family family) {
  const int T = data.T(), d = family_dim(family);
  Eigen::VectorXd start = theta_to_latent(family_init_theta(family)).values;
  Eigen::MatrixXd u(T, d);
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd q_row = data.q.row(t).transpose();
    double n_t = data.n[t];
    auto objective = [&](const Eigen::VectorXd& w) {
      return obs_loglik_t(q_row, LatentVector{family, w}, 0.0, n_t, data.p_grid);
    };
    u.row(t) = nelder_mead_max(objective, start, 200).transpose();
  }
  return u;
}

}  // namespace lorenzts
