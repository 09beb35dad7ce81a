#pragma once
/*
 * The probabilistic model tying grouped income shares to a latent
 * time series of Lorenz curve parameters.
 *
 * Observation density: each period's share vector q_t follows a
 * Dirichlet distribution whose cell parameters are lambda_t times the
 * Lorenz curve increments at the grid points, with precision
 * lambda_t = n_t * exp(psi) tied to the survey sample size.
 *
 * Latent dynamics: the unconstrained coordinates u_tj follow either a
 * stationary AR(1) per coordinate (parameters mu_j, rho_j, tau2_j) or a
 * random walk (tau2_j, with a diffuse N(0, c*tau2_j) first state).
 *
 * Priors: mu_j ~ N(m_j, v2_j), tau2_j ~ InvGamma(r_j, s_j),
 * rho_j ~ U(-1,1), psi ~ N(m_psi, v2_psi).
 *
 * Parameter vectors that produce an invalid curve (non-positive
 * increments, or an SM/DA constraint violation) carry likelihood zero:
 * the log-density functions return -infinity rather than throwing, so
 * Metropolis-Hastings kernels reject such proposals transparently.
 */

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lorenzts/lorenz.hpp"

namespace lorenzts {

struct GroupedSeries {
  Eigen::VectorXd p_grid;           // K+1 cut points, 0 = p_0 < ... < p_K = 1
  Eigen::MatrixXd q;                // T x K income shares, rows sum to 1
  Eigen::VectorXd n;                // T sample sizes (positive integers)
  std::vector<std::string> labels;  // optional period identifiers

  int T() const { return static_cast<int>(q.rows()); }
  int K() const { return static_cast<int>(q.cols()); }
};

/* Throws std::invalid_argument naming the offending period or field when
 * an invariant fails: positive shares, unit row sums (within 1e-9),
 * strictly increasing grid with exact endpoints, integer n_t >= 1. */
void validate(const GroupedSeries& data);

/* Equal-population cut points 0, 1/K, ..., 1 (computed as exact ratios). */
inline Eigen::VectorXd equal_grid(int K) {
  Eigen::VectorXd p(K + 1);
  for (int k = 0; k <= K; ++k) p[k] = static_cast<double>(k) / K;
  return p;
}

struct PriorSpec {
  Eigen::VectorXd m, v2;  // normal prior on each mu_j
  Eigen::VectorXd r, s;   // inverse gamma prior on each tau2_j
  double m_psi = 0.0, v2_psi = 100.0;
  double c = 1e5;         // diffuse scale for the RW first state

  static PriorSpec defaults(int d);  // m=0, v2=1, r=3, s=0.1 per coordinate
};

enum class ProcessKind { AR1, RW };

struct LatentProcessSpec {
  ProcessKind kind = ProcessKind::AR1;
  Eigen::VectorXd mu, rho, tau2;  // per coordinate; mu/rho ignored for RW
  double c = 1e5;
};

struct ChainState {
  Eigen::MatrixXd u;  // T x d latent coordinates
  LatentProcessSpec process;
  double psi = 0.0;
};

/* Dirichlet log-density at q with cell parameters a. Throws
 * std::domain_error if any q_k <= 0 or a_k <= 0. */
double dirichlet_logpdf(const Eigen::VectorXd& q_row, const Eigen::VectorXd& a);

/* Precision link lambda_t = n_t * exp(psi). */
double lambda_t(double psi, double n_t);

/* One period's observation log-likelihood. Returns -infinity when the
 * latent vector maps to an invalid curve. */
double obs_loglik_t(const Eigen::VectorXd& q_row, const LatentVector& u_t,
                    double psi, double n_t, const Eigen::VectorXd& p_grid);

/* Joint log-density of the whole latent matrix under the process spec,
 * normalizing constants included. */
double latent_logdensity(const Eigen::MatrixXd& u, const LatentProcessSpec& spec);

/* Log prior density of the process parameters and psi. */
double log_prior(const ChainState& state, const PriorSpec& priors);

/* Full log-joint: observation terms + latent density + priors.
 * -infinity propagates from any invalid component. */
double log_joint(const ChainState& state, const GroupedSeries& data,
                 const PriorSpec& priors, Family family);

/* Per-period starting values: maximizes obs_loglik_t at psi = 0 with a
 * Nelder-Mead search from the family's fixed starting point. Keeps the
 * chain inside the valid region from the first sweep. */
Eigen::MatrixXd init_latent(const GroupedSeries& data, Family family);

}  // namespace lorenzts
