#pragma once
/*
 * The posterior sampler: a five-block Gibbs/Metropolis-Hastings sweep.
 *
 *   1. each latent vector u_t by accept-reject Metropolis-Hastings
 *      (ARMH) against a Laplace normal approximation of its full
 *      conditional, mixed with a plain random-walk move with small
 *      probability during burn-in;
 *   2. each mu_j from its exact conjugate normal conditional (AR1 only);
 *   3. each rho_j by independence MH with a least-squares normal
 *      proposal (AR1 only);
 *   4. each tau2_j from its exact inverse-gamma conditional;
 *   5. psi by random-walk MH, step size adapted toward a target
 *      acceptance rate during burn-in and frozen afterwards.
 *
 * The generic kernels (laplace_approx, armh_step, rw_step) are exposed
 * so tests can drive them against analytically known targets.
 */

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "lorenzts/model.hpp"
#include "lorenzts/rng.hpp"

namespace lorenzts {

struct SamplerConfig {
  int n_burnin = 2000;
  int n_draws = 10000;
  std::uint64_t rng_seed = 1;
  double armh_inflation = 1.2;  // proposal covariance scale factor
  double rw_mix_prob = 0.05;    // burn-in probability of a RW u-move
  double psi_step = 0.1;        // initial psi proposal std. dev.
  double adapt_target = 0.3;    // acceptance rate targeted during burn-in
  double mode_find_tol = 1e-8;
  int mode_find_max_iter = 50;
  int u_thin = 10;              // keep every u_thin-th latent snapshot
};

struct LaplaceResult {
  Eigen::VectorXd mode;
  Eigen::MatrixXd cov;  // inverse negative Hessian times inflation^2
  int iters = 0;
  bool ok = false;
};

/* Newton ascent with central finite differences (step 1e-5*max(1,|x|))
 * and backtracking. ok is false when the curvature at the final point is
 * not negative definite or the search failed to improve; callers fall
 * back to a random-walk move in that case. */
LaplaceResult laplace_approx(const std::function<double(const Eigen::VectorXd&)>& logdensity,
                             const Eigen::VectorXd& init, const SamplerConfig& cfg);

/* One ARMH transition targeting logtarget from current, using the
 * Laplace proposal. Uses the standard pseudo-dominating construction:
 * an accept-reject phase against c*q with log c = logtarget(mode) -
 * log q(mode), then the three-case MH correction. */
Eigen::VectorXd armh_step(const std::function<double(const Eigen::VectorXd&)>& logtarget,
                          const Eigen::VectorXd& current, const LaplaceResult& approx,
                          Rng& rng, bool* accepted);

/* One Gaussian random-walk MH transition with proposal root L (the
 * proposal increment is L * z for z standard normal). */
Eigen::VectorXd rw_step(const std::function<double(const Eigen::VectorXd&)>& logtarget,
                        const Eigen::VectorXd& current, const Eigen::MatrixXd& L,
                        Rng& rng, bool* accepted);

/* Log MH acceptance ratio for a proposal with log-density lq_prop of
 * moving back lq_back: min(0, lp_prop - lp_cur + lq_back - lq_prop). */
double mh_log_accept(double lp_cur, double lp_prop, double lq_prop, double lq_back);

/* Full-conditional updates. Each mutates one block of state in place.
 * step_u_t returns whether the move was accepted; step_psi additionally
 * reports through its return value so the driver can adapt the step. */
bool step_u_t(int t, ChainState& state, const GroupedSeries& data, Family family,
              const SamplerConfig& cfg, bool burnin, Rng& rng, bool* used_fallback);
void step_mu_j(int j, ChainState& state, const PriorSpec& priors, Rng& rng);
bool step_rho_j(int j, ChainState& state, const PriorSpec& priors, Rng& rng);
void step_tau2_j(int j, ChainState& state, const PriorSpec& priors, Rng& rng);
bool step_psi(ChainState& state, const GroupedSeries& data, Family family,
              const PriorSpec& priors, double step_sd, Rng& rng);

struct AcceptanceStats {
  double u = 0.0;                // pooled over periods and sweeps
  Eigen::VectorXd rho;           // per coordinate
  double psi = 0.0;
  long laplace_fallbacks = 0;    // u-updates that used the RW fallback
  double psi_step_final = 0.0;   // adapted step size after burn-in
};

struct PosteriorDraws {
  ProcessKind kind = ProcessKind::AR1;
  Eigen::MatrixXd mu, rho, tau2;       // n_draws x d (mu/rho empty for RW)
  Eigen::VectorXd psi;                 // n_draws
  std::vector<Eigen::MatrixXd> u_snaps;  // thinned latent snapshots
  std::vector<int> u_snap_draw;          // draw index of each snapshot
  AcceptanceStats accept;

  int n_draws() const { return static_cast<int>(psi.size()); }
  int n_snaps() const { return static_cast<int>(u_snaps.size()); }
};

/* Burn-in plus sampling sweeps in fixed order (u_1..u_T, mu, rho, tau2,
 * psi; mu and rho skipped under RW dynamics). Deterministic for a given
 * seed. Throws std::runtime_error with diagnostics if the chain reaches
 * an invalid state (which no accepted move should produce). */
PosteriorDraws run_chain(const GroupedSeries& data, Family family, ProcessKind kind,
                         const PriorSpec& priors, const SamplerConfig& cfg);

/* 1 + 2 * sum of Bartlett-tapered autocorrelations up to lag
 * min(n/10, 1000). Throws std::invalid_argument for n < 100 or a
 * zero-variance sequence. */
double inefficiency_factor(const Eigen::VectorXd& draws);

}  // namespace lorenzts
