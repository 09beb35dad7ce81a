#include "lorenzts/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lorenzts {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double sq(double x) { return x * x; }

/* Central finite differences of f at x: gradient and Hessian with the
 * per-coordinate step 1e-5 * max(1, |x_i|). Returns false if any stencil
 * evaluation is non-finite (the point sits against the valid-region
 * boundary and Newton cannot proceed). */
bool fd_derivatives(const std::function<double(const Eigen::VectorXd&)>& f,
                    const Eigen::VectorXd& x, double fx, Eigen::VectorXd& g,
                    Eigen::MatrixXd& H) {
  const int d = static_cast<int>(x.size());
  Eigen::VectorXd h(d);
  for (int i = 0; i < d; ++i) h[i] = 1e-5 * std::max(1.0, std::fabs(x[i]));

  Eigen::VectorXd fp(d), fm(d);
  Eigen::VectorXd e = x;
  for (int i = 0; i < d; ++i) {
    e[i] = x[i] + h[i];
    fp[i] = f(e);
    e[i] = x[i] - h[i];
    fm[i] = f(e);
    e[i] = x[i];
    if (!std::isfinite(fp[i]) || !std::isfinite(fm[i])) return false;
    g[i] = (fp[i] - fm[i]) / (2.0 * h[i]);
    H(i, i) = (fp[i] - 2.0 * fx + fm[i]) / (h[i] * h[i]);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      Eigen::VectorXd z = x;
      z[i] += h[i]; z[j] += h[j];
      double fpp = f(z);
      z[j] = x[j] - h[j];
      double fpm = f(z);
      z[i] = x[i] - h[i];
      double fmm = f(z);
      z[j] = x[j] + h[j];
      double fmp = f(z);
      if (!std::isfinite(fpp) || !std::isfinite(fpm) || !std::isfinite(fmm) ||
          !std::isfinite(fmp))
        return false;
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
    }
  }
  return true;
}

/* Cholesky of -H with a little diagonal jitter. The jitter only absorbs
 * finite-difference rounding near singular curvature; it is capped so a
 * genuinely indefinite Hessian still reports failure. */
bool neg_hessian_llt(const Eigen::MatrixXd& H, Eigen::LLT<Eigen::MatrixXd>& llt) {
  Eigen::MatrixXd A = -H;
  double base = A.diagonal().cwiseAbs().maxCoeff();
  if (!(base > 0.0) || !std::isfinite(base)) base = 1.0;
  for (double jitter : {0.0, 1e-10, 1e-8, 1e-6, 1e-4}) {
    llt.compute(A + jitter * base * Eigen::MatrixXd::Identity(A.rows(), A.cols()));
    if (llt.info() == Eigen::Success) return true;
  }
  return false;
}

/* Process-side terms of the u_t full conditional (constants dropped). */
double u_pair_terms(const ChainState& state, int t, const Eigen::VectorXd& w) {
  const LatentProcessSpec& pr = state.process;
  const int T = static_cast<int>(state.u.rows());
  const int d = static_cast<int>(state.u.cols());
  double acc = 0.0;
  for (int j = 0; j < d; ++j) {
    double tau2 = pr.tau2[j];
    if (pr.kind == ProcessKind::AR1) {
      double mu = pr.mu[j], rho = pr.rho[j];
      if (t == 0) {
        acc -= 0.5 * (1.0 - rho * rho) * sq(w[j] - mu) / tau2;
        if (T > 1) acc -= 0.5 * sq(state.u(1, j) - mu - rho * (w[j] - mu)) / tau2;
      } else {
        acc -= 0.5 * sq(w[j] - mu - rho * (state.u(t - 1, j) - mu)) / tau2;
        if (t + 1 < T)
          acc -= 0.5 * sq(state.u(t + 1, j) - mu - rho * (w[j] - mu)) / tau2;
      }
    } else {
      if (t == 0) {
        acc -= 0.5 * sq(w[j]) / (pr.c * tau2);
        if (T > 1) acc -= 0.5 * sq(state.u(1, j) - w[j]) / tau2;
      } else {
        acc -= 0.5 * sq(w[j] - state.u(t - 1, j)) / tau2;
        if (t + 1 < T) acc -= 0.5 * sq(state.u(t + 1, j) - w[j]) / tau2;
      }
    }
  }
  return acc;
}

double normal_lpdf(double x, double mean, double var) {
  double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

/* Shared core of the psi update: random-walk MH against the Dirichlet
 * terms evaluated from a precomputed increment matrix. */
bool psi_update(double& psi, const Eigen::MatrixXd& deltaL, const GroupedSeries& data,
                const PriorSpec& priors, double step_sd, Rng& rng) {
  auto logtarget = [&](double p) {
    double acc = normal_lpdf(p, priors.m_psi, priors.v2_psi);
    for (int t = 0; t < data.T(); ++t) {
      double lam = lambda_t(p, data.n[t]);
      if (!std::isfinite(lam) || !(lam > 0.0)) return kNegInf;
      acc += dirichlet_logpdf(data.q.row(t).transpose(),
                              (lam * deltaL.row(t).transpose()).eval());
      if (!std::isfinite(acc)) return kNegInf;
    }
    return acc;
  };
  double prop = psi + step_sd * rng.normal();
  double la = logtarget(prop) - logtarget(psi);
  if (la >= 0.0 || std::log(rng.uniform_open()) < la) {
    psi = prop;
    return true;
  }
  return false;
}

Eigen::MatrixXd increments_matrix(const ChainState& state, const GroupedSeries& data,
                                  Family family) {
  Eigen::MatrixXd deltaL(data.T(), data.K());
  for (int t = 0; t < data.T(); ++t) {
    ThetaVector theta = latent_to_theta({family, state.u.row(t).transpose()});
    if (!theta_valid(theta))
      throw std::runtime_error("chain state maps to invalid curve parameters at period " +
                               std::to_string(t + 1));
    IncrementsResult inc = lorenz_increments(theta, data.p_grid);
    if (!inc.valid)
      throw std::runtime_error("chain state produces non-positive increments at period " +
                               std::to_string(t + 1));
    deltaL.row(t) = inc.delta.transpose();
  }
  return deltaL;
}

}  // namespace

double mh_log_accept(double lp_cur, double lp_prop, double lq_prop, double lq_back) {
  return std::min(0.0, lp_prop - lp_cur + lq_back - lq_prop);
}

LaplaceResult laplace_approx(const std::function<double(const Eigen::VectorXd&)>& logdensity,
                             const Eigen::VectorXd& init, const SamplerConfig& cfg) {
  const int d = static_cast<int>(init.size());
  LaplaceResult out;
  out.mode = init;

  double fx = logdensity(init);
  if (!std::isfinite(fx)) return out;
  const double f_init = fx;

  Eigen::VectorXd x = init, g(d);
  Eigen::MatrixXd H(d, d);
  Eigen::VectorXd x_at_H = x;
  bool have_H = false;
  int it = 0;

  while (it < cfg.mode_find_max_iter) {
    ++it;
    if (!fd_derivatives(logdensity, x, fx, g, H)) {
      out.mode = x;
      out.iters = it;
      return out;  // boundary contact, ok stays false
    }
    x_at_H = x;
    have_H = true;
    if (g.lpNorm<Eigen::Infinity>() < cfg.mode_find_tol) break;

    Eigen::LLT<Eigen::MatrixXd> llt;
    if (!neg_hessian_llt(H, llt)) {
      out.mode = x;
      out.iters = it;
      return out;
    }
    Eigen::VectorXd s = llt.solve(g);
    // Newton decrement at the double-precision noise floor of f: further
    // refinement cannot raise the density by more than rounding error.
    if (0.5 * g.dot(s) < 1e-14 * (1.0 + std::fabs(fx))) break;

    double step = 1.0;
    bool improved = false;
    Eigen::VectorXd xn;
    double fn = fx;
    for (int ls = 0; ls < 40; ++ls) {
      xn = x + step * s;
      fn = logdensity(xn);
      if (std::isfinite(fn) && fn > fx) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    double gain = fn - fx;
    double move = (step * s).lpNorm<Eigen::Infinity>();
    x = xn;
    fx = fn;
    if (gain < 1e-14 * (1.0 + std::fabs(fx)) ||
        move < 1e-9 * (1.0 + x.lpNorm<Eigen::Infinity>()))
      break;
  }

  // Refresh curvature if the accepted point drifted away from where the
  // Hessian was last evaluated.
  if (!have_H ||
      (x - x_at_H).lpNorm<Eigen::Infinity>() > 0.01 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
    if (!fd_derivatives(logdensity, x, fx, g, H)) {
      out.mode = x;
      out.iters = it;
      return out;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!neg_hessian_llt(H, llt)) {
    out.mode = x;
    out.iters = it;
    return out;
  }
  out.mode = x;
  out.iters = std::max(it, 1);
  out.cov = llt.solve(Eigen::MatrixXd::Identity(d, d)) *
            (cfg.armh_inflation * cfg.armh_inflation);
  out.ok = fx >= f_init - 1e-9;
  return out;
}

Eigen::VectorXd armh_step(const std::function<double(const Eigen::VectorXd&)>& logtarget,
                          const Eigen::VectorXd& current, const LaplaceResult& approx,
                          Rng& rng, bool* accepted) {
  *accepted = false;
  const int d = static_cast<int>(current.size());
  Eigen::LLT<Eigen::MatrixXd> llt(approx.cov);
  if (llt.info() != Eigen::Success) return current;
  Eigen::MatrixXd L = llt.matrixL();
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(L(i, i));

  auto logq = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(z - approx.mode);
    return -0.5 * (d * kLog2Pi + logdet + y.squaredNorm());
  };

  double lp_mode = logtarget(approx.mode);
  if (!std::isfinite(lp_mode)) return current;
  double log_c = lp_mode - logq(approx.mode);

  // Accept-reject phase: draw from the proposal until a point passes
  // against the pseudo-dominating envelope c * q.
  Eigen::VectorXd cand(d);
  double w_cand = 0.0;
  bool got = false;
  for (int tries = 0; tries < 100 && !got; ++tries) {
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    cand = approx.mode + L * z;
    double lw = logtarget(cand) - log_c - logq(cand);
    if (lw >= 0.0 || std::log(rng.uniform_open()) < lw) {
      w_cand = lw;
      got = true;
    }
  }
  if (!got) return current;

  // MH correction. Points with w <= 0 are dominated by the envelope.
  double w_cur = logtarget(current) - log_c - logq(current);
  double log_alpha;
  if (w_cur <= 0.0)
    log_alpha = 0.0;
  else if (w_cand <= 0.0)
    log_alpha = -w_cur;
  else
    log_alpha = w_cand - w_cur;

  if (log_alpha >= 0.0 || std::log(rng.uniform_open()) < log_alpha) {
    *accepted = true;
    return cand;
  }
  return current;
}

Eigen::VectorXd rw_step(const std::function<double(const Eigen::VectorXd&)>& logtarget,
                        const Eigen::VectorXd& current, const Eigen::MatrixXd& L,
                        Rng& rng, bool* accepted) {
  *accepted = false;
  const int d = static_cast<int>(current.size());
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  Eigen::VectorXd prop = current + L * z;
  double la = logtarget(prop) - logtarget(current);
  if (la >= 0.0 || std::log(rng.uniform_open()) < la) {
    *accepted = true;
    return prop;
  }
  return current;
}

bool step_u_t(int t, ChainState& state, const GroupedSeries& data, Family family,
              const SamplerConfig& cfg, bool burnin, Rng& rng, bool* used_fallback) {
  if (used_fallback) *used_fallback = false;
  Eigen::VectorXd q_row = data.q.row(t).transpose();
  const double n_t = data.n[t];
  auto target = [&](const Eigen::VectorXd& w) {
    return obs_loglik_t(q_row, LatentVector{family, w}, state.psi, n_t, data.p_grid) +
           u_pair_terms(state, t, w);
  };
  Eigen::VectorXd cur = state.u.row(t).transpose();
  const int d = static_cast<int>(cur.size());
  bool accepted = false;

  if (burnin && rng.uniform() < cfg.rw_mix_prob) {
    Eigen::MatrixXd L = 0.1 * Eigen::MatrixXd::Identity(d, d);
    state.u.row(t) = rw_step(target, cur, L, rng, &accepted).transpose();
    return accepted;
  }

  LaplaceResult lap = laplace_approx(target, cur, cfg);
  if (!lap.ok) {
    if (used_fallback) *used_fallback = true;
    Eigen::MatrixXd L = 0.1 * Eigen::MatrixXd::Identity(d, d);
    state.u.row(t) = rw_step(target, cur, L, rng, &accepted).transpose();
    return accepted;
  }
  state.u.row(t) = armh_step(target, cur, lap, rng, &accepted).transpose();
  return accepted;
}

void step_mu_j(int j, ChainState& state, const PriorSpec& priors, Rng& rng) {
  if (state.process.kind != ProcessKind::AR1)
    throw std::logic_error("step_mu_j: AR1 dynamics only");
  const Eigen::Index T = state.u.rows();
  double rho = state.process.rho[j], tau2 = state.process.tau2[j];
  double prec = (1.0 - rho * rho) / tau2 + (T - 1) * sq(1.0 - rho) / tau2 +
                1.0 / priors.v2[j];
  double num = (1.0 - rho * rho) * state.u(0, j) / tau2 + priors.m[j] / priors.v2[j];
  for (Eigen::Index t = 1; t < T; ++t)
    num += (1.0 - rho) * (state.u(t, j) - rho * state.u(t - 1, j)) / tau2;
  state.process.mu[j] = rng.normal(num / prec, std::sqrt(1.0 / prec));
}

bool step_rho_j(int j, ChainState& state, const PriorSpec& priors, Rng& rng) {
  (void)priors;  // the uniform(-1,1) prior contributes only its support
  if (state.process.kind != ProcessKind::AR1)
    throw std::logic_error("step_rho_j: AR1 dynamics only");
  const Eigen::Index T = state.u.rows();
  double mu = state.process.mu[j], tau2 = state.process.tau2[j];
  double rho = state.process.rho[j];

  double denom = 0.0, cross = 0.0;
  for (Eigen::Index t = 1; t < T; ++t) {
    double prev = state.u(t - 1, j) - mu;
    denom += prev * prev;
    cross += (state.u(t, j) - mu) * prev;
  }

  // Stationary-initialization factor of the target; the transition
  // quadratic cancels exactly against the least-squares proposal.
  auto log_stationary_part = [&](double r) {
    return 0.5 * std::log(1.0 - r * r) -
           0.5 * (1.0 - r * r) * sq(state.u(0, j) - mu) / tau2;
  };

  if (denom < 1e-12) {
    // Degenerate design: propose uniformly and use the full conditional.
    double prop = 2.0 * rng.uniform() - 1.0;
    auto full = [&](double r) {
      double acc = log_stationary_part(r);
      for (Eigen::Index t = 1; t < T; ++t)
        acc -= 0.5 * sq(state.u(t, j) - mu - r * (state.u(t - 1, j) - mu)) / tau2;
      return acc;
    };
    double la = full(prop) - full(rho);
    if (la >= 0.0 || std::log(rng.uniform_open()) < la) {
      state.process.rho[j] = prop;
      return true;
    }
    return false;
  }

  double mhat = cross / denom;
  double sd = std::sqrt(tau2 / denom);
  double prop = rng.normal(mhat, sd);
  if (!(prop > -1.0 && prop < 1.0)) return false;
  double la = log_stationary_part(prop) - log_stationary_part(rho);
  if (la >= 0.0 || std::log(rng.uniform_open()) < la) {
    state.process.rho[j] = prop;
    return true;
  }
  return false;
}

void step_tau2_j(int j, ChainState& state, const PriorSpec& priors, Rng& rng) {
  const Eigen::Index T = state.u.rows();
  double rhat = priors.r[j] + 0.5 * T;
  double shat = priors.s[j];
  if (state.process.kind == ProcessKind::AR1) {
    double mu = state.process.mu[j], rho = state.process.rho[j];
    shat += 0.5 * (1.0 - rho * rho) * sq(state.u(0, j) - mu);
    for (Eigen::Index t = 1; t < T; ++t)
      shat += 0.5 * sq(state.u(t, j) - mu - rho * (state.u(t - 1, j) - mu));
  } else {
    shat += 0.5 * sq(state.u(0, j)) / state.process.c;
    for (Eigen::Index t = 1; t < T; ++t)
      shat += 0.5 * sq(state.u(t, j) - state.u(t - 1, j));
  }
  state.process.tau2[j] = rng.inv_gamma(rhat, shat);
}

bool step_psi(ChainState& state, const GroupedSeries& data, Family family,
              const PriorSpec& priors, double step_sd, Rng& rng) {
  Eigen::MatrixXd deltaL = increments_matrix(state, data, family);
  return psi_update(state.psi, deltaL, data, priors, step_sd, rng);
}

PosteriorDraws run_chain(const GroupedSeries& data, Family family, ProcessKind kind,
                         const PriorSpec& priors, const SamplerConfig& cfg) {
  validate(data);
  const int T = data.T();
  const int d = family_dim(family);
  if (priors.m.size() != d || priors.v2.size() != d || priors.r.size() != d ||
      priors.s.size() != d)
    throw std::invalid_argument("run_chain: prior dimensions do not match the family");

  Rng rng(cfg.rng_seed);

  ChainState state;
  state.u = init_latent(data, family);
  state.process.kind = kind;
  state.process.c = priors.c;
  state.process.tau2 = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < d; ++j)
    state.process.tau2[j] = priors.s[j] / (priors.r[j] + 1.0);
  if (kind == ProcessKind::AR1) {
    state.process.mu = state.u.colwise().mean().transpose();
    state.process.rho = Eigen::VectorXd::Constant(d, 0.5);
  } else {
    state.process.mu = Eigen::VectorXd::Zero(d);
    state.process.rho = Eigen::VectorXd::Zero(d);
  }
  state.psi = 0.0;

  Eigen::MatrixXd deltaL = increments_matrix(state, data, family);

  PosteriorDraws out;
  out.kind = kind;
  if (kind == ProcessKind::AR1) {
    out.mu.resize(cfg.n_draws, d);
    out.rho.resize(cfg.n_draws, d);
  }
  out.tau2.resize(cfg.n_draws, d);
  out.psi.resize(cfg.n_draws);
  out.accept.rho = Eigen::VectorXd::Zero(d);

  double psi_step = cfg.psi_step;
  long u_accepts = 0, u_moves = 0, psi_accepts = 0, psi_moves = 0;
  Eigen::VectorXd rho_accepts = Eigen::VectorXd::Zero(d);
  long rho_moves = 0;

  const int total = cfg.n_burnin + cfg.n_draws;
  for (int sweep = 0; sweep < total; ++sweep) {
    const bool burnin = sweep < cfg.n_burnin;

    for (int t = 0; t < T; ++t) {
      bool fb = false;
      bool acc = step_u_t(t, state, data, family, cfg, burnin, rng, &fb);
      if (fb) ++out.accept.laplace_fallbacks;
      if (acc) {
        ThetaVector theta = latent_to_theta({family, state.u.row(t).transpose()});
        deltaL.row(t) = lorenz_increments(theta, data.p_grid).delta.transpose();
        if (!burnin) ++u_accepts;
      }
      if (!burnin) ++u_moves;
    }

    if (kind == ProcessKind::AR1) {
      for (int j = 0; j < d; ++j) step_mu_j(j, state, priors, rng);
      for (int j = 0; j < d; ++j) {
        bool acc = step_rho_j(j, state, priors, rng);
        if (!burnin && acc) rho_accepts[j] += 1.0;
      }
      if (!burnin) ++rho_moves;
    }
    for (int j = 0; j < d; ++j) step_tau2_j(j, state, priors, rng);

    bool psi_acc = psi_update(state.psi, deltaL, data, priors, psi_step, rng);
    if (burnin) {
      double ci = std::pow(sweep + 1.0, -0.6);
      psi_step = std::clamp(psi_step * std::exp(ci * ((psi_acc ? 1.0 : 0.0) -
                                                      cfg.adapt_target)),
                            1e-4, 10.0);
    } else {
      ++psi_moves;
      if (psi_acc) ++psi_accepts;
    }

    if (!burnin) {
      int idx = sweep - cfg.n_burnin;
      if (kind == ProcessKind::AR1) {
        out.mu.row(idx) = state.process.mu.transpose();
        out.rho.row(idx) = state.process.rho.transpose();
      }
      out.tau2.row(idx) = state.process.tau2.transpose();
      out.psi[idx] = state.psi;
      if (idx % cfg.u_thin == 0) {
        if (!(deltaL.minCoeff() > 0.0) || !std::isfinite(state.psi))
          throw std::runtime_error("chain reached an invalid state at draw " +
                                   std::to_string(idx + 1));
        out.u_snaps.push_back(state.u);
        out.u_snap_draw.push_back(idx);
      }
    }
  }

  out.accept.u = u_moves > 0 ? static_cast<double>(u_accepts) / u_moves : 0.0;
  out.accept.rho = rho_moves > 0 ? (rho_accepts / rho_moves).eval()
                                 : Eigen::VectorXd::Zero(d);
  out.accept.psi = psi_moves > 0 ? static_cast<double>(psi_accepts) / psi_moves : 0.0;
  out.accept.psi_step_final = psi_step;
  return out;
}

double inefficiency_factor(const Eigen::VectorXd& draws) {
  const Eigen::Index n = draws.size();
  if (n < 100) throw std::invalid_argument("inefficiency_factor: need at least 100 draws");
  double mean = draws.mean();
  Eigen::VectorXd x = draws.array() - mean;
  double c0 = x.squaredNorm() / n;
  if (!(c0 > 0.0))
    throw std::invalid_argument("inefficiency_factor: zero-variance sequence");
  const Eigen::Index L = std::min<Eigen::Index>(n / 10, 1000);
  double acc = 0.0;
  for (Eigen::Index l = 1; l <= L; ++l) {
    double cl = 0.0;
    for (Eigen::Index t = 0; t + l < n; ++t) cl += x[t] * x[t + l];
    cl /= n;
    acc += (1.0 - static_cast<double>(l) / (L + 1)) * (cl / c0);
  }
  return 1.0 + 2.0 * acc;
}

}  // namespace lorenzts
