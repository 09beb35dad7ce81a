#include "lorenzts/lorenz.hpp"

#include <cmath>
#include <stdexcept>

#include "lorenzts/special_functions.hpp"

namespace lorenzts {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("logit: argument must lie strictly in (0,1)");
  return std::log(p) - std::log1p(-p);
}

void require_valid(const ThetaVector& theta) {
  if (!theta_valid(theta))
    throw std::invalid_argument("invalid Lorenz curve parameters");
}

/* Family kernels on p strictly inside (0,1). The SM and DA evaluations
 * pass the complement of the beta argument explicitly: near p = 1 the
 * argument z rounds to 1 long before the curve reaches 1, and the tail
 * of the integral would otherwise be lost. */
double value_inside(const ThetaVector& theta, double p) {
  const Eigen::VectorXd& v = theta.values;
  switch (theta.family) {
    case Family::LN:
      return normal_cdf(normal_quantile(p) - v[0]);
    case Family::SM: {
      double alpha = v[0], gamma = v[1];
      double zc = std::pow(1.0 - p, 1.0 / gamma);
      return reg_inc_beta_c(1.0 - zc, zc, 1.0 + 1.0 / alpha, gamma - 1.0 / alpha);
    }
    case Family::DA: {
      double alpha = v[0], kappa = v[1];
      double z = std::pow(p, 1.0 / kappa);
      double zc = -std::expm1(std::log(p) / kappa);
      return reg_inc_beta_c(z, zc, kappa + 1.0 / alpha, 1.0 - 1.0 / alpha);
    }
    case Family::KA: {
      double nu = v[0], xi = v[1], delta = v[2];
      return p - nu * std::pow(p, xi) * std::pow(1.0 - p, delta);
    }
    case Family::OR: {
      double alpha = v[0], delta = v[1];
      return std::pow(p, alpha) * (-std::expm1(delta * std::log1p(-p)));
    }
    case Family::RA: {
      double gamma = v[0], delta = v[1];
      return std::pow(-std::expm1(delta * std::log1p(-p)), gamma);
    }
  }
  return 0.0;
}

}  // namespace

int family_dim(Family f) {
  switch (f) {
    case Family::LN: return 1;
    case Family::KA: return 3;
    default: return 2;
  }
}

const char* family_name(Family f) {
  switch (f) {
    case Family::LN: return "ln";
    case Family::SM: return "sm";
    case Family::DA: return "da";
    case Family::KA: return "ka";
    case Family::OR: return "or";
    case Family::RA: return "ra";
  }
  return "?";
}

std::optional<Family> family_from_string(std::string_view s) {
  if (s == "ln") return Family::LN;
  if (s == "sm") return Family::SM;
  if (s == "da") return Family::DA;
  if (s == "ka") return Family::KA;
  if (s == "or") return Family::OR;
  if (s == "ra") return Family::RA;
  return std::nullopt;
}

bool theta_valid(const ThetaVector& theta) {
  const Eigen::VectorXd& v = theta.values;
  if (v.size() != family_dim(theta.family)) return false;
  if (!v.allFinite()) return false;
  switch (theta.family) {
    case Family::LN:
      return v[0] > 0.0;
    case Family::SM:
      return v[0] > 0.0 && v[1] > 0.0 && v[0] * v[1] > 1.0;
    case Family::DA:
      return v[0] > 1.0 && v[1] > 0.0;
    case Family::KA:
      return v[0] > 0.0 && v[1] > 0.0 && v[1] < 1.0 && v[2] > 0.0 && v[2] < 1.0;
    case Family::OR:
      return v[0] > 0.0 && v[1] > 0.0 && v[1] < 1.0;
    case Family::RA:
      return v[0] > 0.0 && v[1] > 0.0 && v[1] < 1.0;
  }
  return false;
}

double lorenz_value(const ThetaVector& theta, double p) {
  require_valid(theta);
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  return value_inside(theta, p);
}

IncrementsResult lorenz_increments(const ThetaVector& theta,
                                   const Eigen::VectorXd& p_grid) {
  require_valid(theta);
  const Eigen::Index K = p_grid.size() - 1;
  if (K < 1 || p_grid[0] != 0.0 || p_grid[K] != 1.0)
    throw std::invalid_argument("lorenz_increments: grid must run from 0 to 1");
  for (Eigen::Index k = 0; k < K; ++k)
    if (!(p_grid[k] < p_grid[k + 1]))
      throw std::invalid_argument("lorenz_increments: grid must be strictly increasing");

  IncrementsResult out;
  out.delta.resize(K);
  double prev = 0.0;
  bool ok = true;
  for (Eigen::Index k = 1; k <= K; ++k) {
    double cur = k == K ? 1.0 : value_inside(theta, p_grid[k]);
    out.delta[k - 1] = cur - prev;
    ok = ok && out.delta[k - 1] > 0.0;
    prev = cur;
  }
  out.valid = ok;
  return out;
}

double gini_quadrature(const ThetaVector& theta) {
  static const QuadratureRule rule = gauss_legendre_rule(64);
  return gini_quadrature(theta, rule);
}

double gini_quadrature(const ThetaVector& theta, const QuadratureRule& rule) {
  require_valid(theta);
  // The extreme node of the last graded panel rounds to exactly 1.0, so
  // clamp the endpoints the same way lorenz_value does.
  double area = integrate_unit_graded(
      [&theta](double p) {
        if (p <= 0.0) return 0.0;
        if (p >= 1.0) return 1.0;
        return value_inside(theta, p);
      },
      rule);
  return 1.0 - 2.0 * area;
}

double gini(const ThetaVector& theta) {
  require_valid(theta);
  const Eigen::VectorXd& v = theta.values;
  switch (theta.family) {
    case Family::LN:
      return 2.0 * normal_cdf(v[0] / std::sqrt(2.0)) - 1.0;
    case Family::SM: {
      double alpha = v[0], gamma = v[1];
      return 1.0 - std::exp(log_gamma(gamma) + log_gamma(2.0 * gamma - 1.0 / alpha) -
                            log_gamma(gamma - 1.0 / alpha) - log_gamma(2.0 * gamma));
    }
    default:
      return gini_quadrature(theta);
  }
}

double dagum_gini_ratio(double alpha, double kappa) {
  return std::exp(log_gamma(kappa) + log_gamma(2.0 * kappa + 1.0 / alpha) -
                  log_gamma(kappa + 1.0 / alpha) - log_gamma(2.0 * kappa));
}

LatentVector theta_to_latent(const ThetaVector& theta) {
  require_valid(theta);
  const Eigen::VectorXd& v = theta.values;
  LatentVector u{theta.family, Eigen::VectorXd(v.size())};
  switch (theta.family) {
    case Family::LN:
      u.values[0] = std::log(v[0]);
      break;
    case Family::SM:
    case Family::DA:
      u.values[0] = std::log(v[0]);
      u.values[1] = std::log(v[1]);
      break;
    case Family::KA:
      u.values[0] = std::log(v[0]);
      u.values[1] = logit(v[1]);
      u.values[2] = logit(v[2]);
      break;
    case Family::OR:
    case Family::RA:
      u.values[0] = std::log(v[0]);
      u.values[1] = logit(v[1]);
      break;
  }
  return u;
}

ThetaVector latent_to_theta(const LatentVector& u) {
  const Eigen::VectorXd& w = u.values;
  if (w.size() != family_dim(u.family))
    throw std::invalid_argument("latent_to_theta: wrong dimension");
  ThetaVector theta{u.family, Eigen::VectorXd(w.size())};
  switch (u.family) {
    case Family::LN:
      theta.values[0] = std::exp(w[0]);
      break;
    case Family::SM:
    case Family::DA:
      theta.values[0] = std::exp(w[0]);
      theta.values[1] = std::exp(w[1]);
      break;
    case Family::KA:
      theta.values[0] = std::exp(w[0]);
      theta.values[1] = logistic(w[1]);
      theta.values[2] = logistic(w[2]);
      break;
    case Family::OR:
    case Family::RA:
      theta.values[0] = std::exp(w[0]);
      theta.values[1] = logistic(w[1]);
      break;
  }
  return theta;
}

ThetaVector family_init_theta(Family f) {
  ThetaVector theta{f, Eigen::VectorXd(family_dim(f))};
  switch (f) {
    case Family::LN: theta.values << 0.5; break;
    case Family::SM: theta.values << 3.0, 1.5; break;
    case Family::DA: theta.values << 3.0, 0.6; break;
    case Family::KA: theta.values << 0.6, 0.9, 0.6; break;
    case Family::OR: theta.values << 0.5, 0.6; break;
    case Family::RA: theta.values << 0.9, 0.7; break;
  }
  return theta;
}

}  // namespace lorenzts
