#include "lorenzts/special_functions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace lorenzts {

namespace {

constexpr double kPi = 3.14159265358979323846;

/* Lanczos approximation, g = 7, 9 coefficients. */
double lanczos_log_gamma(double x) {
  static const double coef[9] = {
      0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,    12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6,  1.5056327351493116e-7};
  if (x < 0.5) {
    // reflection: ln Gamma(x) = ln(pi / sin(pi x)) - ln Gamma(1 - x)
    return std::log(kPi / std::sin(kPi * x)) - lanczos_log_gamma(1.0 - x);
  }
  x -= 1.0;
  double acc = coef[0];
  for (int i = 1; i < 9; ++i) acc += coef[i] / (x + i);
  double t = x + 7.5;
  return 0.5 * std::log(2.0 * kPi) + (x + 0.5) * std::log(t) - t + std::log(acc);
}

/* Continued fraction for the incomplete beta function (modified Lentz).
 * Converges for z below the symmetry split point. */
double inc_beta_cf(double a, double b, double z) {
  const int max_iter = 300;
  const double eps = 3e-16;
  const double tiny = 1e-300;

  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * z / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * z / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

/* I_z(a,b) given both z and its complement to full precision. */
double ibeta_with_complement(double a, double b, double z, double zc) {
  if (z <= 0.0) return 0.0;
  if (zc <= 0.0) return 1.0;
  double ln_pref = a * std::log(z) + b * std::log(zc) - log_beta(a, b);
  if (z < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(ln_pref) * inc_beta_cf(a, b, z) / a;
  }
  return 1.0 - std::exp(ln_pref) * inc_beta_cf(b, a, zc) / b;
}

}  // namespace

double log_gamma(double x) {
  if (!std::isfinite(x) || x <= 0.0)
    throw std::domain_error("log_gamma: argument must be positive and finite");
  return lanczos_log_gamma(x);
}

double log_beta(double a, double b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double reg_inc_beta(double z, double a, double b) {
  if (!(z >= 0.0 && z <= 1.0))
    throw std::domain_error("reg_inc_beta: z must lie in [0,1]");
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("reg_inc_beta: a and b must be positive");
  if (z < 1e-15) return 0.0;
  if (z > 1.0 - 1e-15) return 1.0;
  return ibeta_with_complement(a, b, z, 1.0 - z);
}

double reg_inc_beta_c(double z, double zc, double a, double b) {
  if (!(z >= 0.0 && z <= 1.0) || !(zc >= 0.0 && zc <= 1.0))
    throw std::domain_error("reg_inc_beta_c: z and zc must lie in [0,1]");
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("reg_inc_beta_c: a and b must be positive");
  return ibeta_with_complement(a, b, z, zc);
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("normal_quantile: p must lie strictly in (0,1)");

  // Acklam's rational approximation, then one Halley refinement.
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;

  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

QuadratureRule gauss_legendre_rule(int order) {
  if (order < 1) throw std::domain_error("gauss_legendre_rule: order must be >= 1");
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);

  int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < order; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
      }
      pp = order * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadratureRule& rule) {
  if (!(lo < hi)) throw std::domain_error("integrate: need lo < hi");
  double mid = 0.5 * (lo + hi), halfw = 0.5 * (hi - lo);
  double acc = 0.0;
  for (int i = 0; i < rule.order; ++i)
    acc += rule.weights[i] * f(mid + halfw * rule.nodes[i]);
  return halfw * acc;
}

double integrate_unit_graded(const std::function<double(double)>& f,
                             const QuadratureRule& rule) {
  static const std::vector<double> breaks = [] {
    std::vector<double> left{0.0};
    for (double w = 0x1.0p-45; w < 0.5; w *= 2.0) left.push_back(w);
    left.push_back(0.5);
    std::vector<double> all(left);
    for (auto it = left.rbegin() + 1; it != left.rend(); ++it)
      all.push_back(1.0 - *it);
    return all;
  }();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    acc += integrate(f, breaks[i], breaks[i + 1], rule);
  return acc;
}

}  // namespace lorenzts
