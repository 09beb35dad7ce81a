#pragma once
/*
 * Deterministic random number generation.
 *
 * All variates are derived from a single mt19937_64 integer stream with
 * fixed algorithms (inverse-CDF normals, Marsaglia-Tsang gammas), so a
 * seed produces bit-identical chains on every platform and standard
 * library. std::normal_distribution and friends are deliberately not
 * used: their output is implementation-defined.
 */

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "lorenzts/special_functions.hpp"

namespace lorenzts {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform on [0,1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform on (0,1)
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  // uniform integer in {0, ..., n-1}
  int uniform_int(int n) {
    return static_cast<int>(uniform() * n) % n;
  }

  double normal() { return normal_quantile(uniform_open()); }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma(shape, scale), Marsaglia-Tsang; boosted for shape < 1.
  double gamma(double shape, double scale = 1.0) {
    if (shape < 1.0) {
      double u = uniform_open();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform_open();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
        return scale * d * v;
    }
  }

  // Inverse gamma with density proportional to x^-(shape+1) exp(-scale/x).
  double inv_gamma(double shape, double scale) { return scale / gamma(shape); }

  /* Dirichlet via normalized gammas. Components are floored at 1e-290
   * before normalization: for very small concentration parameters a raw
   * gamma draw can underflow to exactly zero, and a zero share poisons
   * every log-density downstream. The floor is far below any statistical
   * resolution. */
  Eigen::VectorXd dirichlet(const Eigen::VectorXd& a) {
    Eigen::VectorXd g(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
      g[i] = std::max(gamma(a[i]), 1e-290);
    return g / g.sum();
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace lorenzts
