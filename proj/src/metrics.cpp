#include "lorenzts/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace lorenzts {

Eigen::MatrixXd functional_draws(const PosteriorDraws& draws, Family family,
                                 const FunctionalSpec& what) {
  const int S = draws.n_snaps();
  if (S == 0) throw std::invalid_argument("functional_draws: no draws");
  const Eigen::Index T = draws.u_snaps[0].rows();
  const int d = family_dim(family);
  if (what.kind == FunctionalSpec::Kind::NaturalParam &&
      (what.j < 0 || what.j >= d))
    throw std::invalid_argument("functional_draws: parameter index out of range");

  Eigen::MatrixXd out(S, T);
  for (int s = 0; s < S; ++s) {
    for (Eigen::Index t = 0; t < T; ++t) {
      ThetaVector theta =
          latent_to_theta({family, draws.u_snaps[s].row(t).transpose()});
      switch (what.kind) {
        case FunctionalSpec::Kind::Gini:
          out(s, t) = gini(theta);
          break;
        case FunctionalSpec::Kind::LorenzAt:
          out(s, t) = lorenz_value(theta, what.p);
          break;
        case FunctionalSpec::Kind::NaturalParam:
          out(s, t) = theta.values[what.j];
          break;
      }
    }
  }
  return out;
}

double relative_bias(double estimate, double truth) {
  if (truth == 0.0)
    throw std::invalid_argument("relative_bias: truth must be nonzero");
  return (estimate - truth) / truth;
}

Eigen::VectorXd relative_bias(const Eigen::VectorXd& estimates,
                              const Eigen::VectorXd& truths) {
  if (estimates.size() != truths.size())
    throw std::invalid_argument("relative_bias: size mismatch");
  Eigen::VectorXd out(estimates.size());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = relative_bias(estimates[i], truths[i]);
  return out;
}

double quantile(const Eigen::VectorXd& draws, double prob) {
  if (draws.size() == 0) throw std::invalid_argument("quantile: empty vector");
  if (!(prob >= 0.0 && prob <= 1.0))
    throw std::invalid_argument("quantile: probability outside [0,1]");
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  std::sort(v.begin(), v.end());
  double h = (static_cast<double>(v.size()) - 1.0) * prob;
  auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  double frac = h - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

std::pair<double, double> credible_interval(const Eigen::VectorXd& draws,
                                            double level) {
  if (draws.size() < 100)
    throw std::invalid_argument("credible_interval: need at least 100 draws");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("credible_interval: level outside (0,1)");
  double tail = 0.5 * (1.0 - level);
  return {quantile(draws, tail), quantile(draws, 1.0 - tail)};
}

}  // namespace lorenzts
