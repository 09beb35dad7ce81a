#include "lorenzts/ppl.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lorenzts {

namespace {

struct MomentAccum {
  Eigen::MatrixXd sum_m, sum_m2, sum_v;
  long count = 0;

  MomentAccum(Eigen::Index T, Eigen::Index K)
      : sum_m(Eigen::MatrixXd::Zero(T, K)),
        sum_m2(Eigen::MatrixXd::Zero(T, K)),
        sum_v(Eigen::MatrixXd::Zero(T, K)) {}

  void add_row(Eigen::Index t, const Eigen::VectorXd& m, double lambda) {
    sum_m.row(t) += m.transpose();
    sum_m2.row(t) += m.array().square().matrix().transpose();
    sum_v.row(t) +=
        (m.array() * (1.0 - m.array()) / (lambda + 1.0)).matrix().transpose();
  }

  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> finish() const {
    Eigen::MatrixXd E = sum_m / static_cast<double>(count);
    Eigen::MatrixXd V = sum_v / static_cast<double>(count) +
                        (sum_m2 / static_cast<double>(count) - E.cwiseProduct(E))
                            .cwiseMax(0.0);
    return {E, V};
  }
};

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> predictive_moments(
    const PosteriorDraws& draws, const GroupedSeries& data, Family family) {
  const int S = draws.n_snaps();
  if (S == 0) throw std::invalid_argument("predictive_moments: no draws");
  const Eigen::Index T = data.T(), K = data.K();

  MomentAccum acc(T, K);
  for (int s = 0; s < S; ++s) {
    double psi = draws.psi[draws.u_snap_draw[s]];
    for (Eigen::Index t = 0; t < T; ++t) {
      IncrementsResult inc = lorenz_increments(
          latent_to_theta({family, draws.u_snaps[s].row(t).transpose()}),
          data.p_grid);
      if (!inc.valid)
        throw std::runtime_error("predictive_moments: invalid stored draw");
      acc.add_row(t, inc.delta, lambda_t(psi, data.n[t]));
    }
    ++acc.count;
  }
  return acc.finish();
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> predictive_moments(
    const std::vector<SeparateFitResult>& fits, const GroupedSeries& data,
    Family family, int thin) {
  if (fits.empty() || fits[0].theta.rows() == 0)
    throw std::invalid_argument("predictive_moments: no draws");
  if (static_cast<Eigen::Index>(fits.size()) != data.T())
    throw std::invalid_argument("predictive_moments: period count mismatch");
  thin = std::max(1, thin);
  const Eigen::Index T = data.T(), K = data.K();

  MomentAccum acc(T, K);
  // Counts per period are equal by construction; track the first.
  long count0 = 0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const SeparateFitResult& fit = fits[t];
    if (fit.theta.rows() != fits[0].theta.rows())
      throw std::invalid_argument("predictive_moments: ragged draw counts");
    for (Eigen::Index i = 0; i < fit.theta.rows(); i += thin) {
      ThetaVector theta{family, fit.theta.row(i).transpose()};
      IncrementsResult inc = lorenz_increments(theta, data.p_grid);
      if (!inc.valid)
        throw std::runtime_error("predictive_moments: invalid stored draw");
      acc.add_row(t, inc.delta, std::exp(fit.log_lambda[i]));
      if (t == 0) ++count0;
    }
  }
  acc.count = count0;
  return acc.finish();
}

double ppl_score(const Eigen::MatrixXd& E, const Eigen::MatrixXd& V,
                 const GroupedSeries& data, double r) {
  if (E.rows() != data.T() || E.cols() != data.K() || V.rows() != E.rows() ||
      V.cols() != E.cols())
    throw std::invalid_argument("ppl_score: shape mismatch");
  double weight = std::isinf(r) ? 1.0 : r / (r + 1.0);
  double total = V.sum() + weight * (data.q - E).squaredNorm();
  if (total <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(total);
}

}  // namespace lorenzts
