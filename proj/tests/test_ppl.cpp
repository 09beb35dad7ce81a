#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lorenzts/lorenz.hpp"
#include "lorenzts/model.hpp"
#include "lorenzts/ppl.hpp"
#include "lorenzts/rng.hpp"

using namespace lorenzts;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

GroupedSeries two_period_series() {
  GroupedSeries d;
  d.p_grid = equal_grid(5);
  d.q.resize(2, 5);
  d.q.row(0) << 0.05, 0.10, 0.15, 0.25, 0.45;
  d.q.row(1) << 0.06, 0.11, 0.16, 0.24, 0.43;
  d.n = Eigen::VectorXd::Constant(2, 100.0);
  return d;
}

/* Conditional predictive moments for one latent value. */
void conditional_moments(Family family, const Eigen::VectorXd& u, double lambda,
                         const Eigen::VectorXd& grid, Eigen::VectorXd* m,
                         Eigen::VectorXd* v) {
  IncrementsResult inc = lorenz_increments(latent_to_theta({family, u}), grid);
  REQUIRE(inc.valid);
  *m = inc.delta;
  *v = (inc.delta.array() * (1.0 - inc.delta.array()) / (lambda + 1.0)).matrix();
}

}  // namespace

TEST_CASE("predictive_moments with one snapshot returns the conditional "
          "moments exactly") {
  GroupedSeries data = two_period_series();
  PosteriorDraws draws;
  draws.psi = Eigen::VectorXd::Constant(1, 0.4);
  draws.u_snap_draw = {0};
  Eigen::MatrixXd u(2, 1);
  u << std::log(0.6), std::log(0.7);
  draws.u_snaps = {u};

  auto [E, V] = predictive_moments(draws, data, Family::LN);
  for (int t = 0; t < 2; ++t) {
    Eigen::VectorXd m, v;
    conditional_moments(Family::LN, u.row(t).transpose(),
                        lambda_t(0.4, data.n[t]), data.p_grid, &m, &v);
    CHECK((E.row(t).transpose() - m).lpNorm<Eigen::Infinity>() <= 1e-15);
    CHECK((V.row(t).transpose() - v).lpNorm<Eigen::Infinity>() <= 1e-15);
  }

  SUBCASE("duplicating the snapshot changes nothing") {
    draws.psi = Eigen::VectorXd::Constant(2, 0.4);
    draws.u_snap_draw = {0, 1};
    draws.u_snaps = {u, u};
    auto [E2, V2] = predictive_moments(draws, data, Family::LN);
    CHECK((E2 - E).lpNorm<Eigen::Infinity>() <= 1e-15);
    CHECK((V2 - V).lpNorm<Eigen::Infinity>() <= 1e-15);
  }
}

TEST_CASE("predictive_moments matches brute-force predictive sampling") {
  // 200 synthetic posterior draws; the oracle resamples 10^4 share vectors
  // per draw and recombines by the same total-variance decomposition, so
  // the only discrepancy is within-draw Monte Carlo noise.
  const int S = 200, n_mc = 10000;
  GroupedSeries data = two_period_series();
  const int T = 2, K = 5;

  PosteriorDraws draws;
  draws.psi.resize(S);
  draws.u_snaps.reserve(S);
  Rng gen(21);
  for (int s = 0; s < S; ++s) {
    draws.psi[s] = 0.5 + 0.1 * gen.normal();
    Eigen::MatrixXd u(T, 1);
    u(0, 0) = std::log(0.6) + 0.1 * gen.normal();
    u(1, 0) = std::log(0.7) + 0.1 * gen.normal();
    draws.u_snaps.push_back(u);
    draws.u_snap_draw.push_back(s);
  }

  auto [E, V] = predictive_moments(draws, data, Family::LN);

  Rng mc(22);
  for (int t = 0; t < T; ++t) {
    // per-draw empirical conditional moments
    Eigen::MatrixXd m_hat(S, K), v_hat(S, K);
    Eigen::MatrixXd m_exact(S, K), v_exact(S, K);
    for (int s = 0; s < S; ++s) {
      Eigen::VectorXd m, v;
      conditional_moments(Family::LN, draws.u_snaps[s].row(t).transpose(),
                          lambda_t(draws.psi[s], data.n[t]), data.p_grid, &m,
                          &v);
      m_exact.row(s) = m.transpose();
      v_exact.row(s) = v.transpose();
      double lam = lambda_t(draws.psi[s], data.n[t]);
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(K);
      Eigen::VectorXd acc2 = Eigen::VectorXd::Zero(K);
      Eigen::VectorXd a = lam * m;
      for (int i = 0; i < n_mc; ++i) {
        Eigen::VectorXd q = mc.dirichlet(a);
        acc += q;
        acc2 += q.cwiseProduct(q);
      }
      m_hat.row(s) = (acc / n_mc).transpose();
      v_hat.row(s) =
          (acc2 / n_mc - (acc / n_mc).cwiseProduct(acc / n_mc)).transpose();
    }
    for (int k = 0; k < K; ++k) {
      double vbar = v_exact.col(k).mean();
      // oracle mean: within-draw MC noise only
      double se_E = std::sqrt(vbar / (double(S) * n_mc));
      CHECK(std::abs(E(t, k) - m_hat.col(k).mean()) <= 3.0 * se_E);

      // oracle variance: total-variance recombination of the MC moments
      double mbar = m_hat.col(k).mean();
      double between =
          (m_hat.col(k).array() - mbar).square().sum() / double(S);
      double v_mc = v_hat.col(k).mean() + between;
      // noise in mean(v_hat) plus spread inflation of order vbar/n_mc
      double se_vmean =
          std::sqrt((v_hat.col(k).array() - v_hat.col(k).mean()).square().sum() /
                    double(S) / double(S));
      double m_sd = std::sqrt(
          (m_exact.col(k).array() - m_exact.col(k).mean()).square().sum() /
          double(S));
      double se_between = 2.0 * m_sd * std::sqrt(vbar / n_mc / double(S));
      double tol = vbar / n_mc + 3.0 * (se_vmean + se_between);
      INFO("t = ", t, " k = ", k, " V = ", V(t, k), " mc = ", v_mc,
           " tol = ", tol);
      CHECK(std::abs(V(t, k) - v_mc) <= tol);
    }
  }
}

TEST_CASE("predictive means sum to one and variances are nonnegative") {
  GroupedSeries data = two_period_series();
  PosteriorDraws draws;
  const int S = 50;
  draws.psi.resize(S);
  Rng gen(23);
  for (int s = 0; s < S; ++s) {
    draws.psi[s] = 0.3 * gen.normal();
    Eigen::MatrixXd u(2, 1);
    u(0, 0) = std::log(0.5) + 0.2 * gen.normal();
    u(1, 0) = std::log(0.8) + 0.2 * gen.normal();
    draws.u_snaps.push_back(u);
    draws.u_snap_draw.push_back(s);
  }
  auto [E, V] = predictive_moments(draws, data, Family::LN);
  for (int t = 0; t < 2; ++t) CHECK(std::abs(E.row(t).sum() - 1.0) <= 1e-12);
  CHECK(V.minCoeff() >= 0.0);
}

TEST_CASE("predictive_moments from separate fits mirrors the chain variant") {
  GroupedSeries data = two_period_series();
  ThetaVector theta0{Family::LN, Eigen::VectorXd::Constant(1, 0.6)};
  ThetaVector theta1{Family::LN, Eigen::VectorXd::Constant(1, 0.7)};

  std::vector<SeparateFitResult> fits(2);
  for (int t = 0; t < 2; ++t) {
    const ThetaVector& th = t == 0 ? theta0 : theta1;
    // ten identical rows with thin = 10 collapse to a single draw
    fits[t].theta = th.values.transpose().replicate(10, 1);
    fits[t].log_lambda = Eigen::VectorXd::Constant(10, 1.2);
  }
  auto [E, V] = predictive_moments(fits, data, Family::LN, 10);
  for (int t = 0; t < 2; ++t) {
    const ThetaVector& th = t == 0 ? theta0 : theta1;
    IncrementsResult inc = lorenz_increments(th, data.p_grid);
    double lam = std::exp(1.2);
    Eigen::VectorXd v =
        (inc.delta.array() * (1.0 - inc.delta.array()) / (lam + 1.0)).matrix();
    CHECK((E.row(t).transpose() - inc.delta).lpNorm<Eigen::Infinity>() <= 1e-15);
    CHECK((V.row(t).transpose() - v).lpNorm<Eigen::Infinity>() <= 1e-15);
  }
}

TEST_CASE("predictive_moments rejects empty or ragged draws") {
  GroupedSeries data = two_period_series();
  PosteriorDraws empty;
  CHECK_THROWS_AS(predictive_moments(empty, data, Family::LN),
                  std::invalid_argument);

  std::vector<SeparateFitResult> none;
  CHECK_THROWS_AS(predictive_moments(none, data, Family::LN),
                  std::invalid_argument);

  std::vector<SeparateFitResult> ragged(2);
  ragged[0].theta = Eigen::MatrixXd::Constant(4, 1, 0.5);
  ragged[0].log_lambda = Eigen::VectorXd::Constant(4, 1.0);
  ragged[1].theta = Eigen::MatrixXd::Constant(3, 1, 0.5);
  ragged[1].log_lambda = Eigen::VectorXd::Constant(3, 1.0);
  CHECK_THROWS_AS(predictive_moments(ragged, data, Family::LN),
                  std::invalid_argument);
}

TEST_CASE("ppl_score reports minus infinity for a perfect degenerate "
          "prediction") {
  GroupedSeries data = two_period_series();
  Eigen::MatrixXd E = data.q;
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(2, 5);
  CHECK(ppl_score(E, V, data, 1.0) == -kInf);
  CHECK(ppl_score(E, V, data, kInf) == -kInf);
}

TEST_CASE("ppl_score weights the squared-error term by r/(r+1)") {
  GroupedSeries data = two_period_series();
  Eigen::MatrixXd E = Eigen::MatrixXd::Constant(2, 5, 0.2);
  Eigen::MatrixXd V = Eigen::MatrixXd::Constant(2, 5, 0.001);
  double sse = (data.q - E).squaredNorm();
  double vsum = V.sum();

  double s1 = ppl_score(E, V, data, 1.0);
  double sinf = ppl_score(E, V, data, kInf);
  CHECK(std::abs(s1 - std::log(vsum + 0.5 * sse)) <= 1e-12);
  CHECK(std::abs(sinf - std::log(vsum + sse)) <= 1e-12);
  CHECK(sinf >= s1);
  // r = 3 sits between the two
  double s3 = ppl_score(E, V, data, 3.0);
  CHECK(std::abs(s3 - std::log(vsum + 0.75 * sse)) <= 1e-12);
}

TEST_CASE("ppl_score rejects shape mismatches") {
  GroupedSeries data = two_period_series();
  Eigen::MatrixXd E = Eigen::MatrixXd::Constant(2, 4, 0.25);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(2, 4);
  CHECK_THROWS_AS(ppl_score(E, V, data, 1.0), std::invalid_argument);
  Eigen::MatrixXd E2 = Eigen::MatrixXd::Constant(2, 5, 0.2);
  Eigen::MatrixXd V2 = Eigen::MatrixXd::Zero(3, 5);
  CHECK_THROWS_AS(ppl_score(E2, V2, data, 1.0), std::invalid_argument);
}
