#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lorenzts/mcmc.hpp"
#include "lorenzts/simulation.hpp"
#include "lorenzts/special_functions.hpp"

using namespace lorenzts;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(vals.size());
  int i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

// Numeric CDF of an unnormalized log-density on [lo, hi], trapezoid rule
// on an equispaced grid, linear interpolation between grid points.
struct GridCdf {
  Eigen::VectorXd x, F;
  double operator()(double v) const {
    const int n = static_cast<int>(x.size());
    if (v <= x[0]) return 0.0;
    if (v >= x[n - 1]) return 1.0;
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      (x[mid] <= v ? lo : hi) = mid;
    }
    double w = (v - x[lo]) / (x[lo + 1] - x[lo]);
    return F[lo] + w * (F[lo + 1] - F[lo]);
  }
};

GridCdf make_grid_cdf(const std::function<double(double)>& logdens, double lo,
                      double hi, int n = 8001) {
  GridCdf out;
  out.x.resize(n);
  Eigen::VectorXd ld(n);
  for (int i = 0; i < n; ++i) {
    out.x[i] = lo + (hi - lo) * i / (n - 1);
    ld[i] = logdens(out.x[i]);
  }
  double m = ld.maxCoeff();
  Eigen::VectorXd d = (ld.array() - m).exp();
  out.F.resize(n);
  out.F[0] = 0.0;
  for (int i = 1; i < n; ++i)
    out.F[i] = out.F[i - 1] + 0.5 * (d[i] + d[i - 1]) * (out.x[i] - out.x[i - 1]);
  out.F /= out.F[n - 1];
  return out;
}

// Kolmogorov-Smirnov statistic of draws against a reference CDF.
double ks_stat(std::vector<double> draws, const std::function<double(double)>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double sup = 0.0;
  for (size_t i = 0; i < draws.size(); ++i) {
    double F = cdf(draws[i]);
    sup = std::max(sup, std::fabs(F - double(i) / n));
    sup = std::max(sup, std::fabs(F - double(i + 1) / n));
  }
  return sup;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / double(xs.size());
}

double sd_of(const std::vector<double>& xs) {
  double m = mean_of(xs), s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / double(xs.size() - 1));
}

GroupedSeries flat_series(int T, int K, double n_t) {
  GroupedSeries d;
  d.p_grid = equal_grid(K);
  d.q = Eigen::MatrixXd::Constant(T, K, 1.0 / K);
  d.n = Eigen::VectorXd::Constant(T, n_t);
  return d;
}

}  // namespace

TEST_CASE("laplace_approx is exact on a quadratic") {
  SamplerConfig cfg;
  Eigen::Matrix2d A;
  A << 2.0, 0.5, 0.5, 1.0;
  Eigen::Vector2d m(1.0, -2.0);
  auto target = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd z = x - m;
    return -0.5 * z.dot(A * z);
  };
  LaplaceResult r = laplace_approx(target, vec({0.0, 0.0}), cfg);
  REQUIRE(r.ok);
  CHECK((r.mode - m).lpNorm<Eigen::Infinity>() <= 1e-6);
  Eigen::Matrix2d want = A.inverse() * (1.2 * 1.2);
  CHECK((r.cov - want).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("laplace_approx finds the analytic mode of a logit-beta density") {
  // d/dx [a ln s(x) + b ln(1 - s(x))] = 0 at s(x) = a/(a+b), i.e. the
  // mode is logit(a/(a+b)); curvature there is -(a+b) s (1-s).
  SamplerConfig cfg;
  double a = 3.0, b = 2.0;
  auto target = [&](const Eigen::VectorXd& x) {
    double s = 1.0 / (1.0 + std::exp(-x[0]));
    return a * std::log(s) + b * std::log(1.0 - s);
  };
  LaplaceResult r = laplace_approx(target, vec({-1.5}), cfg);
  REQUIRE(r.ok);
  double mode_want = std::log(a / b);
  CHECK(std::abs(r.mode[0] - mode_want) <= 1e-6);
  double curv = (a + b) * 0.6 * 0.4;
  CHECK(std::abs(r.cov(0, 0) - 1.44 / curv) <= 1e-4);
}

TEST_CASE("laplace_approx started at the mode stops immediately") {
  SamplerConfig cfg;
  auto target = [](const Eigen::VectorXd& x) { return -2.0 * x[0] * x[0]; };
  LaplaceResult r = laplace_approx(target, vec({0.0}), cfg);
  REQUIRE(r.ok);
  CHECK(r.iters <= 2);
  CHECK(std::abs(r.cov(0, 0) - 1.44 / 4.0) <= 1e-5);
}

TEST_CASE("laplace_approx reports failure on a convex target") {
  SamplerConfig cfg;
  auto target = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
  LaplaceResult r = laplace_approx(target, vec({1.0}), cfg);
  CHECK(!r.ok);
}

TEST_CASE("armh_step draws from the exact target even with a mis-scaled "
          "proposal") {
  // Target N(3, 0.25). A wider proposal (x2) makes the envelope dominate
  // everywhere, so the step reduces to exact rejection sampling. A
  // narrower one (x0.64) leaves the envelope short in both tails; the
  // correction still keeps the law exact, but the importance weights are
  // unbounded and tail sojourns are long, so that chain needs to be much
  // longer before the empirical CDF settles.
  auto target = [](const Eigen::VectorXd& x) {
    double z = x[0] - 3.0;
    return -z * z / (2.0 * 0.25);
  };
  struct Run {
    double scale;
    int n;
    double tol;
  };
  for (Run run : {Run{0.64, 2000000, 0.03}, Run{2.0, 100000, 0.01}}) {
    LaplaceResult prop;
    prop.mode = vec({3.0});
    prop.cov = Eigen::MatrixXd::Constant(1, 1, 0.25 * run.scale);
    prop.ok = true;
    Rng rng(101);
    Eigen::VectorXd x = vec({0.0});
    std::vector<double> draws;
    draws.reserve(run.n);
    bool accepted = false;
    for (int i = 0; i < run.n; ++i) {
      x = armh_step(target, x, prop, rng, &accepted);
      draws.push_back(x[0]);
    }
    double ks = ks_stat(draws, [](double v) {
      return normal_cdf((v - 3.0) / 0.5);
    });
    INFO("proposal scale = ", run.scale, " ks = ", ks);
    CHECK(ks <= run.tol);
  }
}

TEST_CASE("armh_step handles an off-centre approximation exactly") {
  // Target N(0, 1) with the approximation centred at 0.5 instead of 0.
  // The envelope then fails for x < 0.5 and dominates for x > 0.5, so a
  // single chain keeps crossing between the dominated and undominated
  // regions and all three branches of the correction fire.
  auto target = [](const Eigen::VectorXd& x) { return -0.5 * x[0] * x[0]; };
  LaplaceResult prop;
  prop.mode = vec({0.5});
  prop.cov = Eigen::MatrixXd::Constant(1, 1, 1.0);
  prop.ok = true;
  Rng rng(101);
  Eigen::VectorXd x = vec({0.0});
  std::vector<double> draws;
  const int n = 500000;
  draws.reserve(n);
  bool accepted = false;
  int n_acc = 0;
  for (int i = 0; i < n; ++i) {
    x = armh_step(target, x, prop, rng, &accepted);
    n_acc += accepted ? 1 : 0;
    draws.push_back(x[0]);
  }
  double ks = ks_stat(draws, [](double v) { return normal_cdf(v); });
  INFO("ks = ", ks);
  CHECK(ks <= 0.01);
  CHECK(double(n_acc) / n > 0.5);
}

TEST_CASE("armh_step never accepts a zero-density point") {
  // Half-line target: N(0.2, 1) truncated to x > 0localized; every draw must
  // stay strictly positive no matter what the proposal offers.
  auto target = [](const Eigen::VectorXd& x) {
    if (x[0] <= 0.0) return -kInf;
    double z = x[0] - 0.2;
    return -0.5 * z * z;
  };
  LaplaceResult prop;
  prop.mode = vec({0.2});
  prop.cov = Eigen::MatrixXd::Constant(1, 1, 1.44);
  prop.ok = true;
  Rng rng(102);
  Eigen::VectorXd x = vec({0.5});
  bool accepted = false;
  for (int i = 0; i < 20000; ++i) {
    x = armh_step(target, x, prop, rng, &accepted);
    REQUIRE(x[0] > 0.0);
  }
}

TEST_CASE("rw_step targets its stationary law") {
  auto target = [](const Eigen::VectorXd& x) {
    double z = x[0] + 1.0;
    return -z * z / (2.0 * 4.0);
  };
  Eigen::MatrixXd L = Eigen::MatrixXd::Constant(1, 1, 1.5);
  Rng rng(103);
  Eigen::VectorXd x = vec({0.0});
  std::vector<double> draws;
  bool accepted = false;
  int n_acc = 0;
  for (int i = 0; i < 50000; ++i) {
    x = rw_step(target, x, L, rng, &accepted);
    n_acc += accepted ? 1 : 0;
    draws.push_back(x[0]);
  }
  double rate = double(n_acc) / 50000.0;
  CHECK(rate > 0.1);
  CHECK(rate < 0.95);
  double ks = ks_stat(draws, [](double v) {
    return normal_cdf((v + 1.0) / 2.0);
  });
  INFO("ks = ", ks);
  CHECK(ks <= 0.03);
}

TEST_CASE("mh_log_accept implements the Hastings ratio") {
  CHECK(mh_log_accept(0.0, 0.0, 0.0, 0.0) == 0.0);
  CHECK(mh_log_accept(0.0, -1.0, 0.0, 0.0) == doctest::Approx(-1.0));
  CHECK(mh_log_accept(0.0, 5.0, 0.0, 0.0) == 0.0);  // capped at 0
  // asymmetric proposal: forward density higher than backward
  CHECK(mh_log_accept(1.0, 2.0, 0.5, -0.5) == 0.0);
  CHECK(mh_log_accept(1.0, 1.5, 2.0, 0.0) == doctest::Approx(-1.5));
}

TEST_CASE("step_u_t reproduces the Gaussian process conditional when the "
          "likelihood is switched off") {
  // psi = -20 makes lambda ~ 2e-9, so the observation term is flat to
  // within ~1e-6 of the prior scale; the u_1 conditional is then the
  // AR(1) bridge N(mu + rho ((u_0-mu) + (u_2-mu))/(1+rho^2), tau2/(1+rho^2)).
  GroupedSeries data = flat_series(3, 5, 1.0);
  const double mu = 0.3, rho = 0.8, tau2 = 1.64e-6;
  ChainState st;
  st.process.kind = ProcessKind::AR1;
  st.process.mu = vec({mu});
  st.process.rho = vec({rho});
  st.process.tau2 = vec({tau2});
  st.psi = -20.0;
  st.u.resize(3, 1);
  st.u << 0.302, 0.3, 0.2995;

  const double m_cond =
      mu + rho * ((0.302 - mu) + (0.2995 - mu)) / (1.0 + rho * rho);
  const double sd_cond = std::sqrt(tau2 / (1.0 + rho * rho));

  SamplerConfig cfg;
  Rng rng(104);
  std::vector<double> draws;
  draws.reserve(100000);
  bool fallback = false;
  for (int i = 0; i < 100000; ++i) {
    step_u_t(1, st, data, Family::LN, cfg, false, rng, &fallback);
    draws.push_back(st.u(1, 0));
  }
  double ks = ks_stat(draws, [&](double v) {
    return normal_cdf((v - m_cond) / sd_cond);
  });
  INFO("ks = ", ks);
  CHECK(ks <= 0.02);
  CHECK(std::abs(mean_of(draws) - m_cond) <= 4.0 * sd_cond / std::sqrt(1e5));

  // burn-in path (with the random-walk mixture) runs cleanly too
  for (int i = 0; i < 500; ++i)
    step_u_t(1, st, data, Family::LN, cfg, true, rng, &fallback);
  CHECK(std::isfinite(st.u(1, 0)));
}

TEST_CASE("step_mu_j draws from the exact conjugate conditional") {
  const int T = 6;
  ChainState st;
  st.process.kind = ProcessKind::AR1;
  st.process.mu = vec({0.0});
  st.process.rho = vec({0.6});
  st.process.tau2 = vec({0.05});
  st.u.resize(T, 1);
  st.u << 0.8, 0.55, 0.7, 0.4, 0.62, 0.5;
  PriorSpec pr = PriorSpec::defaults(1);
  pr.m[0] = 0.3;
  pr.v2[0] = 2.0;

  const double rho = 0.6, tau2 = 0.05;
  double prec = (1.0 - rho * rho) / tau2 + (T - 1) * (1.0 - rho) * (1.0 - rho) / tau2 +
                1.0 / pr.v2[0];
  double num = (1.0 - rho * rho) * st.u(0, 0) / tau2 + pr.m[0] / pr.v2[0];
  for (int t = 1; t < T; ++t)
    num += (1.0 - rho) * (st.u(t, 0) - rho * st.u(t - 1, 0)) / tau2;
  double mean_want = num / prec, sd_want = std::sqrt(1.0 / prec);

  Rng rng(105);
  std::vector<double> draws;
  draws.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    step_mu_j(0, st, pr, rng);
    draws.push_back(st.process.mu[0]);
  }
  double ks = ks_stat(draws, [&](double v) {
    return normal_cdf((v - mean_want) / sd_want);
  });
  INFO("ks = ", ks);
  CHECK(ks <= 0.01);

  // Flat-prior limit: the conditional collapses to the GLS combination.
  pr.v2[0] = 1e12;
  double prec_f = (1.0 - rho * rho) / tau2 +
                  (T - 1) * (1.0 - rho) * (1.0 - rho) / tau2;
  double num_f = (1.0 - rho * rho) * st.u(0, 0) / tau2;
  for (int t = 1; t < T; ++t)
    num_f += (1.0 - rho) * (st.u(t, 0) - rho * st.u(t - 1, 0)) / tau2;
  std::vector<double> draws_f;
  draws_f.reserve(20000);
  for (int i = 0; i < 20000; ++i) {
    step_mu_j(0, st, pr, rng);
    draws_f.push_back(st.process.mu[0]);
  }
  double se = std::sqrt(1.0 / prec_f) / std::sqrt(20000.0);
  CHECK(std::abs(mean_of(draws_f) - num_f / prec_f) <= 4.0 * se);
}

TEST_CASE("step_rho_j has the analytic invariant law") {
  // The transition quadratic cancels against the least-squares proposal,
  // so the invariant density is the proposal kernel times the stationary
  // factor sqrt(1-rho^2) exp(-(1-rho^2)(u_0-mu)^2 / (2 tau2)) on (-1,1).
  const int T = 6;
  ChainState st;
  st.process.kind = ProcessKind::AR1;
  st.process.mu = vec({0.5});
  st.process.rho = vec({0.0});
  st.process.tau2 = vec({0.04});
  st.u.resize(T, 1);
  st.u << 0.75, 0.62, 0.55, 0.68, 0.45, 0.58;
  PriorSpec pr = PriorSpec::defaults(1);

  const double mu = 0.5, tau2 = 0.04;
  double denom = 0.0, cross = 0.0;
  for (int t = 1; t < T; ++t) {
    double prev = st.u(t - 1, 0) - mu;
    denom += prev * prev;
    cross += (st.u(t, 0) - mu) * prev;
  }
  double mhat = cross / denom, s2 = tau2 / denom;
  auto logdens = [&](double r) {
    return -0.5 * (r - mhat) * (r - mhat) / s2 + 0.5 * std::log(1.0 - r * r) -
           0.5 * (1.0 - r * r) * (st.u(0, 0) - mu) * (st.u(0, 0) - mu) / tau2;
  };
  GridCdf cdf = make_grid_cdf(logdens, -1.0 + 1e-9, 1.0 - 1e-9);

  Rng rng(106);
  std::vector<double> draws;
  draws.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    step_rho_j(0, st, pr, rng);
    double r = st.process.rho[0];
    REQUIRE(r > -1.0);
    REQUIRE(r < 1.0);
    draws.push_back(r);
  }
  double ks = ks_stat(draws, [&](double v) { return cdf(v); });
  INFO("ks = ", ks, " mhat = ", mhat);
  CHECK(ks <= 0.02);
}

TEST_CASE("step_rho_j survives a degenerate path equal to its mean") {
  // u identically mu: the least-squares proposal is undefined, the
  // fallback proposes uniformly, and the conditional collapses to the
  // semicircle density sqrt(1-rho^2).
  const int T = 5;
  ChainState st;
  st.process.kind = ProcessKind::AR1;
  st.process.mu = vec({0.5});
  st.process.rho = vec({0.0});
  st.process.tau2 = vec({0.04});
  st.u = Eigen::MatrixXd::Constant(T, 1, 0.5);
  PriorSpec pr = PriorSpec::defaults(1);
  Rng rng(107);
  std::vector<double> draws;
  draws.reserve(20000);
  for (int i = 0; i < 20000; ++i) {
    step_rho_j(0, st, pr, rng);
    double r = st.process.rho[0];
    REQUIRE(r > -1.0);
    REQUIRE(r < 1.0);
    draws.push_back(r);
  }
  GridCdf cdf = make_grid_cdf(
      [](double r) { return 0.5 * std::log(1.0 - r * r); }, -1.0 + 1e-9,
      1.0 - 1e-9);
  double ks = ks_stat(draws, [&](double v) { return cdf(v); });
  INFO("ks = ", ks);
  CHECK(ks <= 0.05);
}

TEST_CASE("step_rho_j stays inside (-1,1) when the least-squares fit "
          "points outside") {
  ChainState st;
  st.process.kind = ProcessKind::AR1;
  st.process.mu = vec({0.0});
  st.process.rho = vec({0.9});
  st.process.tau2 = vec({0.01});
  st.u.resize(4, 1);
  st.u << 1.0, 1.5, 2.3, 3.5;  // explosive path, OLS slope > 1
  PriorSpec pr = PriorSpec::defaults(1);
  Rng rng(108);
  for (int i = 0; i < 10000; ++i) {
    step_rho_j(0, st, pr, rng);
    REQUIRE(st.process.rho[0] > -1.0);
    REQUIRE(st.process.rho[0] < 1.0);
  }
}

TEST_CASE("step_tau2_j draws from the exact inverse-gamma conditional") {
  PriorSpec pr = PriorSpec::defaults(1);

  SUBCASE("path equal to mu: posterior is InvGamma(r + T/2, s)") {
    const int T = 10;
    ChainState st;
    st.process.kind = ProcessKind::AR1;
    st.process.mu = vec({0.5});
    st.process.rho = vec({0.6});
    st.process.tau2 = vec({0.02});
    st.u = Eigen::MatrixXd::Constant(T, 1, 0.5);
    double rhat = 3.0 + 5.0, shat = 0.1;
    Rng rng(109);
    std::vector<double> draws;
    draws.reserve(100000);
    for (int i = 0; i < 100000; ++i) {
      step_tau2_j(0, st, pr, rng);
      draws.push_back(st.process.tau2[0]);
    }
    double mean_want = shat / (rhat - 1.0);
    double sd = mean_want / std::sqrt(rhat - 2.0);
    CHECK(std::abs(mean_of(draws) - mean_want) <=
          4.0 * sd / std::sqrt(1e5));
    GridCdf cdf = make_grid_cdf(
        [&](double x) { return -(rhat + 1.0) * std::log(x) - shat / x; },
        1e-4, 0.2);
    double ks = ks_stat(draws, [&](double v) { return cdf(v); });
    INFO("ks = ", ks);
    CHECK(ks <= 0.01);
  }

  SUBCASE("hand-computed AR(1) scale: u = (1,2,4), mu = 1, rho = 0.5") {
    // shat = s + [ (1-rho^2)(u_0-mu)^2 + sum (u_t - mu - rho(u_{t-1}-mu))^2 ]/2
    //      = 0.5 + [0 + 1^2 + 2.5^2]/2 = 0.5 + 3.625
    ChainState st;
    st.process.kind = ProcessKind::AR1;
    st.process.mu = vec({1.0});
    st.process.rho = vec({0.5});
    st.process.tau2 = vec({1.0});
    st.u.resize(3, 1);
    st.u << 1.0, 2.0, 4.0;
    PriorSpec p2 = PriorSpec::defaults(1);
    p2.s[0] = 0.5;
    double rhat = 3.0 + 1.5, shat = 0.5 + 3.625;
    Rng rng(110);
    std::vector<double> draws;
    draws.reserve(100000);
    for (int i = 0; i < 100000; ++i) {
      step_tau2_j(0, st, p2, rng);
      draws.push_back(st.process.tau2[0]);
    }
    double mean_want = shat / (rhat - 1.0);
    double sd = mean_want / std::sqrt(rhat - 2.0);
    CHECK(std::abs(mean_of(draws) - mean_want) <= 4.0 * sd / std::sqrt(1e5));
  }

  SUBCASE("random-walk scale includes the diffuse first-state term") {
    // shat = s + u_0^2/(2c) + sum (u_t - u_{t-1})^2 / 2 = 0.5 + 1/(2e5) + 2.5
    ChainState st;
    st.process.kind = ProcessKind::RW;
    st.process.tau2 = vec({1.0});
    st.process.c = 1e5;
    st.u.resize(3, 1);
    st.u << 1.0, 2.0, 4.0;
    PriorSpec p2 = PriorSpec::defaults(1);
    p2.s[0] = 0.5;
    double rhat = 3.0 + 1.5, shat = 0.5 + 1.0 / 2e5 + 2.5;
    Rng rng(111);
    std::vector<double> draws;
    draws.reserve(100000);
    for (int i = 0; i < 100000; ++i) {
      step_tau2_j(0, st, p2, rng);
      draws.push_back(st.process.tau2[0]);
    }
    double mean_want = shat / (rhat - 1.0);
    double sd = mean_want / std::sqrt(rhat - 2.0);
    CHECK(std::abs(mean_of(draws) - mean_want) <= 4.0 * sd / std::sqrt(1e5));
  }
}

TEST_CASE("step_psi has the analytic posterior as its invariant law") {
  GroupedSeries data;
  data.p_grid = equal_grid(3);
  data.q.resize(3, 3);
  data.q.row(0) << 0.15, 0.30, 0.55;
  data.q.row(1) << 0.18, 0.33, 0.49;
  data.q.row(2) << 0.16, 0.31, 0.53;
  data.n = vec({40.0, 60.0, 80.0});

  ChainState st;
  st.process.kind = ProcessKind::AR1;
  st.process.mu = vec({1.1, 0.4});
  st.process.rho = vec({0.8, 0.5});
  st.process.tau2 = vec({0.015, 0.02});
  st.u.resize(3, 2);
  Eigen::VectorXd u0 = theta_to_latent(family_init_theta(Family::SM)).values;
  for (int t = 0; t < 3; ++t) st.u.row(t) = u0.transpose();
  st.psi = 0.0;

  PriorSpec pr = PriorSpec::defaults(2);
  pr.m_psi = 0.0;
  pr.v2_psi = 0.25;

  Eigen::VectorXd delta =
      lorenz_increments(latent_to_theta(LatentVector{Family::SM, u0}),
                        data.p_grid)
          .delta;
  auto logdens = [&](double psi) {
    double acc = -0.5 * psi * psi / 0.25;
    for (int t = 0; t < 3; ++t) {
      Eigen::VectorXd a = lambda_t(psi, data.n[t]) * delta;
      acc += dirichlet_logpdf(data.q.row(t).transpose(), a);
    }
    return acc;
  };
  GridCdf cdf = make_grid_cdf(logdens, -4.0, 3.0);

  Rng rng(112);
  std::vector<double> draws;
  draws.reserve(200000);
  int n_acc = 0;
  for (int i = 0; i < 200000; ++i) {
    n_acc += step_psi(st, data, Family::SM, pr, 0.4, rng) ? 1 : 0;
    draws.push_back(st.psi);
  }
  double rate = double(n_acc) / 200000.0;
  INFO("acceptance = ", rate);
  CHECK(rate > 0.05);
  CHECK(rate < 0.95);
  double ks = ks_stat(draws, [&](double v) { return cdf(v); });
  INFO("ks = ", ks);
  CHECK(ks <= 0.02);
}

TEST_CASE("run_chain is deterministic in its seed and produces sane draws") {
  SimConfig sim = SimConfig::defaults();
  sim.T = 10;
  sim.rng_seed = 5;
  sim.n_pool = {200, 400};
  auto [data, truth] = generate_dataset(sim);

  SamplerConfig cfg;
  cfg.n_burnin = 300;
  cfg.n_draws = 400;
  cfg.u_thin = 40;
  cfg.rng_seed = 9;

  PriorSpec pr = PriorSpec::defaults(2);
  PosteriorDraws a = run_chain(data, Family::SM, ProcessKind::AR1, pr, cfg);
  PosteriorDraws b = run_chain(data, Family::SM, ProcessKind::AR1, pr, cfg);

  REQUIRE(a.n_draws() == 400);
  REQUIRE(a.mu.rows() == 400);
  REQUIRE(a.mu.cols() == 2);
  REQUIRE(a.n_snaps() == 10);
  CHECK(a.kind == ProcessKind::AR1);

  // bit-exact reproducibility
  CHECK(a.mu == b.mu);
  CHECK(a.rho == b.rho);
  CHECK(a.tau2 == b.tau2);
  CHECK(a.psi == b.psi);
  REQUIRE(a.u_snaps.size() == b.u_snaps.size());
  for (size_t s = 0; s < a.u_snaps.size(); ++s)
    CHECK(a.u_snaps[s] == b.u_snaps[s]);

  // acceptance bookkeeping
  CHECK(a.accept.u > 0.0);
  CHECK(a.accept.u <= 1.0);
  CHECK(a.accept.psi >= 0.0);
  CHECK(a.accept.psi <= 1.0);
  for (int j = 0; j < 2; ++j) {
    CHECK(a.accept.rho[j] >= 0.0);
    CHECK(a.accept.rho[j] <= 1.0);
  }
  CHECK(a.accept.psi_step_final >= 1e-4);
  CHECK(a.accept.psi_step_final <= 10.0);

  // every retained state is valid
  for (int i = 0; i < a.n_draws(); ++i) {
    CHECK(std::abs(a.rho(i, 0)) < 1.0);
    CHECK(a.tau2(i, 0) > 0.0);
    CHECK(a.tau2(i, 1) > 0.0);
  }
  for (const Eigen::MatrixXd& snap : a.u_snaps) {
    for (int t = 0; t < snap.rows(); ++t) {
      ThetaVector th = latent_to_theta(
          LatentVector{Family::SM, snap.row(t).transpose()});
      CHECK(theta_valid(th));
      CHECK(lorenz_increments(th, data.p_grid).valid);
    }
  }

  // a different seed moves the draws
  cfg.rng_seed = 10;
  PosteriorDraws c = run_chain(data, Family::SM, ProcessKind::AR1, pr, cfg);
  CHECK(a.mu != c.mu);

  // random-walk dynamics: no mu/rho blocks
  PosteriorDraws rw = run_chain(data, Family::SM, ProcessKind::RW, pr, cfg);
  CHECK(rw.kind == ProcessKind::RW);
  CHECK(rw.mu.size() == 0);
  CHECK(rw.rho.size() == 0);
  REQUIRE(rw.tau2.rows() == 400);
  CHECK(rw.psi.size() == 400);
}

TEST_CASE("joint-distribution check: prior-data simulation matches the "
          "Gibbs kernels") {
  // Two samplers for the same joint law of (parameters, path, data):
  // marginal-conditional (exact forward simulation, rejecting invalid
  // curves) versus successive-conditional (regenerate the data given the
  // state, then one sweep of the posterior kernels). Every moment that
  // both can estimate must agree.
  const int T = 20, K = 5;
  const double n_t = 50.0;
  const Family fam = Family::SM;
  const Eigen::VectorXd grid = equal_grid(K);

  PriorSpec pr = PriorSpec::defaults(2);
  pr.m = vec({1.2, 0.5});
  pr.v2 = vec({0.09, 0.09});
  pr.r = vec({5.0, 5.0});
  pr.s = vec({0.05, 0.05});
  pr.m_psi = 0.0;
  pr.v2_psi = 0.25;

  struct Draw {
    Eigen::VectorXd mu, rho, tau2;
    double psi;
    Eigen::MatrixXd u;
  };

  Rng rng(1234);
  auto prior_path = [&]() -> Draw {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      Draw d;
      d.mu = vec({rng.normal(pr.m[0], std::sqrt(pr.v2[0])),
                  rng.normal(pr.m[1], std::sqrt(pr.v2[1]))});
      d.rho = vec({2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0});
      d.tau2 = vec({rng.inv_gamma(pr.r[0], pr.s[0]),
                    rng.inv_gamma(pr.r[1], pr.s[1])});
      d.psi = rng.normal(pr.m_psi, std::sqrt(pr.v2_psi));
      d.u.resize(T, 2);
      for (int j = 0; j < 2; ++j) {
        double sd0 = std::sqrt(d.tau2[j] / (1.0 - d.rho[j] * d.rho[j]));
        d.u(0, j) = rng.normal(d.mu[j], sd0);
        for (int t = 1; t < T; ++t)
          d.u(t, j) = rng.normal(d.mu[j] + d.rho[j] * (d.u(t - 1, j) - d.mu[j]),
                                 std::sqrt(d.tau2[j]));
      }
      bool ok = true;
      for (int t = 0; t < T && ok; ++t) {
        ThetaVector th = latent_to_theta(
            LatentVector{fam, d.u.row(t).transpose()});
        ok = theta_valid(th) && lorenz_increments(th, grid).valid;
      }
      if (ok) return d;
    }
    throw std::runtime_error("prior simulation kept producing invalid curves");
  };

  auto regen_data = [&](const Draw& d, GroupedSeries& data) {
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd delta =
          lorenz_increments(
              latent_to_theta(LatentVector{fam, d.u.row(t).transpose()}), grid)
              .delta;
      data.q.row(t) =
          rng.dirichlet(lambda_t(d.psi, n_t) * delta).transpose();
    }
  };

  const int kFns = 7;
  auto record = [&](const Draw& d, std::vector<std::vector<double>>& out) {
    double fns[kFns] = {d.mu[0],   d.mu[1],  d.rho[0], d.rho[1],
                        d.tau2[0], d.tau2[1], d.psi};
    for (int i = 0; i < kFns; ++i) {
      out[2 * i].push_back(fns[i]);
      out[2 * i + 1].push_back(fns[i] * fns[i]);
    }
  };

  // marginal-conditional: iid draws
  const int N_MC = 6000;
  std::vector<std::vector<double>> mc(2 * kFns);
  for (int i = 0; i < N_MC; ++i) record(prior_path(), mc);

  // successive-conditional: data regeneration + one kernel sweep
  const int N_SC = 6000, N_SC_BURN = 300;
  GroupedSeries data = flat_series(T, K, n_t);
  Draw cur = prior_path();
  ChainState st;
  st.process.kind = ProcessKind::AR1;
  st.process.mu = cur.mu;
  st.process.rho = cur.rho;
  st.process.tau2 = cur.tau2;
  st.psi = cur.psi;
  st.u = cur.u;
  SamplerConfig cfg;
  std::vector<std::vector<double>> sc(2 * kFns);
  bool fallback = false;
  for (int it = 0; it < N_SC_BURN + N_SC; ++it) {
    Draw view{st.process.mu, st.process.rho, st.process.tau2, st.psi, st.u};
    regen_data(view, data);
    for (int t = 0; t < T; ++t)
      step_u_t(t, st, data, fam, cfg, false, rng, &fallback);
    for (int j = 0; j < 2; ++j) {
      step_mu_j(j, st, pr, rng);
      step_rho_j(j, st, pr, rng);
      step_tau2_j(j, st, pr, rng);
    }
    step_psi(st, data, fam, pr, 0.3, rng);
    if (it >= N_SC_BURN) {
      Draw now{st.process.mu, st.process.rho, st.process.tau2, st.psi, st.u};
      record(now, sc);
    }
  }

  const char* names[2 * kFns] = {
      "mu1",   "mu1^2",   "mu2",   "mu2^2",   "rho1",  "rho1^2", "rho2",
      "rho2^2", "tau21", "tau21^2", "tau22", "tau22^2", "psi",   "psi^2"};
  for (int i = 0; i < 2 * kFns; ++i) {
    double m_mc = mean_of(mc[i]), m_sc = mean_of(sc[i]);
    double se_mc = sd_of(mc[i]) / std::sqrt(double(N_MC));
    Eigen::Map<const Eigen::VectorXd> sc_series(sc[i].data(), sc[i].size());
    double ifac = inefficiency_factor(sc_series);
    double se_sc = sd_of(sc[i]) * std::sqrt(std::max(1.0, ifac) / double(N_SC));
    double tol = 3.0 * std::sqrt(se_mc * se_mc + se_sc * se_sc);
    INFO("fn = ", names[i], " mc = ", m_mc, " sc = ", m_sc, " tol = ", tol);
    CHECK(std::abs(m_mc - m_sc) <= tol);
  }
}

TEST_CASE("inefficiency_factor calibrates against known dependence") {
  // The windowed estimator has sd of roughly factor * sqrt(4L / 3n) per
  // series (about 0.115 * factor here), so single series are too noisy
  // for a tight check; average eight independent ones instead.
  Rng rng(113);
  const int n = 100000;
  const int reps = 8;

  // iid draws: factor near 1
  double acc_iid = 0.0;
  for (int r = 0; r < reps; ++r) {
    Eigen::VectorXd iid(n);
    for (int i = 0; i < n; ++i) iid[i] = rng.normal();
    acc_iid += inefficiency_factor(iid);
  }
  INFO("mean iid factor = ", acc_iid / reps);
  CHECK(std::abs(acc_iid / reps - 1.0) <= 0.15);

  // AR(1) with rho = 0.5: true factor (1+rho)/(1-rho) = 3
  double acc_ar = 0.0;
  for (int r = 0; r < reps; ++r) {
    Eigen::VectorXd ar(n);
    ar[0] = rng.normal();
    for (int i = 1; i < n; ++i)
      ar[i] = 0.5 * ar[i - 1] + rng.normal() * std::sqrt(0.75);
    acc_ar += inefficiency_factor(ar);
  }
  INFO("mean AR(1) factor = ", acc_ar / reps);
  CHECK(std::abs(acc_ar / reps - 3.0) <= 0.45);

  // error paths
  Eigen::VectorXd tiny = Eigen::VectorXd::Random(50);
  CHECK_THROWS_AS(inefficiency_factor(tiny), std::invalid_argument);
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(500, 2.5);
  CHECK_THROWS_AS(inefficiency_factor(flat), std::invalid_argument);
}
