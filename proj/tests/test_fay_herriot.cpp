#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "tiltbench/error.hpp"
#include "tiltbench/fay_herriot.hpp"
#include "tiltbench/parallel.hpp"

using namespace tiltbench;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testutil::quadrature_sup_error;

namespace {

constexpr double kDensityTol = 1e-6;

double normal_logpdf(double x, double mean, double var) { return log_pdf(Normal{mean, var}, x); }

// S = 1 draw with given conditional moments (fixed hyperparameters)
FHDraws fixed_draws(const VectorXd& theta_tilde, const VectorXd& sigma2) {
  const auto m = theta_tilde.size();
  FHDraws d;
  d.beta = MatrixXd::Zero(1, 1);
  d.A = VectorXd::Ones(1);
  d.u = RowMatrix::Ones(1, m);
  d.theta_tilde = theta_tilde.transpose();
  d.sigma2_tilde = sigma2.transpose();
  return d;
}

FHDataset toy_dataset(int m, std::uint64_t seed) {
  RngStream rng(seed, 0);
  FHDataset d;
  d.X.resize(m, 2);
  d.y.resize(m);
  d.D.resize(m);
  for (int i = 0; i < m; ++i) {
    d.X(i, 0) = 1.0;
    d.X(i, 1) = rng.normal();
    d.D[i] = 0.3 + 0.4 * (i % 4);
    d.y[i] = 1.0 + 0.5 * d.X(i, 1) + std::sqrt(0.7) * rng.normal() + std::sqrt(d.D[i]) * rng.normal();
    d.area.push_back("r" + std::to_string(i));
  }
  return d;
}

// tilted moments of one area by quadrature of exp(g1 w t - g2 w (t - c)^2 / 2) N(t; mu, v)
std::pair<double, double> quad_tilted(double mu, double v, double w, double c, double g1, double g2) {
  const double sd = std::sqrt(v);
  const double a = mu - 12 * sd, b = mu + 12 * sd;
  auto k = [&](double t) {
    return std::exp(g1 * w * (t - mu) - 0.5 * g2 * w * ((t - c) * (t - c) - (mu - c) * (mu - c)) -
                    0.5 * (t - mu) * (t - mu) / v);
  };
  const double z = testutil::simpson(k, a, b, 600);
  const double m1 = testutil::simpson([&](double t) { return t * k(t); }, a, b, 600) / z;
  const double m2 = testutil::simpson([&](double t) { return (t - c) * (t - c) * k(t); }, a, b, 600) / z;
  return {m1, m2};
}

}  // namespace

TEST(FayHerriot, ConditionalMomentsHandCase) {
  const auto cm = conditional_moments_fitted(1.0, 0.0, 1.0, 2.0, 1.0);
  EXPECT_NEAR(cm.theta_tilde, 1.0, 1e-15);
  EXPECT_NEAR(cm.sigma2_tilde, 0.5, 1e-15);
  VectorXd beta(2), x(2);
  beta << 0.5, 2.0;
  x << 1.0, 0.75;  // fit 2.0
  const auto zero = conditional_moments(0.7, beta, 1.3, 2.0, x, 0.4);
  EXPECT_DOUBLE_EQ(zero.theta_tilde, 2.0);
}

TEST(FayHerriot, ZeroSamplingVarianceLimit) {
  const auto cm = conditional_moments_fitted(1.0, -1.0, 0.5, 3.0, 1e-12);
  EXPECT_NEAR(cm.theta_tilde, 3.0, 1e-9);
  EXPECT_LT(cm.sigma2_tilde, 1e-11);
}

TEST(FayHerriotConjugacy, Theta) {
  struct Case { double u, fit, A, y, D; };
  for (const Case c : {Case{1.0, 0.0, 1.0, 2.0, 1.0}, Case{0.3, -1.2, 2.5, 0.4, 0.7}, Case{4.0, 2.0, 0.1, -1.0, 2.0}}) {
    const Normal post = fh_conditionals::theta(c.u, c.fit, c.A, c.y, c.D);
    const double sd = std::sqrt(post.var);
    const double err = quadrature_sup_error(
        [&](double t) { return normal_logpdf(t, c.fit, c.u * c.A) + normal_logpdf(c.y, t, c.D); },
        [&](double t) { return std::exp(log_pdf(post, t)); }, post.mean - 12 * sd, post.mean + 12 * sd);
    EXPECT_LT(err, kDensityTol);
  }
}

TEST(FayHerriotConjugacy, VarianceA) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    RngStream rng(seed, 0);
    const int m = 6;
    VectorXd theta(m), fit(m), u(m);
    for (int i = 0; i < m; ++i) {
      fit[i] = rng.normal();
      theta[i] = fit[i] + rng.normal();
      u[i] = 0.5 + rng.uniform();
    }
    FHPrior prior = FHPrior::defaults(1);
    prior.n0 = 1.0 + seed;
    prior.s0 = 0.5 * seed;
    const InverseGamma post = fh_conditionals::variance_A(prior, theta, fit, u);
    auto log_kernel = [&](double A) {
      double l = log_pdf(InverseGamma{prior.n0, prior.s0}, A);
      for (int i = 0; i < m; ++i) l += normal_logpdf(theta[i], fit[i], u[i] * A);
      return l;
    };
    const double err = quadrature_sup_error(log_kernel, [&](double A) { return std::exp(log_pdf(post, A)); },
                                            1e-4, 40.0, 400000);
    EXPECT_LT(err, kDensityTol) << seed;
  }
}

TEST(FayHerriotConjugacy, BetaScalar) {
  for (std::uint64_t seed : {4u, 5u, 6u}) {
    RngStream rng(seed, 0);
    const int m = 5;
    MatrixXd X = MatrixXd::Ones(m, 1);
    VectorXd theta(m), u(m);
    for (int i = 0; i < m; ++i) {
      theta[i] = 1.0 + rng.normal();
      u[i] = 0.5 + rng.uniform();
    }
    FHPrior prior = FHPrior::defaults(1);
    prior.b0 << 0.3 * seed;
    prior.B0 << 2.0;
    const double A = 0.8;
    const auto g = fh_conditionals::beta(prior, X, theta, u, A);
    const double var = 1.0 / g.precision(0, 0);
    auto log_kernel = [&](double b) {
      double l = normal_logpdf(b, prior.b0[0], prior.B0(0, 0));
      for (int i = 0; i < m; ++i) l += normal_logpdf(theta[i], b, u[i] * A);
      return l;
    };
    const double sd = std::sqrt(var);
    const double err = quadrature_sup_error(log_kernel, [&](double b) { return std::exp(normal_logpdf(b, g.mean[0], var)); },
                                            g.mean[0] - 12 * sd, g.mean[0] + 12 * sd);
    EXPECT_LT(err, kDensityTol) << seed;
  }
}

TEST(FayHerriotConjugacy, BetaSlice) {
  // conditional of beta_1 given beta_0 from the joint Gaussian vs quadrature
  RngStream rng(7, 0);
  const int m = 8;
  MatrixXd X(m, 2);
  VectorXd theta(m), u(m);
  for (int i = 0; i < m; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.normal();
    theta[i] = 0.5 + X(i, 1) + rng.normal();
    u[i] = 0.5 + rng.uniform();
  }
  FHPrior prior = FHPrior::defaults(2);
  prior.b0 << 0.1, -0.2;
  prior.B0 << 2.0, 0.3, 0.3, 1.0;
  const double A = 0.6;
  const auto g = fh_conditionals::beta(prior, X, theta, u, A);
  const double b0 = 0.4;
  const double q11 = g.precision(1, 1);
  const double cm = g.mean[1] - g.precision(1, 0) * (b0 - g.mean[0]) / q11;
  const MatrixXd B0inv = prior.B0.inverse();
  auto log_kernel = [&](double b1) {
    Eigen::Vector2d b(b0, b1);
    const Eigen::Vector2d d = b - prior.b0;
    double l = -0.5 * d.dot(B0inv * d);
    for (int i = 0; i < m; ++i) l += normal_logpdf(theta[i], X.row(i).dot(b), u[i] * A);
    return l;
  };
  const double sd = 1.0 / std::sqrt(q11);
  const double err = quadrature_sup_error(log_kernel, [&](double b1) { return std::exp(normal_logpdf(b1, cm, 1.0 / q11)); },
                                          cm - 12 * sd, cm + 12 * sd);
  EXPECT_LT(err, kDensityTol);
}

TEST(FayHerriotConjugacy, LaplaceLocalVariance) {
  struct Case { double r, A, lambda; };
  for (const Case c : {Case{0.5, 1.0, 1.0}, Case{-1.5, 0.4, 2.0}, Case{0.05, 2.0, 0.7}}) {
    const InverseGaussian ig = fh_conditionals::laplace_inverse_u(c.r, c.A, c.lambda);
    auto density = [&](double u) { return std::exp(log_pdf(ig, 1.0 / u)) / (u * u); };
    auto log_kernel = [&](double u) {
      return log_pdf(Exponential{0.5 * c.lambda * c.lambda}, u) + normal_logpdf(c.r, 0.0, u * c.A);
    };
    const double err = testutil::quadrature_sup_error_positive(log_kernel, density, -30.0, 12.0, 200000);
    EXPECT_LT(err, kDensityTol) << c.r;
  }
}

TEST(FayHerriotConjugacy, HorseshoeLocalVariance) {
  struct Case { double r, A, aux; };
  for (const Case c : {Case{0.5, 1.0, 1.0}, Case{-1.5, 0.4, 0.3}, Case{0.2, 2.0, 3.0}}) {
    const InverseGamma post = fh_conditionals::horseshoe_u(c.r, c.A, c.aux);
    auto log_kernel = [&](double u) {
      return log_pdf(InverseGamma{0.5, 1.0 / c.aux}, u) + normal_logpdf(c.r, 0.0, u * c.A);
    };
    const double err = testutil::quadrature_sup_error_positive(log_kernel, [&](double u) { return std::exp(log_pdf(post, u)); }, -30.0,
                                            30.0, 200000);
    EXPECT_LT(err, kDensityTol) << c.r;
  }
}

TEST(FayHerriotConjugacy, HorseshoeAuxiliary) {
  for (double u : {0.2, 1.0, 5.0}) {
    const InverseGamma post = fh_conditionals::horseshoe_aux(u);
    auto log_kernel = [&](double a) { return log_pdf(InverseGamma{0.5, 1.0}, a) + log_pdf(InverseGamma{0.5, 1.0 / a}, u); };
    const double err = testutil::quadrature_sup_error_positive(log_kernel, [&](double a) { return std::exp(log_pdf(post, a)); }, -30.0,
                                            30.0, 200000);
    EXPECT_LT(err, kDensityTol) << u;
  }
}

TEST(FayHerriotConjugacy, HorseshoeMarginalIsHalfCauchy) {
  // u = l^2 with l ~ C+(0,1): integrating aux out of the two inverse gammas
  for (double u : {0.1, 1.0, 7.0}) {
    // in t = log a the integrand decays exponentially both ways
    const double marg = testutil::simpson(
        [&](double t) {
          const double a = std::exp(t);
          return std::exp(log_pdf(InverseGamma{0.5, 1.0}, a) + log_pdf(InverseGamma{0.5, 1.0 / a}, u) + t);
        },
        -40.0, 60.0, 200000);
    const double l = std::sqrt(u);
    const double expect = 2.0 / M_PI / (1.0 + u) / (2.0 * l);
    EXPECT_NEAR(marg, expect, 1e-4 * expect);
  }
}

TEST(FayHerriot, GammaHandCase) {
  const FHDraws d = fixed_draws(VectorXd::Ones(1), VectorXd::Constant(1, 0.5));
  const BenchmarkConstraint bc{VectorXd::Ones(1), 2.0, std::nullopt};
  EXPECT_NEAR(tilt_gamma_mean(d, bc), 2.0, 1e-12);
}

TEST(FayHerriot, BenchmarkedMeansHandCase) {
  const FHDraws d = fixed_draws(VectorXd::Ones(2), VectorXd::Constant(2, 0.5));
  const BenchmarkConstraint bc{VectorXd::Constant(2, 0.5), 1.5, std::nullopt};
  const double gamma = tilt_gamma_mean(d, bc);
  EXPECT_NEAR(gamma, 2.0, 1e-12);
  const VectorXd b = benchmarked_means(d, bc, gamma);
  EXPECT_NEAR(b[0], 1.5, 1e-12);
  EXPECT_NEAR(b[1], 1.5, 1e-12);
  EXPECT_EQ(benchmarked_means(d, bc, 0.0), d.theta_mean());
}

TEST(FayHerriot, DoubledWeightsStillBenchmark) {
  const FHDataset data = toy_dataset(15, 3);
  RngStream rng(1, 0);
  const FHDraws d = gibbs_fh(data, FHPrior::defaults(2), {50, 200, 1, 1}, rng);
  BenchmarkConstraint bc{VectorXd::Constant(15, 1.0 / 15), 0.7, std::nullopt};
  const double g1 = tilt_gamma_mean(d, bc);
  BenchmarkConstraint bc2 = bc;
  bc2.w *= 2.0;
  const double g2 = tilt_gamma_mean(d, bc2);
  const double gap1 = bc.C - bc.w.dot(d.theta_mean());
  const double gap2 = bc2.C - bc2.w.dot(d.theta_mean());
  const double s1 = (bc.w.array().square() * d.sigma2_mean().array()).sum();
  EXPECT_NEAR(g2, gap2 / (4.0 * s1), 1e-12 * std::abs(g2) + 1e-14);
  EXPECT_NEAR(g1, gap1 / s1, 1e-12 * std::abs(g1) + 1e-14);
  EXPECT_NEAR(bc2.w.dot(benchmarked_means(d, bc2, g2)), bc2.C, 1e-10 * std::abs(bc2.C));
}

TEST(FayHerriot, ExactBenchmarkEveryFamily) {
  const FHDataset data = toy_dataset(20, 4);
  for (auto fam : {EffectFamily::Normal, EffectFamily::Laplace, EffectFamily::Horseshoe}) {
    RngStream rng(2, 0);
    const FHDraws d = gibbs_fh(data, FHPrior::defaults(2, fam), {100, 300, 1, 1}, rng);
    for (double C : {-2.0, 0.0, 1.0, 5.0}) {
      const BenchmarkConstraint bc{VectorXd::Constant(20, 0.05), C, std::nullopt};
      const VectorXd b = benchmarked_means(d, bc, tilt_gamma_mean(d, bc));
      EXPECT_NEAR(bc.w.dot(b), C, 1e-10 * std::max(1.0, std::abs(C))) << to_string(fam);
    }
  }
}

TEST(FayHerriot, TiltedSamplesMeetConstraintInExpectation) {
  const FHDataset data = toy_dataset(10, 5);
  RngStream rng(3, 0);
  const FHDraws d = gibbs_fh(data, FHPrior::defaults(2), {100, 1000, 1, 1}, rng);
  const BenchmarkConstraint bc{VectorXd::Constant(10, 0.1), 2.0, std::nullopt};
  const double gamma = tilt_gamma_mean(d, bc);
  RngStream srng(3, 1);
  const DrawMatrix t = sample_tilted(d, bc, gamma, srng, 100);
  ASSERT_EQ(t.draws(), 100000);
  VectorXd stat = t.theta() * bc.w;
  const double mean = stat.mean();
  const double sd = std::sqrt((stat.array() - mean).square().mean());
  EXPECT_NEAR(mean, bc.C, 4.0 * sd / std::sqrt(static_cast<double>(stat.size())));
}

TEST(FayHerriot, RaoBlackwellMatchesRawDraws) {
  const FHDataset data = toy_dataset(3 * 5, 6);
  RngStream rng(4, 0);
  const FHDraws d = gibbs_fh(data, FHPrior::defaults(2), {200, 2000, 1, 1}, rng);
  RngStream srng(4, 1);
  const DrawMatrix raw = sample_tilted(d, {VectorXd::Constant(15, 1.0 / 15), 0.0, std::nullopt}, 0.0, srng);
  const VectorXd rb = d.theta_mean();
  const VectorXd var = d.posterior_variance();
  for (int i = 0; i < 15; ++i) {
    const double se = std::sqrt(var[i] / raw.draws());
    EXPECT_NEAR(raw.theta().col(i).mean(), rb[i], 4.0 * se * 2.0) << i;  // chain autocorrelation allowance
  }
}

TEST(FayHerriot, DegeneratePriorsGiveExactNormal) {
  FHDataset data;
  data.X = MatrixXd::Ones(3, 1);
  data.y = (VectorXd(3) << 0.5, 2.0, 1.0).finished();
  data.D = (VectorXd(3) << 0.5, 1.0, 0.8).finished();
  data.area = {"a", "b", "c"};
  const double beta = 1.0, A = 0.7;
  FHPrior prior = FHPrior::defaults(1);
  prior.b0 << beta;
  prior.B0 << 1e-14;
  prior.n0 = 1e9;
  prior.s0 = A * (prior.n0 + 1.0);
  // theta draws: one variate per retained (beta, A, u)
  RngStream rng(5, 0);
  const FHDraws d = gibbs_fh(data, prior, {200, 4000, 1, 1}, rng);
  RngStream srng(5, 1);
  const DrawMatrix th = sample_tilted(d, {VectorXd::Constant(3, 1.0 / 3), 0.0, std::nullopt}, 0.0, srng);
  for (int i = 0; i < 2; ++i) {
    const double sig2 = A * data.D[i] / (A + data.D[i]);
    const double mu = data.y[i] - data.D[i] * (data.y[i] - beta) / (A + data.D[i]);
    std::vector<double> col(static_cast<std::size_t>(th.draws()));
    for (int s = 0; s < th.draws(); ++s) col[static_cast<std::size_t>(s)] = th.theta()(s, i);
    const double ks = testutil::ks_statistic(col, [&](double t) { return testutil::normal_cdf(t, mu, std::sqrt(sig2)); });
    EXPECT_LT(ks, testutil::ks_critical_01(col.size())) << i;
  }
}

TEST(FayHerriot, SameSeedSameChains) {
  const FHDataset data = toy_dataset(10, 7);
  const ChainConfig cfg{50, 100, 2, 3};
  set_worker_count(1);
  const FHDraws a = gibbs_fh_chains(data, FHPrior::defaults(2, EffectFamily::Horseshoe), cfg, 99);
  set_worker_count(3);
  const FHDraws b = gibbs_fh_chains(data, FHPrior::defaults(2, EffectFamily::Horseshoe), cfg, 99);
  set_worker_count(0);
  ASSERT_EQ(a.draws(), 300);
  EXPECT_TRUE(a.A == b.A);
  EXPECT_TRUE(a.u == b.u);
  EXPECT_TRUE(a.beta == b.beta);
}

TEST(FayHerriot, DataValidation) {
  FHDataset d = toy_dataset(5, 8);
  d.D[2] = 0.0;
  EXPECT_THROW(d.validate(), DataError);
  FHDataset r = toy_dataset(5, 8);
  r.X.col(1) = r.X.col(0);
  EXPECT_THROW(r.validate(), DataError);
}

TEST(FayHerriotTwoMoment, DegenerateCaseGivesZero) {
  const FHDataset data = toy_dataset(10, 9);
  RngStream rng(6, 0);
  const FHDraws d = gibbs_fh(data, FHPrior::defaults(2), {100, 400, 1, 1}, rng);
  const VectorXd th = d.theta_mean();
  BenchmarkConstraint bc{VectorXd::Constant(10, 0.1), 0.0, std::nullopt};
  const auto v = two_moment_values(d, bc, th, 0.0, 0.0);
  bc.C = v.first;
  bc.H = v.second;
  const auto t = tilt_two_moment(d, bc, th);
  EXPECT_NEAR(t.gamma1, 0.0, 1e-10);
  EXPECT_NEAR(t.gamma2, 0.0, 1e-10);
}

TEST(FayHerriotTwoMoment, Gamma2ZeroSliceIsLinear) {
  const FHDataset data = toy_dataset(10, 10);
  RngStream rng(7, 0);
  const FHDraws d = gibbs_fh(data, FHPrior::defaults(2), {100, 400, 1, 1}, rng);
  const BenchmarkConstraint bc{VectorXd::Constant(10, 0.1), 1.0, std::nullopt};
  const VectorXd th = d.theta_mean();
  const double s = (bc.w.array().square() * d.sigma2_mean().array()).sum();
  const double base = two_moment_values(d, bc, th, 0.0, 0.0).first;
  for (double g : {-1.0, 0.5, 3.0}) {
    EXPECT_NEAR(two_moment_values(d, bc, th, g, 0.0).first, base + g * s, 1e-12);
  }
}

TEST(FayHerriotTwoMoment, MatchesGridSearchOracle) {
  // m = 2, one fixed hyperparameter draw
  const VectorXd mu = (VectorXd(2) << 0.3, 1.4).finished();
  const VectorXd v = (VectorXd(2) << 0.5, 0.9).finished();
  const VectorXd w = (VectorXd(2) << 0.4, 0.6).finished();
  const VectorXd c = (VectorXd(2) << 0.2, 1.0).finished();
  const FHDraws d = fixed_draws(mu, v);
  auto moments = [&](double g1, double g2) {
    double first = 0.0, second = 0.0;
    for (int i = 0; i < 2; ++i) {
      const auto [m1, m2] = quad_tilted(mu[i], v[i], w[i], c[i], g1, g2);
      first += w[i] * m1;
      second += w[i] * m2;
    }
    return std::pair{first, second};
  };
  const auto [C, H] = moments(0.8, 0.5);
  BenchmarkConstraint bc{w, C, H};
  const auto sol = tilt_two_moment(d, bc, c);

  // coarse grid then a fine grid around the best cell
  double best = INFINITY, b1 = 0, b2 = 0;
  auto scan = [&](double lo1, double hi1, double lo2, double hi2, double step) {
    for (double g1 = lo1; g1 <= hi1 + 1e-12; g1 += step) {
      for (double g2 = lo2; g2 <= hi2 + 1e-12; g2 += step) {
        const auto [f, s] = moments(g1, g2);
        const double r = (f - C) * (f - C) + (s - H) * (s - H);
        if (r < best) {
          best = r;
          b1 = g1;
          b2 = g2;
        }
      }
    }
  };
  scan(-2.0, 2.0, -1.0, 2.0, 0.05);
  const double c1 = b1, c2 = b2;
  scan(c1 - 0.05, c1 + 0.05, c2 - 0.05, c2 + 0.05, 0.0005);
  EXPECT_NEAR(sol.gamma1, b1, 1e-3);
  EXPECT_NEAR(sol.gamma2, b2, 1e-3);
  // tilted means and draws stay consistent with the quadrature moments
  const VectorXd tm = two_moment_means(d, bc, c, sol);
  EXPECT_NEAR(w.dot(tm), C, 1e-9);
}

TEST(FayHerriotTwoMoment, InfeasibleSecondMoment) {
  const VectorXd mu = (VectorXd(2) << 0.0, 1.0).finished();
  const FHDraws d = fixed_draws(mu, VectorXd::Constant(2, 0.5));
  // any tilt meeting the mean keeps sum w (theta - theta_hat)^2 >= gap^2 / sum w = 4
  BenchmarkConstraint bc{VectorXd::Constant(2, 0.5), 2.5, 1.0};
  EXPECT_THROW(tilt_two_moment(d, bc, mu), InfeasibleTargetError);
}

TEST(FayHerriotTwoMoment, RequiresNormalFamily) {
  FHDraws d = fixed_draws(VectorXd::Ones(2), VectorXd::Constant(2, 0.5));
  d.family = EffectFamily::Laplace;
  const BenchmarkConstraint bc{VectorXd::Constant(2, 0.5), 1.0, 1.0};
  EXPECT_ANY_THROW(tilt_two_moment(d, bc, VectorXd::Ones(2)));
}

TEST(FayHerriotTwoMoment, TiltedVariancesPositive) {
  const FHDataset data = toy_dataset(10, 11);
  RngStream rng(8, 0);
  const FHDraws d = gibbs_fh(data, FHPrior::defaults(2), {100, 400, 1, 1}, rng);
  const VectorXd th = d.theta_mean();
  BenchmarkConstraint bc{VectorXd::Constant(10, 0.1), 0.0, std::nullopt};
  const auto v = two_moment_values(d, bc, th, 0.0, 0.0);
  bc.C = v.first + 0.1;
  bc.H = 0.5 * v.second;
  const auto t = tilt_two_moment(d, bc, th);
  EXPECT_GT(t.gamma2, two_moment_gamma2_floor(d, bc));
  EXPECT_LT(std::abs(t.residual_mean), 1e-8);
  EXPECT_LT(std::abs(t.residual_second), 1e-8);
  RngStream srng(8, 1);
  const DrawMatrix s = sample_two_moment(d, bc, th, t, srng);
  EXPECT_EQ(s.draws(), 400);
}
