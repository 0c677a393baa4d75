#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/distributions/gamma.hpp>

#include "test_util.hpp"
#include "tiltbench/error.hpp"
#include "tiltbench/parallel.hpp"
#include "tiltbench/poisson_gamma.hpp"

using namespace tiltbench;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

PGDataset toy_pg(int m, std::uint64_t seed) {
  RngStream rng(seed, 0);
  PGDataset d;
  d.X.resize(m, 2);
  d.z.resize(m);
  d.n.resize(m);
  for (int i = 0; i < m; ++i) {
    d.X(i, 0) = 1.0;
    d.X(i, 1) = rng.normal();
    d.n[i] = 5.0 + 5.0 * (i % 5);
    const double mu = std::exp(1.0 + 0.4 * d.X(i, 1));
    const double lam = sample_gamma(5.0 * mu, 5.0, rng);
    d.z[i] = sample_poisson(lam * d.n[i], rng);
    d.area.push_back("p" + std::to_string(i));
  }
  return d;
}

// one point-mass draw per area
PGDraws point_draws(const VectorXd& shape, const VectorXd& rate) {
  PGDraws d;
  d.beta = MatrixXd::Zero(1, 1);
  d.nu = VectorXd::Ones(1);
  d.shape = shape.transpose();
  d.rate = rate.transpose();
  return d;
}

}  // namespace

TEST(PoissonGammaConjugacy, Lambda) {
  struct Case { double z, n, nu, mi; };
  for (const Case c : {Case{3, 2, 1, 1}, Case{0, 10, 5, 0.4}, Case{27, 15, 2.5, 2.0}}) {
    const Gamma post = lambda_conditional(c.z, c.n, c.nu, c.mi);
    auto log_kernel = [&](double l) {
      return log_pdf(Gamma{c.nu * c.mi, c.nu}, l) + log_pdf(Poisson{c.n * l}, c.z);
    };
    const double hi = post.shape / post.rate + 20 * std::sqrt(post.shape) / post.rate;
    const double lo = c.nu * c.mi + c.z < 1.0 ? 1e-7 : 1e-12;
    const double err = testutil::quadrature_sup_error(log_kernel, [&](double l) { return std::exp(log_pdf(post, l)); },
                                                      lo, hi, 400000);
    EXPECT_LT(err, 1e-6) << c.z;
  }
}

TEST(PoissonGamma, GammaHandCase) {
  // n = 1, y = 2, nu = 1, m = 1: Ga(3, 2); solve 3 / (2 + gamma) = 1
  const PGDraws d = point_draws(VectorXd::Constant(1, 3.0), VectorXd::Constant(1, 2.0));
  const BenchmarkConstraint bc{VectorXd::Ones(1), 1.0, std::nullopt};
  const double g = solve_gamma_pg(d, bc);
  EXPECT_NEAR(g, 1.0, 1e-10);
  EXPECT_NEAR(benchmarked_means_pg(d, bc, g)[0], 1.0, 1e-10);
}

TEST(PoissonGamma, NegativeGammaAdmitted) {
  // target above the unconstrained mean needs gamma < 0
  const PGDraws d = point_draws(VectorXd::Constant(1, 3.0), VectorXd::Constant(1, 2.0));
  const BenchmarkConstraint bc{VectorXd::Ones(1), 3.0, std::nullopt};
  const double g = solve_gamma_pg(d, bc);
  EXPECT_NEAR(g, -1.0, 1e-10);
  EXPECT_GT(g, pg_gamma_floor(d, bc));
}

TEST(PoissonGamma, TargetAlreadyMet) {
  const PGDataset data = toy_pg(15, 1);
  RngStream rng(1, 0);
  const PGDraws d = gibbs_pg(data, PGPrior::defaults(2), {300, 300, 1, 1}, rng);
  const VectorXd w = data.n / data.n.sum();
  const BenchmarkConstraint bc{w, w.dot(d.lambda_mean()), std::nullopt};
  EXPECT_NEAR(solve_gamma_pg(d, bc), 0.0, 1e-9);
}

TEST(PoissonGamma, LeftSideDecreasing) {
  RngStream rng(2, 0);
  for (int inst = 0; inst < 100; ++inst) {
    const int S = 20, m = 4;
    PGDraws d;
    d.beta = MatrixXd::Zero(S, 1);
    d.nu = VectorXd::Ones(S);
    d.shape.resize(S, m);
    d.rate.resize(S, m);
    for (int s = 0; s < S; ++s) {
      for (int i = 0; i < m; ++i) {
        d.shape(s, i) = 0.1 + 10 * rng.uniform();
        d.rate(s, i) = 0.1 + 10 * rng.uniform();
      }
    }
    VectorXd w(m);
    for (int i = 0; i < m; ++i) w[i] = 0.1 + rng.uniform();
    w /= w.sum();
    const BenchmarkConstraint bc{w, 1.0, std::nullopt};
    const double g = pg_gamma_floor(d, bc) + 0.5 + 3 * rng.uniform();
    EXPECT_GT(pg_tilted_total(d, bc, g), pg_tilted_total(d, bc, g + 1.0));
  }
}

TEST(PoissonGamma, NonPositiveTargetInfeasible) {
  const PGDraws d = point_draws(VectorXd::Constant(1, 3.0), VectorXd::Constant(1, 2.0));
  EXPECT_THROW(solve_gamma_pg(d, {VectorXd::Ones(1), 0.0, std::nullopt}), InfeasibleTargetError);
  EXPECT_THROW(solve_gamma_pg(d, {VectorXd::Ones(1), -1.0, std::nullopt}), InfeasibleTargetError);
}

TEST(PoissonGamma, TiltedSamplesMeetConstraint) {
  const PGDataset data = toy_pg(10, 3);
  RngStream rng(3, 0);
  const PGDraws d = gibbs_pg(data, PGPrior::defaults(2), {500, 1000, 1, 1}, rng);
  const VectorXd w = data.n / data.n.sum();
  const BenchmarkConstraint bc{w, 0.9 * w.dot(data.y()), std::nullopt};
  const double g = solve_gamma_pg(d, bc);
  EXPECT_NEAR(w.dot(benchmarked_means_pg(d, bc, g)), bc.C, 1e-10 * bc.C);
  RngStream srng(3, 1);
  const DrawMatrix t = sample_tilted_pg(d, bc, g, srng, 100);
  ASSERT_EQ(t.draws(), 100000);
  EXPECT_GT(t.theta().minCoeff(), 0.0);
  const VectorXd stat = t.theta() * w;
  const double mean = stat.mean();
  const double sd = std::sqrt((stat.array() - mean).square().mean());
  EXPECT_NEAR(mean, bc.C, 4.0 * sd / std::sqrt(static_cast<double>(stat.size())));
}

TEST(PoissonGamma, ZeroCountsShrinkTowardPrior) {
  PGDataset data = toy_pg(10, 4);
  data.z.setZero();
  const PGDraws d = derive_pg_draws(data, MatrixXd::Constant(1, 2, 0.0), VectorXd::Constant(1, 4.0), {});
  const VectorXd lm = d.lambda_mean();
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(lm[i], 4.0 / (data.n[i] + 4.0), 1e-14);
}

TEST(PoissonGamma, DegeneratePriorsGiveExactGamma) {
  const PGDataset data = toy_pg(6, 5);
  const VectorXd beta = (VectorXd(2) << 1.0, 0.4).finished();
  const double nu = 5.0;
  PGPrior prior = PGPrior::defaults(2);
  prior.b0 = beta;
  prior.B0 = 1e-8 * MatrixXd::Identity(2, 2);
  prior.a_nu = 1e8 * nu;
  prior.b_nu = 1e8;
  RngStream rng(6, 0);
  const PGDraws d = gibbs_pg(data, prior, {3000, 4000, 1, 1}, rng);
  EXPECT_NEAR(d.nu.mean(), nu, 1e-2);
  RngStream srng(6, 1);
  const DrawMatrix lam = sample_tilted_pg(d, {VectorXd::Constant(6, 1.0 / 6), 1.0, std::nullopt}, 0.0, srng);
  for (int i = 0; i < 3; ++i) {
    const double mi = std::exp(data.X.row(i).dot(beta));
    boost::math::gamma_distribution<> g(data.z[i] + nu * mi, 1.0 / (data.n[i] + nu));
    std::vector<double> col(static_cast<std::size_t>(lam.draws()));
    for (int s = 0; s < lam.draws(); ++s) col[static_cast<std::size_t>(s)] = lam.theta()(s, i);
    const double ks = testutil::ks_statistic(col, [&](double x) { return boost::math::cdf(g, x); });
    EXPECT_LT(ks, testutil::ks_critical_01(col.size())) << i;
  }
}

TEST(PoissonGamma, AcceptanceRatesReasonable) {
  const PGDataset data = toy_pg(50, 6);
  RngStream rng(7, 0);
  const PGDraws d = gibbs_pg(data, PGPrior::defaults(2), {1000, 1000, 1, 1}, rng);
  EXPECT_GT(d.accept_beta, 0.1);
  EXPECT_LT(d.accept_beta, 0.6);
  EXPECT_GT(d.accept_nu, 0.1);
  EXPECT_LT(d.accept_nu, 0.6);
  EXPECT_TRUE(d.warnings.empty());
}

TEST(PoissonGamma, RecoversHyperparameters) {
  // m = 200 from the model itself: posterior means near the truth
  RngStream rng(8, 0);
  const int m = 200;
  PGDataset data;
  data.X.resize(m, 2);
  data.z.resize(m);
  data.n = VectorXd::Constant(m, 20.0);
  for (int i = 0; i < m; ++i) {
    data.X(i, 0) = 1.0;
    data.X(i, 1) = rng.normal();
    const double mu = std::exp(0.5 + 0.5 * data.X(i, 1));
    data.z[i] = sample_poisson(sample_gamma(5.0 * mu, 5.0, rng) * 20.0, rng);
  }
  RngStream chain(8, 1);
  const PGDraws d = gibbs_pg(data, PGPrior::defaults(2), {1000, 2000, 1, 1}, chain);
  const VectorXd bm = d.beta.colwise().mean();
  EXPECT_NEAR(bm[0], 0.5, 0.1);
  EXPECT_NEAR(bm[1], 0.5, 0.1);
  EXPECT_NEAR(d.nu.mean(), 5.0, 2.0);
}

TEST(PoissonGamma, SameSeedSameChains) {
  const PGDataset data = toy_pg(10, 9);
  const ChainConfig cfg{100, 100, 1, 2};
  set_worker_count(1);
  const PGDraws a = gibbs_pg_chains(data, PGPrior::defaults(2), cfg, 5);
  set_worker_count(2);
  const PGDraws b = gibbs_pg_chains(data, PGPrior::defaults(2), cfg, 5);
  set_worker_count(0);
  EXPECT_TRUE(a.nu == b.nu);
  EXPECT_TRUE(a.beta == b.beta);
  EXPECT_EQ(a.draws(), 200);
}

TEST(PoissonGamma, DataValidation) {
  PGDataset d = toy_pg(5, 10);
  d.z[0] = 1.5;
  EXPECT_THROW(d.validate(), DataError);
  d = toy_pg(5, 10);
  d.n[1] = 0.0;
  EXPECT_THROW(d.validate(), DataError);
}
