#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tiltbench/distributions.hpp"
#include "tiltbench/et_core.hpp"
#include "tiltbench/fay_herriot.hpp"
#include "tiltbench/rng.hpp"

namespace tiltbench {

/// Counts z_i with exposures n_i; the observed rate is y_i = z_i / n_i.
struct PGDataset {
  Eigen::VectorXd z;  // nonnegative integers
  Eigen::VectorXd n;
  Eigen::MatrixXd X;
  std::vector<std::string> area;

  Eigen::Index m() const { return z.size(); }
  Eigen::Index p() const { return X.cols(); }
  Eigen::VectorXd y() const { return z.cwiseQuotient(n); }

  void validate() const;
};

struct PGPrior {
  Eigen::VectorXd b0;  // beta ~ N(b0, B0)
  Eigen::MatrixXd B0;
  double a_nu = 1.0;  // nu ~ Gamma(a_nu, b_nu), shape-rate
  double b_nu = 0.1;

  static PGPrior defaults(Eigen::Index p);
  void validate(Eigen::Index p) const;
};

/// Retained (beta, nu) draws with the gamma conditional of every lambda_i:
///   lambda_i | beta, nu, y ~ Ga(z_i + nu m_i, n_i + nu),  m_i = exp(x_i'beta).
struct PGDraws {
  Eigen::MatrixXd beta;  // S x p
  Eigen::VectorXd nu;    // S
  RowMatrix shape;       // S x m
  RowMatrix rate;        // S x m
  double accept_beta = 0.0;
  double accept_nu = 0.0;
  std::vector<std::string> warnings;
  DrawProvenance meta;

  Eigen::Index draws() const { return nu.size(); }
  Eigen::Index areas() const { return shape.cols(); }

  /// Rao-Blackwellized posterior means E[shape/rate].
  Eigen::VectorXd lambda_mean() const;
  /// Var(lambda_i | y) = E[shape/rate^2] + Var(shape/rate).
  Eigen::VectorXd posterior_variance() const;
};

/// Gamma conditional parameters for stored (beta, nu) draws; shared by the
/// sampler and the draw loader.
PGDraws derive_pg_draws(const PGDataset& data, Eigen::MatrixXd beta, Eigen::VectorXd nu,
                        DrawProvenance meta);

/// Full conditional of lambda_i: Ga(z_i + nu m_i, n_i + nu).
Gamma lambda_conditional(double z, double n, double nu, double m_i);

/// Log density (up to a constant) of (beta, nu) given the lambdas:
/// log pi(beta) + log pi(nu) + sum_i log Ga(lambda_i; nu m_i, nu).
double pg_hyper_log_posterior(const PGDataset& data, const PGPrior& prior,
                              const Eigen::VectorXd& lambda, const Eigen::VectorXd& beta, double nu);

/// Gibbs sampler: lambda from its gamma conditional, then random-walk
/// Metropolis-Hastings on beta (joint normal proposal) and on log nu. The
/// proposal scales adapt during burn-in toward 0.3 acceptance and are
/// frozen afterwards. Acceptance outside [0.05, 0.95] attaches a warning.
PGDraws gibbs_pg(const PGDataset& data, const PGPrior& prior, const ChainConfig& chain,
                 RngStream& rng);

/// `chain.chains` chains on streams (seed, 0..chains-1), concatenated.
PGDraws gibbs_pg_chains(const PGDataset& data, const PGPrior& prior, const ChainConfig& chain,
                        std::uint64_t seed);

/// Draw-averaged left side of the gamma equation:
///   (1/S) sum_s sum_i w_i shape_i^(s) / (rate_i^(s) + gamma w_i).
double pg_tilted_total(const PGDraws& draws, const BenchmarkConstraint& bc, double gamma);

/// Smallest admissible gamma: -min_{i,s} rate_i^(s) / w_i.
double pg_gamma_floor(const PGDraws& draws, const BenchmarkConstraint& bc);

/// Solves pg_tilted_total(gamma) = C on (floor, inf). The left side is
/// strictly decreasing, so the root is unique; throws
/// InfeasibleTargetError when C is outside its range.
double solve_gamma_pg(const PGDraws& draws, const BenchmarkConstraint& bc);

/// E_eta[shape_i / (rate_i + gamma w_i)].
Eigen::VectorXd benchmarked_means_pg(const PGDraws& draws, const BenchmarkConstraint& bc,
                                     double gamma);

/// Gamma variates from Ga(shape, rate + gamma w_i), `per_draw` per draw.
DrawMatrix sample_tilted_pg(const PGDraws& draws, const BenchmarkConstraint& bc, double gamma,
                            RngStream& rng, int per_draw = 1);

}  // namespace tiltbench
