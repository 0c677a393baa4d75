#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tiltbench/et_core.hpp"
#include "tiltbench/fay_herriot.hpp"
#include "tiltbench/poisson_gamma.hpp"

namespace tiltbench {

/// Marginal posterior means and variances of the area parameters.
struct PosteriorSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;

  void validate() const;
};

PosteriorSummary summarize(const FHDraws& draws);
PosteriorSummary summarize(const PGDraws& draws);

/// Constrained Bayes estimator with precision-type weights phi_i:
///   theta_i + (w_i / phi_i) (C - sum_j w_j theta_j) / sum_j (w_j^2 / phi_j).
/// Larger phi_i (a more certain area) receives a smaller adjustment, and
/// the result meets the constraint exactly.
Eigen::VectorXd constrained_bayes(const PosteriorSummary& summary, const Eigen::VectorXd& phi,
                                  const BenchmarkConstraint& bc);

struct MdiResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  double gamma = 0.0;
};

/// Exponential tilt of the diagonal normal approximation N(mean, diag(var)):
/// mean_i + gamma w_i var_i with gamma = (C - sum w mean) / sum w^2 var.
MdiResult mdi_normal(const PosteriorSummary& summary, const BenchmarkConstraint& bc);

struct KlEstimate {
  double value = 0.0;
  std::vector<std::string> warnings;
};

/// KL between the original posterior f and its mean-constraint tilt,
///   log V(gamma) - gamma sum_i w_i E_f[theta_i],
/// V(gamma) = (1/S) sum_s prod_i E[exp(gamma w_i theta_i) | draw s]
/// evaluated with the exact normal moment generating function per draw.
KlEstimate kl_tilted(const FHDraws& draws, const BenchmarkConstraint& bc, double gamma);

/// Two-moment version; the per-area tilt factor is
/// exp(gamma1 w theta - gamma2 w (theta - theta_hat)^2 / 2).
KlEstimate kl_tilted(const FHDraws& draws, const BenchmarkConstraint& bc,
                     const Eigen::VectorXd& theta_hat, const TwoMomentTilt& tilt);

/// Poisson-gamma version with tilt exp(-gamma sum w_i lambda_i) and the
/// gamma moment generating function per draw.
KlEstimate kl_tilted(const PGDraws& draws, const BenchmarkConstraint& bc, double gamma);

/// KL from the posterior f to the MDI posterior. The departure of f from
/// its normal approximation is measured area by area on the marginal
/// mixtures (binned, exact normal CDFs per draw); the tilt term
/// gamma^2 sum w^2 var / 2 is exact.
KlEstimate kl_normal_approx(const FHDraws& draws, const BenchmarkConstraint& bc,
                            const MdiResult& mdi);

/// Clamp rule shared by every KL estimator: tiny negative values are
/// round-off and become zero; anything below -1e-8 is also zeroed but
/// reported.
KlEstimate clamp_kl(double raw);

}  // namespace tiltbench
