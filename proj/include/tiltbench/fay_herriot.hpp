#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tiltbench/distributions.hpp"
#include "tiltbench/et_core.hpp"
#include "tiltbench/rng.hpp"

namespace tiltbench {

/// Area-level data: direct estimates y_i, design X (intercept included)
/// and known sampling variances D_i.
struct FHDataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::VectorXd D;
  std::vector<std::string> area;

  Eigen::Index m() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }

  /// Throws DataError on shape mismatch, non-finite entries, m < p + 1,
  /// D_i <= 0 or a rank-deficient X.
  void validate() const;
};

/// Mixing law for the local variance u_i of the random effect.
enum class EffectFamily { Normal, Laplace, Horseshoe };

EffectFamily parse_effect_family(const std::string& s);
std::string to_string(EffectFamily f);

struct FHPrior {
  EffectFamily family = EffectFamily::Normal;
  double n0 = 1.0;  // A ~ IG(n0, s0)
  double s0 = 1.0;
  Eigen::VectorXd b0;  // beta ~ N(b0, B0)
  Eigen::MatrixXd B0;
  double lambda = 1.0;  // Laplace: u_i ~ Exp(lambda^2 / 2)

  static FHPrior defaults(Eigen::Index p, EffectFamily family = EffectFamily::Normal);
  void validate(Eigen::Index p) const;
};

struct ChainConfig {
  int burn_in = 100;
  int draws = 1000;
  int thin = 1;
  int chains = 1;

  static ChainConfig fh_defaults() { return {100, 1000, 1, 1}; }
  static ChainConfig pg_defaults() { return {1000, 1000, 1, 1}; }
  void validate() const;
};

/// Retained hyperparameter draws plus the Rao-Blackwellized conditional
/// moments of every theta_i given each draw.
struct FHDraws {
  Eigen::MatrixXd beta;  // S x p
  Eigen::VectorXd A;     // S
  RowMatrix u;           // S x m
  RowMatrix theta_tilde;
  RowMatrix sigma2_tilde;
  EffectFamily family = EffectFamily::Normal;
  DrawProvenance meta;

  Eigen::Index draws() const { return A.size(); }
  Eigen::Index areas() const { return u.cols(); }

  /// Column means of theta_tilde: the unconstrained posterior means.
  Eigen::VectorXd theta_mean() const;
  Eigen::VectorXd sigma2_mean() const;
  /// Var(theta_i | y) = E[sigma2~] + Var(theta~), over draws.
  Eigen::VectorXd posterior_variance() const;
};

struct ConditionalMoments {
  double theta_tilde = 0.0;
  double sigma2_tilde = 0.0;
};

/// Mean and variance of theta_i given (u_i, beta, A):
///   theta~ = y - D (y - x'beta) / (u A + D),   sigma2~ = u A D / (u A + D).
ConditionalMoments conditional_moments(double u, const Eigen::VectorXd& beta, double A, double y,
                                       const Eigen::VectorXd& x, double D);

/// Same, with the regression fit x'beta already evaluated.
ConditionalMoments conditional_moments_fitted(double u, double fitted, double A, double y,
                                              double D);

/// Builds FHDraws from stored (beta, A, u), recomputing the conditional
/// moments. The Gibbs sampler goes through this same path, so reloaded
/// draws reproduce the sampler's moments bit for bit.
FHDraws derive_fh_draws(const FHDataset& data, Eigen::MatrixXd beta, Eigen::VectorXd A, RowMatrix u,
                        EffectFamily family, DrawProvenance meta);

/// Full conditionals of the Gibbs sampler, exposed so each can be checked
/// against a quadrature of prior x likelihood.
namespace fh_conditionals {

Normal theta(double u, double fitted, double A, double y, double D);

/// IG(n0 + m/2, s0 + sum (theta_i - x_i'beta)^2 / (2 u_i)).
InverseGamma variance_A(const FHPrior& prior, const Eigen::VectorXd& theta,
                        const Eigen::VectorXd& fitted, const Eigen::VectorXd& u);

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

/// N(B^{-1} b, B^{-1}) with B = X'U^{-1}X / A + B0^{-1}, b = X'U^{-1}theta / A + B0^{-1} b0.
Gaussian beta(const FHPrior& prior, const Eigen::MatrixXd& X, const Eigen::VectorXd& theta,
              const Eigen::VectorXd& u, double A);

/// Laplace prior: 1/u_i | rest ~ InverseGaussian(lambda sqrt(A) / |r|, lambda^2),
/// r = theta_i - x_i'beta.
InverseGaussian laplace_inverse_u(double resid, double A, double lambda);

/// Horseshoe prior (u_i = l_i^2, l_i ~ C+(0, 1), written as u | a ~ IG(1/2, 1/a),
/// a ~ IG(1/2, 1)): u_i | a_i, rest ~ IG(1, 1/a_i + r^2 / (2A)).
InverseGamma horseshoe_u(double resid, double A, double aux);

/// a_i | u_i ~ IG(1, 1 + 1/u_i).
InverseGamma horseshoe_aux(double u);

}  // namespace fh_conditionals

/// Gibbs sampler cycling theta -> A -> beta -> u. Throws
/// SamplerDivergenceError on non-finite conditional parameters.
FHDraws gibbs_fh(const FHDataset& data, const FHPrior& prior, const ChainConfig& chain,
                 RngStream& rng);

/// `chain.chains` independent chains on streams (seed, 0..chains-1), run
/// concurrently and concatenated in chain order.
FHDraws gibbs_fh_chains(const FHDataset& data, const FHPrior& prior, const ChainConfig& chain,
                        std::uint64_t seed);

/// Closed-form tilting parameter for the mean constraint:
///   gamma = (C - sum w_i E[theta~_i]) / sum w_i^2 E[sigma2~_i].
double tilt_gamma_mean(const FHDraws& draws, const BenchmarkConstraint& bc);

/// theta^(B)_i = E[theta~_i] + gamma w_i E[sigma2~_i].
Eigen::VectorXd benchmarked_means(const FHDraws& draws, const BenchmarkConstraint& bc, double gamma);

/// `per_draw` variates per retained draw from N(theta~ + gamma w sigma2~, sigma2~).
DrawMatrix sample_tilted(const FHDraws& draws, const BenchmarkConstraint& bc, double gamma,
                         RngStream& rng, int per_draw = 1);

struct TwoMomentTilt {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  int iterations = 0;
  std::string method;  // "newton" or "nested-bisection"
  double residual_mean = 0.0;
  double residual_second = 0.0;
};

struct TwoMomentValues {
  double first = 0.0;   // E_g[sum w_i theta_i]
  double second = 0.0;  // E_g[sum w_i (theta_i - theta_hat_i)^2]
};

/// Draw-averaged constraint values of the two-moment tilted posterior.
TwoMomentValues two_moment_values(const FHDraws& draws, const BenchmarkConstraint& bc,
                                  const Eigen::VectorXd& theta_hat, double gamma1, double gamma2);

/// gamma2 must exceed this for every tilted variance to stay positive.
double two_moment_gamma2_floor(const FHDraws& draws, const BenchmarkConstraint& bc);

/// Solves the mean and second-moment constraints for (gamma1, gamma2).
/// Requires the Normal family and bc.H. Throws InfeasibleTargetError when
/// no admissible solution exists.
TwoMomentTilt tilt_two_moment(const FHDraws& draws, const BenchmarkConstraint& bc,
                              const Eigen::VectorXd& theta_hat);

/// Posterior means under the two-moment tilt.
Eigen::VectorXd two_moment_means(const FHDraws& draws, const BenchmarkConstraint& bc,
                                 const Eigen::VectorXd& theta_hat, const TwoMomentTilt& tilt);

DrawMatrix sample_two_moment(const FHDraws& draws, const BenchmarkConstraint& bc,
                             const Eigen::VectorXd& theta_hat, const TwoMomentTilt& tilt,
                             RngStream& rng, int per_draw = 1);

}  // namespace tiltbench
