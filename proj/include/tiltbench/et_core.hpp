#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tiltbench/rng.hpp"

namespace tiltbench {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Natural-exponential-family hierarchy: cumulant psi, its derivative (the
/// mean map, strictly increasing) and the per-area dispersions xi_i.
struct NEFModelSpec {
  std::function<double(double)> psi;
  std::function<double(double)> psi_prime;
  Eigen::VectorXd xi;

  /// Normal with unit natural scale: psi(t) = t^2/2, psi'(t) = t.
  static NEFModelSpec gaussian(Eigen::VectorXd xi);
  /// Poisson on the log scale: psi(t) = psi'(t) = exp(t).
  static NEFModelSpec poisson_log(Eigen::VectorXd xi);

  void validate(Eigen::Index m) const;
};

/// Linear benchmark: sum_i w_i E[psi'(theta_i)] = C, optionally with a
/// weighted second-moment target H.
struct BenchmarkConstraint {
  Eigen::VectorXd w;
  double C = 0.0;
  std::optional<double> H;

  Eigen::Index m() const { return w.size(); }

  /// Throws ParameterDomainError unless all w_i > 0, C is finite and H,
  /// when present, is positive.
  void validate() const;

  /// Soft checks; currently flags max_i w_i > 10/m.
  std::vector<std::string> advisories() const;

  /// w_i = n_i / sum(n), the usual internal-benchmark weighting.
  static BenchmarkConstraint proportional(const Eigen::VectorXd& n, double C);
};

struct DrawProvenance {
  std::string model;
  std::uint64_t seed = 0;
  int burn_in = 0;
  int thin = 1;
};

/// S x m matrix of draws with per-row log-weights. Immutable once built.
class DrawMatrix {
 public:
  explicit DrawMatrix(RowMatrix theta, DrawProvenance meta = {});
  DrawMatrix(RowMatrix theta, Eigen::VectorXd log_weight, DrawProvenance meta);

  const RowMatrix& theta() const { return theta_; }
  const Eigen::VectorXd& log_weight() const { return log_weight_; }
  const DrawProvenance& meta() const { return meta_; }
  Eigen::Index draws() const { return theta_.rows(); }
  Eigen::Index areas() const { return theta_.cols(); }

 private:
  RowMatrix theta_;
  Eigen::VectorXd log_weight_;
  DrawProvenance meta_;
};

/// Per-draw benchmark statistic t_s = sum_i w_i psi'(theta_i^(s)).
/// Parallel over draws; each row is summed serially, so the result does
/// not depend on the worker count.
Eigen::VectorXd weighted_statistic(const DrawMatrix& draws, const NEFModelSpec& spec,
                                   const BenchmarkConstraint& bc);

/// log omega^(s)(gamma) = gamma * t_s, shifted so the maximum is zero.
Eigen::VectorXd snis_log_weights(const DrawMatrix& draws, const NEFModelSpec& spec,
                                 const BenchmarkConstraint& bc, double gamma);

/// Same, from precomputed statistics.
Eigen::VectorXd snis_log_weights(const Eigen::VectorXd& stat, double gamma);

/// exp(log_weight) rescaled to sum to one.
Eigen::VectorXd normalize_log_weights(const Eigen::VectorXd& log_weight);

/// Kish effective sample size 1 / sum(w^2) of normalized weights.
double ess(const Eigen::VectorXd& normalized_weights);

struct TiltSolution {
  double gamma = 0.0;
  Eigen::VectorXd weights;  // normalized
  double ess = 0.0;
  double residual = 0.0;    // SNIS estimate minus C
  std::vector<std::string> warnings;
};

/// Solves the self-normalized importance-sampling moment equation
///   sum_s w~_s(gamma) t_s = C
/// for gamma. Throws InfeasibleTargetError if C is not strictly inside
/// (min_s t_s, max_s t_s). Attaches a warning when ESS < 0.05 S.
TiltSolution solve_tilt_snis(const DrawMatrix& draws, const NEFModelSpec& spec,
                             const BenchmarkConstraint& bc);

/// Weighted per-area means of psi'(theta_i) under normalized weights.
Eigen::VectorXd snis_means(const DrawMatrix& draws, const NEFModelSpec& spec,
                           const Eigen::VectorXd& normalized_weights);

/// Delta-method Monte Carlo standard errors of snis_means.
Eigen::VectorXd snis_standard_errors(const DrawMatrix& draws, const NEFModelSpec& spec,
                                     const Eigen::VectorXd& normalized_weights);

/// Multinomial resampling of T rows; output log-weights are zero.
DrawMatrix resample(const DrawMatrix& draws, const Eigen::VectorXd& normalized_weights,
                    RngStream& rng, Eigen::Index T);

struct MultiTiltSolution {
  Eigen::VectorXd gamma;
  Eigen::VectorXd weights;
  double ess = 0.0;
  double max_residual = 0.0;
  int iterations = 0;
  std::vector<std::string> warnings;
};

/// J simultaneous moment constraints: find gamma in R^J with
///   sum_s w~_s(gamma) stats(s, j) = targets(j),  w~_s ∝ exp(gamma . stats(s, :)).
/// Damped Newton with a central-difference Jacobian.
MultiTiltSolution solve_tilt_snis_multi(const RowMatrix& stats, const Eigen::VectorXd& targets,
                                        double tol = 1e-10, int max_iter = 200);

namespace serial {

// Single-threaded reference kernels, kept for equivalence tests and the
// benchmark target.
Eigen::VectorXd weighted_statistic(const DrawMatrix& draws, const NEFModelSpec& spec,
                                   const BenchmarkConstraint& bc);
Eigen::VectorXd snis_log_weights(const Eigen::VectorXd& stat, double gamma);

}  // namespace serial

}  // namespace tiltbench
