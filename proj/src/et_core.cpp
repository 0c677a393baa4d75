#include "tiltbench/et_core.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <sstream>

#include "tiltbench/error.hpp"
#include "tiltbench/parallel.hpp"
#include "tiltbench/root_find.hpp"

namespace tiltbench {

using Eigen::Index;
using Eigen::VectorXd;

NEFModelSpec NEFModelSpec::gaussian(VectorXd xi) {
  NEFModelSpec spec;
  spec.psi = [](double t) { return 0.5 * t * t; };
  spec.psi_prime = [](double t) { return t; };
  spec.xi = std::move(xi);
  return spec;
}

NEFModelSpec NEFModelSpec::poisson_log(VectorXd xi) {
  NEFModelSpec spec;
  spec.psi = [](double t) { return std::exp(t); };
  spec.psi_prime = [](double t) { return std::exp(t); };
  spec.xi = std::move(xi);
  return spec;
}

void NEFModelSpec::validate(Index m) const {
  if (!psi_prime) throw ParameterDomainError("NEFModelSpec: psi_prime is not set");
  if (xi.size() != 0) {
    if (xi.size() != m) throw DataError("NEFModelSpec: xi length does not match area count");
    if ((xi.array() <= 0.0).any()) throw ParameterDomainError("NEFModelSpec: xi_i must be > 0");
  }
}

void BenchmarkConstraint::validate() const {
  if (w.size() == 0) throw DataError("BenchmarkConstraint: empty weight vector");
  if (!w.allFinite() || (w.array() <= 0.0).any()) {
    throw ParameterDomainError("BenchmarkConstraint: all weights must be finite and > 0");
  }
  if (!std::isfinite(C)) throw ParameterDomainError("BenchmarkConstraint: C must be finite");
  if (H && !(*H > 0.0 && std::isfinite(*H))) {
    throw ParameterDomainError("BenchmarkConstraint: H must be finite and > 0");
  }
}

std::vector<std::string> BenchmarkConstraint::advisories() const {
  std::vector<std::string> out;
  const double m = static_cast<double>(w.size());
  if (w.size() > 0 && w.maxCoeff() > 10.0 / m) {
    std::ostringstream msg;
    msg << "max weight " << w.maxCoeff() << " exceeds 10/m = " << 10.0 / m
        << "; tilting error bounds assume weights of order 1/m";
    out.push_back(msg.str());
  }
  return out;
}

BenchmarkConstraint BenchmarkConstraint::proportional(const VectorXd& n, double C) {
  if ((n.array() <= 0.0).any()) throw ParameterDomainError("proportional weights need n_i > 0");
  BenchmarkConstraint bc;
  bc.w = n / n.sum();
  bc.C = C;
  return bc;
}

DrawMatrix::DrawMatrix(RowMatrix theta, DrawProvenance meta)
    : DrawMatrix(std::move(theta), VectorXd(), std::move(meta)) {}

DrawMatrix::DrawMatrix(RowMatrix theta, VectorXd log_weight, DrawProvenance meta)
    : theta_(std::move(theta)), log_weight_(std::move(log_weight)), meta_(std::move(meta)) {
  if (theta_.rows() < 1 || theta_.cols() < 1) throw DataError("DrawMatrix: need S >= 1 and m >= 1");
  if (!theta_.allFinite()) throw DataError("DrawMatrix: draws must be finite");
  if (log_weight_.size() == 0) log_weight_ = VectorXd::Zero(theta_.rows());
  if (log_weight_.size() != theta_.rows()) throw DataError("DrawMatrix: log_weight length != S");
}

namespace serial {

VectorXd weighted_statistic(const DrawMatrix& draws, const NEFModelSpec& spec,
                            const BenchmarkConstraint& bc) {
  const RowMatrix& th = draws.theta();
  VectorXd t(th.rows());
  for (Index s = 0; s < th.rows(); ++s) {
    double acc = 0.0;
    for (Index i = 0; i < th.cols(); ++i) acc += bc.w[i] * spec.psi_prime(th(s, i));
    t[s] = acc;
  }
  return t;
}

VectorXd snis_log_weights(const VectorXd& stat, double gamma) {
  VectorXd lw = gamma * stat;
  return lw.array() - lw.maxCoeff();
}

}  // namespace serial

namespace {

void check_shapes(const DrawMatrix& draws, const NEFModelSpec& spec, const BenchmarkConstraint& bc) {
  bc.validate();
  spec.validate(draws.areas());
  if (bc.m() != draws.areas()) throw DataError("constraint weights length != number of areas");
}

}  // namespace

VectorXd weighted_statistic(const DrawMatrix& draws, const NEFModelSpec& spec,
                            const BenchmarkConstraint& bc) {
  check_shapes(draws, spec, bc);
  const RowMatrix& th = draws.theta();
  const Index S = th.rows();
  const Index m = th.cols();
  VectorXd t(S);
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (Index s = 0; s < S; ++s) {
    double acc = 0.0;
    for (Index i = 0; i < m; ++i) acc += bc.w[i] * spec.psi_prime(th(s, i));
    t[s] = acc;
  }
  return t;
}

VectorXd snis_log_weights(const VectorXd& stat, double gamma) {
  const Index S = stat.size();
  VectorXd lw(S);
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (Index s = 0; s < S; ++s) lw[s] = gamma * stat[s];
  const double top = lw.maxCoeff();
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (Index s = 0; s < S; ++s) lw[s] -= top;
  return lw;
}

VectorXd snis_log_weights(const DrawMatrix& draws, const NEFModelSpec& spec,
                          const BenchmarkConstraint& bc, double gamma) {
  return snis_log_weights(weighted_statistic(draws, spec, bc), gamma);
}

VectorXd normalize_log_weights(const VectorXd& log_weight) {
  const double top = log_weight.maxCoeff();
  VectorXd w = (log_weight.array() - top).exp();
  return w / w.sum();
}

double ess(const VectorXd& normalized_weights) {
  return 1.0 / normalized_weights.squaredNorm();
}

TiltSolution solve_tilt_snis(const DrawMatrix& draws, const NEFModelSpec& spec,
                             const BenchmarkConstraint& bc) {
  const VectorXd stat = weighted_statistic(draws, spec, bc);
  const double lo = stat.minCoeff();
  const double hi = stat.maxCoeff();
  if (!(bc.C > lo && bc.C < hi)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "benchmark target C = " << bc.C << " is outside the attainable SNIS range (" << lo
        << ", " << hi << ")";
    throw InfeasibleTargetError(msg.str(), lo, hi);
  }
  // Centering keeps gamma * stat moderate; weights are unaffected.
  const double centre = stat.mean();
  const VectorXd centred = stat.array() - centre;
  const double target = bc.C - centre;
  auto snis_mean = [&](double gamma) {
    const VectorXd w = normalize_log_weights(gamma * centred);
    return w.dot(centred);
  };
  auto f = [&](double gamma) { return snis_mean(gamma) - target; };

  bool found = false;
  const RootResult root = solve_monotone(f, /*increasing=*/true, 0.0,
                                         -std::numeric_limits<double>::infinity(), &found);
  if (!found) {
    throw InfeasibleTargetError("SNIS tilt: no sign change found while bracketing gamma", lo, hi);
  }

  TiltSolution out;
  out.gamma = root.root;
  out.weights = normalize_log_weights(snis_log_weights(stat, out.gamma));
  out.ess = ess(out.weights);
  out.residual = out.weights.dot(stat) - bc.C;
  if (out.ess < 0.05 * static_cast<double>(stat.size())) {
    std::ostringstream msg;
    msg << "degenerate importance weights: ESS " << out.ess << " < 0.05 * S";
    out.warnings.push_back(msg.str());
  }
  return out;
}

VectorXd snis_means(const DrawMatrix& draws, const NEFModelSpec& spec, const VectorXd& weights) {
  const RowMatrix& th = draws.theta();
  VectorXd mu = VectorXd::Zero(th.cols());
  for (Index s = 0; s < th.rows(); ++s) {
    for (Index i = 0; i < th.cols(); ++i) mu[i] += weights[s] * spec.psi_prime(th(s, i));
  }
  return mu;
}

VectorXd snis_standard_errors(const DrawMatrix& draws, const NEFModelSpec& spec,
                              const VectorXd& weights) {
  const VectorXd mu = snis_means(draws, spec, weights);
  const RowMatrix& th = draws.theta();
  VectorXd acc = VectorXd::Zero(th.cols());
  for (Index s = 0; s < th.rows(); ++s) {
    const double w2 = weights[s] * weights[s];
    for (Index i = 0; i < th.cols(); ++i) {
      const double d = spec.psi_prime(th(s, i)) - mu[i];
      acc[i] += w2 * d * d;
    }
  }
  return acc.array().sqrt();
}

DrawMatrix resample(const DrawMatrix& draws, const VectorXd& weights, RngStream& rng, Index T) {
  if (T < 1) throw ParameterDomainError("resample: T must be >= 1");
  if (weights.size() != draws.draws()) throw DataError("resample: weights length != S");
  std::vector<double> cum(static_cast<std::size_t>(weights.size()));
  double total = 0.0;
  for (Index s = 0; s < weights.size(); ++s) {
    total += weights[s];
    cum[static_cast<std::size_t>(s)] = total;
  }
  RowMatrix out(T, draws.areas());
  for (Index t = 0; t < T; ++t) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) --it;
    const Index s = static_cast<Index>(it - cum.begin());
    out.row(t) = draws.theta().row(s);
  }
  DrawProvenance meta = draws.meta();
  meta.model += "+resampled";
  return DrawMatrix(std::move(out), VectorXd::Zero(T), std::move(meta));
}

MultiTiltSolution solve_tilt_snis_multi(const RowMatrix& stats, const VectorXd& targets, double tol,
                                        int max_iter) {
  const Index S = stats.rows();
  const Index J = stats.cols();
  if (S < 1 || J < 1 || targets.size() != J) throw DataError("solve_tilt_snis_multi: shape mismatch");
  if (!stats.allFinite() || !targets.allFinite()) {
    throw DataError("solve_tilt_snis_multi: non-finite input");
  }
  const Eigen::RowVectorXd centre = stats.colwise().mean();
  const RowMatrix centred = stats.rowwise() - centre;
  const VectorXd goal = targets - centre.transpose();

  auto residual = [&](const VectorXd& g) {
    const VectorXd w = normalize_log_weights(centred * g);
    return VectorXd(centred.transpose() * w - goal);
  };
  auto scale = [&](const VectorXd& r) {
    double worst = 0.0;
    for (Index j = 0; j < J; ++j) {
      worst = std::max(worst, std::abs(r[j]) / std::max(1.0, std::abs(targets[j])));
    }
    return worst;
  };

  MultiTiltSolution out;
  VectorXd g = VectorXd::Zero(J);
  VectorXd r = residual(g);
  int it = 0;
  for (; it < max_iter && scale(r) > tol; ++it) {
    Eigen::MatrixXd jac(J, J);
    for (Index k = 0; k < J; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(g[k]));
      VectorXd gp = g;
      VectorXd gm = g;
      gp[k] += h;
      gm[k] -= h;
      jac.col(k) = (residual(gp) - residual(gm)) / (2.0 * h);
    }
    const VectorXd step = jac.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) break;
    double damp = 1.0;
    const double base = r.norm();
    VectorXd trial;
    VectorXd rtrial;
    for (int k = 0; k < 60; ++k) {
      trial = g + damp * step;
      rtrial = residual(trial);
      if (rtrial.allFinite() && rtrial.norm() < base) break;
      damp *= 0.5;
    }
    if (!(rtrial.norm() < base)) break;
    g = trial;
    r = rtrial;
  }
  out.gamma = g;
  out.iterations = it;
  out.weights = normalize_log_weights(stats * g);
  out.ess = ess(out.weights);
  out.max_residual = scale(r);
  if (out.max_residual > tol) {
    std::ostringstream msg;
    msg << "multi-constraint tilt: targets not attained (max relative residual "
        << out.max_residual << ")";
    throw InfeasibleTargetError(msg.str(), std::nan(""), std::nan(""));
  }
  if (out.ess < 0.05 * static_cast<double>(S)) {
    out.warnings.push_back("degenerate importance weights: ESS < 0.05 * S");
  }
  return out;
}

}  // namespace tiltbench
