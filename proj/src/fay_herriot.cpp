#include "tiltbench/fay_herriot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tiltbench/error.hpp"
#include "tiltbench/parallel.hpp"
#include "tiltbench/root_find.hpp"

namespace tiltbench {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void FHDataset::validate() const {
  const Index m = y.size();
  if (X.rows() != m || D.size() != m) throw DataError("FHDataset: y, X and D disagree on m");
  if (!area.empty() && static_cast<Index>(area.size()) != m) {
    throw DataError("FHDataset: area labels disagree on m");
  }
  if (m < X.cols() + 1) throw DataError("FHDataset: need m >= p + 1");
  if (!y.allFinite() || !X.allFinite() || !D.allFinite()) throw DataError("FHDataset: non-finite value");
  if ((D.array() <= 0.0).any()) throw DataError("FHDataset: sampling variances D_i must be > 0");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  if (qr.rank() < X.cols()) throw DataError("FHDataset: X is not of full column rank");
}

EffectFamily parse_effect_family(const std::string& s) {
  if (s == "normal" || s == "Normal" || s == "N") return EffectFamily::Normal;
  if (s == "laplace" || s == "Laplace" || s == "L") return EffectFamily::Laplace;
  if (s == "horseshoe" || s == "Horseshoe" || s == "H") return EffectFamily::Horseshoe;
  throw ConfigError("prior", "unknown effect family '" + s + "'");
}

std::string to_string(EffectFamily f) {
  switch (f) {
    case EffectFamily::Normal:
      return "normal";
    case EffectFamily::Laplace:
      return "laplace";
    case EffectFamily::Horseshoe:
      return "horseshoe";
  }
  return "unknown";
}

FHPrior FHPrior::defaults(Index p, EffectFamily family) {
  FHPrior prior;
  prior.family = family;
  prior.b0 = VectorXd::Zero(p);
  prior.B0 = 100.0 * MatrixXd::Identity(p, p);
  return prior;
}

void FHPrior::validate(Index p) const {
  if (!(n0 > 0.0) || !(s0 > 0.0)) throw ParameterDomainError("FHPrior: n0 and s0 must be > 0");
  if (b0.size() != p || B0.rows() != p || B0.cols() != p) {
    throw DataError("FHPrior: b0/B0 dimensions do not match p");
  }
  if (!B0.isApprox(B0.transpose())) throw ParameterDomainError("FHPrior: B0 must be symmetric");
  Eigen::LLT<MatrixXd> llt(B0);
  if (llt.info() != Eigen::Success) throw ParameterDomainError("FHPrior: B0 must be positive definite");
  if (family == EffectFamily::Laplace && !(lambda > 0.0)) {
    throw ParameterDomainError("FHPrior: Laplace lambda must be > 0");
  }
}

void ChainConfig::validate() const {
  if (burn_in < 0) throw ConfigError("burn_in", "must be >= 0");
  if (draws < 1) throw ConfigError("draws", "must be >= 1");
  if (thin < 1) throw ConfigError("thin", "must be >= 1");
  if (chains < 1) throw ConfigError("chains", "must be >= 1");
}

VectorXd FHDraws::theta_mean() const { return theta_tilde.colwise().mean().transpose(); }

VectorXd FHDraws::sigma2_mean() const { return sigma2_tilde.colwise().mean().transpose(); }

VectorXd FHDraws::posterior_variance() const {
  const VectorXd mu = theta_mean();
  const double S = static_cast<double>(draws());
  VectorXd spread = VectorXd::Zero(areas());
  for (Index s = 0; s < draws(); ++s) {
    spread += (theta_tilde.row(s).transpose() - mu).array().square().matrix();
  }
  return sigma2_mean() + spread / S;
}

ConditionalMoments conditional_moments_fitted(double u, double fitted, double A, double y, double D) {
  const double uA = u * A;
  const double denom = uA + D;
  return {y - D * (y - fitted) / denom, uA * D / denom};
}

ConditionalMoments conditional_moments(double u, const VectorXd& beta, double A, double y,
                                       const VectorXd& x, double D) {
  if (!(u > 0.0) || !(A > 0.0) || !(D > 0.0)) {
    throw ParameterDomainError("conditional_moments: u, A and D must be > 0");
  }
  return conditional_moments_fitted(u, x.dot(beta), A, y, D);
}

FHDraws derive_fh_draws(const FHDataset& data, MatrixXd beta, VectorXd A, RowMatrix u,
                        EffectFamily family, DrawProvenance meta) {
  const Index S = A.size();
  const Index m = data.m();
  if (beta.rows() != S || u.rows() != S || u.cols() != m || beta.cols() != data.p()) {
    throw DataError("derive_fh_draws: draw dimensions do not match the dataset");
  }
  FHDraws out;
  out.theta_tilde.resize(S, m);
  out.sigma2_tilde.resize(S, m);
  for (Index s = 0; s < S; ++s) {
    const VectorXd fitted = data.X * beta.row(s).transpose();
    for (Index i = 0; i < m; ++i) {
      const auto cm = conditional_moments_fitted(u(s, i), fitted[i], A[s], data.y[i], data.D[i]);
      out.theta_tilde(s, i) = cm.theta_tilde;
      out.sigma2_tilde(s, i) = cm.sigma2_tilde;
    }
  }
  out.beta = std::move(beta);
  out.A = std::move(A);
  out.u = std::move(u);
  out.family = family;
  out.meta = std::move(meta);
  return out;
}

namespace fh_conditionals {

Normal theta(double u, double fitted, double A, double y, double D) {
  const auto cm = conditional_moments_fitted(u, fitted, A, y, D);
  return {cm.theta_tilde, cm.sigma2_tilde};
}

InverseGamma variance_A(const FHPrior& prior, const VectorXd& theta, const VectorXd& fitted,
                        const VectorXd& u) {
  const double ss = ((theta - fitted).array().square() / u.array()).sum();
  return {prior.n0 + 0.5 * static_cast<double>(theta.size()), prior.s0 + 0.5 * ss};
}

Gaussian beta(const FHPrior& prior, const MatrixXd& X, const VectorXd& theta, const VectorXd& u,
              double A) {
  const MatrixXd B0inv = prior.B0.llt().solve(MatrixXd::Identity(X.cols(), X.cols()));
  const VectorXd uinv = u.cwiseInverse();
  const MatrixXd XtUinv = X.transpose() * uinv.asDiagonal();
  Gaussian g;
  g.precision = XtUinv * X / A + B0inv;
  const VectorXd b = XtUinv * theta / A + B0inv * prior.b0;
  g.mean = g.precision.llt().solve(b);
  return g;
}

InverseGaussian laplace_inverse_u(double resid, double A, double lambda) {
  const double r = std::max(std::abs(resid), 1e-150);
  return {lambda * std::sqrt(A) / r, lambda * lambda};
}

InverseGamma horseshoe_u(double resid, double A, double aux) {
  return {1.0, 1.0 / aux + 0.5 * resid * resid / A};
}

InverseGamma horseshoe_aux(double u) { return {1.0, 1.0 + 1.0 / u}; }

}  // namespace fh_conditionals

namespace {

void check_finite(double v, const char* what, std::int64_t iter) {
  if (!std::isfinite(v)) throw SamplerDivergenceError(std::string("gibbs_fh: non-finite ") + what, iter);
}

}  // namespace

FHDraws gibbs_fh(const FHDataset& data, const FHPrior& prior, const ChainConfig& chain,
                 RngStream& rng) {
  data.validate();
  prior.validate(data.p());
  chain.validate();

  const Index m = data.m();
  const Index p = data.p();
  const MatrixXd& X = data.X;

  // start from least squares with unit mixing variances
  VectorXd beta = X.colPivHouseholderQr().solve(data.y);
  VectorXd fitted = X * beta;
  double A = std::max(0.1, (data.y - fitted).squaredNorm() / static_cast<double>(m) - data.D.mean());
  VectorXd u = VectorXd::Ones(m);
  VectorXd aux = VectorXd::Ones(m);
  VectorXd theta = data.y;

  const int S = chain.draws;
  MatrixXd beta_keep(S, p);
  VectorXd A_keep(S);
  RowMatrix u_keep(S, m);

  const std::int64_t total = static_cast<std::int64_t>(chain.burn_in) +
                             static_cast<std::int64_t>(S) * chain.thin;
  int kept = 0;
  for (std::int64_t it = 0; it < total; ++it) {
    for (Index i = 0; i < m; ++i) {
      const Normal c = fh_conditionals::theta(u[i], fitted[i], A, data.y[i], data.D[i]);
      check_finite(c.mean, "theta mean", it);
      theta[i] = c.mean + std::sqrt(c.var) * rng.normal();
    }

    const InverseGamma ca = fh_conditionals::variance_A(prior, theta, fitted, u);
    check_finite(ca.scale, "A scale", it);
    A = 1.0 / sample_gamma(ca.shape, ca.scale, rng);
    if (!(A > 0.0) || !std::isfinite(A)) throw SamplerDivergenceError("gibbs_fh: A left (0, inf)", it);

    const auto cb = fh_conditionals::beta(prior, X, theta, u, A);
    Eigen::LLT<MatrixXd> llt(cb.precision);
    if (llt.info() != Eigen::Success || !cb.mean.allFinite()) {
      throw SamplerDivergenceError("gibbs_fh: beta precision not positive definite", it);
    }
    VectorXd z(p);
    for (Index k = 0; k < p; ++k) z[k] = rng.normal();
    beta = cb.mean + llt.matrixU().solve(z);
    fitted = X * beta;

    switch (prior.family) {
      case EffectFamily::Normal:
        break;
      case EffectFamily::Laplace:
        for (Index i = 0; i < m; ++i) {
          const auto ig = fh_conditionals::laplace_inverse_u(theta[i] - fitted[i], A, prior.lambda);
          u[i] = 1.0 / sample_inverse_gaussian(ig.mean, ig.shape, rng);
          check_finite(u[i], "u (Laplace)", it);
        }
        break;
      case EffectFamily::Horseshoe:
        for (Index i = 0; i < m; ++i) {
          const auto cu = fh_conditionals::horseshoe_u(theta[i] - fitted[i], A, aux[i]);
          u[i] = 1.0 / sample_gamma(cu.shape, cu.scale, rng);
          const auto ca2 = fh_conditionals::horseshoe_aux(u[i]);
          aux[i] = 1.0 / sample_gamma(ca2.shape, ca2.scale, rng);
          check_finite(u[i], "u (horseshoe)", it);
          check_finite(aux[i], "horseshoe auxiliary", it);
        }
        break;
    }
    if ((u.array() <= 0.0).any()) throw SamplerDivergenceError("gibbs_fh: u underflowed to 0", it);

    const std::int64_t post = it - chain.burn_in;
    if (post >= 0 && (post + 1) % chain.thin == 0) {
      beta_keep.row(kept) = beta.transpose();
      A_keep[kept] = A;
      u_keep.row(kept) = u.transpose();
      ++kept;
    }
  }

  DrawProvenance meta{"fay-herriot/" + to_string(prior.family), rng.seed(), chain.burn_in, chain.thin};
  return derive_fh_draws(data, std::move(beta_keep), std::move(A_keep), std::move(u_keep),
                         prior.family, std::move(meta));
}

FHDraws gibbs_fh_chains(const FHDataset& data, const FHPrior& prior, const ChainConfig& chain,
                        std::uint64_t seed) {
  chain.validate();
  const int n = chain.chains;
  std::vector<FHDraws> parts(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) num_threads(std::min(n, worker_count()))
  for (int c = 0; c < n; ++c) {
    try {
      RngStream rng(seed, static_cast<std::uint64_t>(c));
      parts[static_cast<std::size_t>(c)] = gibbs_fh(data, prior, chain, rng);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (n == 1) return std::move(parts.front());

  const Index S = chain.draws;
  const Index total = S * n;
  MatrixXd beta(total, data.p());
  VectorXd A(total);
  RowMatrix u(total, data.m());
  for (int c = 0; c < n; ++c) {
    const auto& part = parts[static_cast<std::size_t>(c)];
    beta.middleRows(c * S, S) = part.beta;
    A.segment(c * S, S) = part.A;
    u.middleRows(c * S, S) = part.u;
  }
  DrawProvenance meta = parts.front().meta;
  meta.seed = seed;
  return derive_fh_draws(data, std::move(beta), std::move(A), std::move(u), prior.family,
                         std::move(meta));
}

namespace {

void check_constraint(const FHDraws& draws, const BenchmarkConstraint& bc) {
  bc.validate();
  if (bc.m() != draws.areas()) throw DataError("constraint weights length != number of areas");
  if (draws.draws() < 1) throw DataError("empty draw set");
}

}  // namespace

double tilt_gamma_mean(const FHDraws& draws, const BenchmarkConstraint& bc) {
  check_constraint(draws, bc);
  const VectorXd tm = draws.theta_mean();
  const VectorXd sm = draws.sigma2_mean();
  const double denom = (bc.w.array().square() * sm.array()).sum();
  if (!(denom > 0.0)) throw InternalInvariantError("tilt_gamma_mean: non-positive denominator");
  return (bc.C - bc.w.dot(tm)) / denom;
}

VectorXd benchmarked_means(const FHDraws& draws, const BenchmarkConstraint& bc, double gamma) {
  check_constraint(draws, bc);
  return draws.theta_mean().array() + gamma * bc.w.array() * draws.sigma2_mean().array();
}

DrawMatrix sample_tilted(const FHDraws& draws, const BenchmarkConstraint& bc, double gamma,
                         RngStream& rng, int per_draw) {
  check_constraint(draws, bc);
  if (per_draw < 1) throw ParameterDomainError("sample_tilted: per_draw must be >= 1");
  const Index S = draws.draws();
  const Index m = draws.areas();
  RowMatrix out(S * per_draw, m);
  for (Index s = 0; s < S; ++s) {
    for (int k = 0; k < per_draw; ++k) {
      const Index row = s * per_draw + k;
      for (Index i = 0; i < m; ++i) {
        const double v = draws.sigma2_tilde(s, i);
        out(row, i) = draws.theta_tilde(s, i) + gamma * bc.w[i] * v + std::sqrt(v) * rng.normal();
      }
    }
  }
  DrawProvenance meta = draws.meta;
  meta.model += "+tilted";
  return DrawMatrix(std::move(out), std::move(meta));
}

// ---- two-moment tilting -------------------------------------------------

TwoMomentValues two_moment_values(const FHDraws& draws, const BenchmarkConstraint& bc,
                                  const VectorXd& theta_hat, double gamma1, double gamma2) {
  const Index S = draws.draws();
  const Index m = draws.areas();
  double first = 0.0;
  double second = 0.0;
  for (Index s = 0; s < S; ++s) {
    for (Index i = 0; i < m; ++i) {
      const double w = bc.w[i];
      const double v = draws.sigma2_tilde(s, i);
      const double den = 1.0 + gamma2 * w * v;
      const double mu = (draws.theta_tilde(s, i) + w * v * (gamma1 + gamma2 * theta_hat[i])) / den;
      const double dev = mu - theta_hat[i];
      first += w * mu;
      second += w * (v / den + dev * dev);
    }
  }
  return {first / static_cast<double>(S), second / static_cast<double>(S)};
}

double two_moment_gamma2_floor(const FHDraws& draws, const BenchmarkConstraint& bc) {
  double amax = 0.0;
  for (Index s = 0; s < draws.draws(); ++s) {
    for (Index i = 0; i < draws.areas(); ++i) {
      amax = std::max(amax, bc.w[i] * draws.sigma2_tilde(s, i));
    }
  }
  return -1.0 / amax;
}

namespace {

// gamma1 that meets the mean constraint exactly for a given gamma2; the
// first equation is linear in gamma1.
double gamma1_given_gamma2(const FHDraws& draws, const BenchmarkConstraint& bc,
                           const VectorXd& theta_hat, double gamma2) {
  const Index S = draws.draws();
  double base = 0.0;
  double slope = 0.0;
  for (Index s = 0; s < S; ++s) {
    for (Index i = 0; i < draws.areas(); ++i) {
      const double w = bc.w[i];
      const double a = w * draws.sigma2_tilde(s, i);
      const double den = 1.0 + gamma2 * a;
      base += w * (draws.theta_tilde(s, i) + a * gamma2 * theta_hat[i]) / den;
      slope += w * a / den;
    }
  }
  return (bc.C * static_cast<double>(S) - base) / slope;
}

}  // namespace

TwoMomentTilt tilt_two_moment(const FHDraws& draws, const BenchmarkConstraint& bc,
                              const VectorXd& theta_hat) {
  check_constraint(draws, bc);
  if (draws.family != EffectFamily::Normal) {
    throw ParameterDomainError("tilt_two_moment: only defined for the Normal effect family");
  }
  if (!bc.H) throw ParameterDomainError("tilt_two_moment: constraint has no second-moment target H");
  if (theta_hat.size() != draws.areas()) throw DataError("tilt_two_moment: theta_hat length != m");
  const double H = *bc.H;
  const double floor2 = two_moment_gamma2_floor(draws, bc);
  const double tol = 1e-9;
  const double scale1 = std::max(1.0, std::abs(bc.C));
  const double scale2 = std::max(1.0, H);

  auto resid = [&](double g1, double g2) {
    const auto v = two_moment_values(draws, bc, theta_hat, g1, g2);
    return Eigen::Vector2d((v.first - bc.C) / scale1, (v.second - H) / scale2);
  };
  auto converged = [&](const Eigen::Vector2d& r) { return r.cwiseAbs().maxCoeff() <= tol; };

  // damped Newton with a finite-difference Jacobian
  Eigen::Vector2d g(0.0, 0.0);
  Eigen::Vector2d r = resid(g[0], g[1]);
  int it = 0;
  for (; it < 100 && !converged(r); ++it) {
    Eigen::Matrix2d jac;
    for (int k = 0; k < 2; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(g[k]));
      Eigen::Vector2d gp = g;
      Eigen::Vector2d gm = g;
      gp[k] += h;
      gm[k] -= h;
      if (gm[1] <= floor2) gm[1] = g[1];
      jac.col(k) = (resid(gp[0], gp[1]) - resid(gm[0], gm[1])) / (gp[k] - gm[k]);
    }
    const Eigen::Vector2d step = jac.fullPivLu().solve(-r);
    if (!step.allFinite()) break;
    double damp = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k) {
      const Eigen::Vector2d trial = g + damp * step;
      if (trial[1] > floor2) {
        const Eigen::Vector2d rt = resid(trial[0], trial[1]);
        if (rt.allFinite() && rt.norm() < r.norm()) {
          g = trial;
          r = rt;
          moved = true;
          break;
        }
      }
      damp *= 0.5;
    }
    if (!moved) break;
  }
  if (converged(r)) {
    return {g[0], g[1], it, "newton", r[0] * scale1, r[1] * scale2};
  }

  // nested fallback: gamma1 closed form inside, bracket gamma2 outside
  auto outer = [&](double g2) {
    const double g1 = gamma1_given_gamma2(draws, bc, theta_hat, g2);
    return two_moment_values(draws, bc, theta_hat, g1, g2).second - H;
  };
  bool found = false;
  const RootResult root = solve_monotone(outer, /*increasing=*/false, 0.0, floor2, &found, 1e-14);
  if (!found) {
    std::ostringstream msg;
    msg << "two-moment tilt: no admissible (gamma1, gamma2) attains H = " << H;
    throw InfeasibleTargetError(msg.str(), std::nan(""), std::nan(""));
  }
  const double g2 = root.root;
  const double g1 = gamma1_given_gamma2(draws, bc, theta_hat, g2);
  const Eigen::Vector2d rf = resid(g1, g2);
  if (!converged(rf)) {
    std::ostringstream msg;
    msg << "two-moment tilt: solver stalled with relative residuals " << rf[0] << ", " << rf[1];
    throw InfeasibleTargetError(msg.str(), std::nan(""), std::nan(""));
  }
  return {g1, g2, it + root.iterations, "nested-bisection", rf[0] * scale1, rf[1] * scale2};
}

VectorXd two_moment_means(const FHDraws& draws, const BenchmarkConstraint& bc,
                          const VectorXd& theta_hat, const TwoMomentTilt& tilt) {
  const Index S = draws.draws();
  VectorXd out = VectorXd::Zero(draws.areas());
  for (Index s = 0; s < S; ++s) {
    for (Index i = 0; i < draws.areas(); ++i) {
      const double a = bc.w[i] * draws.sigma2_tilde(s, i);
      const double den = 1.0 + tilt.gamma2 * a;
      out[i] += (draws.theta_tilde(s, i) + a * (tilt.gamma1 + tilt.gamma2 * theta_hat[i])) / den;
    }
  }
  return out / static_cast<double>(S);
}

DrawMatrix sample_two_moment(const FHDraws& draws, const BenchmarkConstraint& bc,
                             const VectorXd& theta_hat, const TwoMomentTilt& tilt, RngStream& rng,
                             int per_draw) {
  if (per_draw < 1) throw ParameterDomainError("sample_two_moment: per_draw must be >= 1");
  const Index S = draws.draws();
  const Index m = draws.areas();
  RowMatrix out(S * per_draw, m);
  for (Index s = 0; s < S; ++s) {
    for (int k = 0; k < per_draw; ++k) {
      for (Index i = 0; i < m; ++i) {
        const double v = draws.sigma2_tilde(s, i);
        const double a = bc.w[i] * v;
        const double den = 1.0 + tilt.gamma2 * a;
        const double mu = (draws.theta_tilde(s, i) + a * (tilt.gamma1 + tilt.gamma2 * theta_hat[i])) / den;
        out(s * per_draw + k, i) = mu + std::sqrt(v / den) * rng.normal();
      }
    }
  }
  DrawProvenance meta = draws.meta;
  meta.model += "+two-moment";
  return DrawMatrix(std::move(out), std::move(meta));
}

}  // namespace tiltbench
