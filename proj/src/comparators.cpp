#include "tiltbench/comparators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tiltbench/error.hpp"

namespace tiltbench {

using Eigen::Index;
using Eigen::VectorXd;

namespace {

double log_mean_exp(const VectorXd& a) {
  const double top = a.maxCoeff();
  return top + std::log((a.array() - top).exp().mean());
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void check_bc(const BenchmarkConstraint& bc, Index m) {
  bc.validate();
  if (bc.m() != m) throw DataError("constraint weights length != number of areas");
}

}  // namespace

void PosteriorSummary::validate() const {
  if (mean.size() != var.size() || mean.size() == 0) throw DataError("PosteriorSummary: shape mismatch");
  if (!mean.allFinite() || !var.allFinite()) throw DataError("PosteriorSummary: non-finite entries");
  if ((var.array() <= 0.0).any()) throw ParameterDomainError("PosteriorSummary: variances must be > 0");
}

PosteriorSummary summarize(const FHDraws& draws) {
  return {draws.theta_mean(), draws.posterior_variance()};
}

PosteriorSummary summarize(const PGDraws& draws) {
  return {draws.lambda_mean(), draws.posterior_variance()};
}

VectorXd constrained_bayes(const PosteriorSummary& summary, const VectorXd& phi,
                           const BenchmarkConstraint& bc) {
  summary.validate();
  check_bc(bc, summary.mean.size());
  if (phi.size() != summary.mean.size()) throw DataError("constrained_bayes: phi length != m");
  if (!phi.allFinite() || (phi.array() <= 0.0).any()) {
    throw ParameterDomainError("constrained_bayes: phi_i must be finite and > 0");
  }
  const VectorXd direction = bc.w.cwiseQuotient(phi);
  const double s = bc.w.dot(direction);
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw ParameterDomainError("constrained_bayes: degenerate adjustment direction");
  }
  const double gap = bc.C - bc.w.dot(summary.mean);
  return summary.mean + direction * (gap / s);
}

MdiResult mdi_normal(const PosteriorSummary& summary, const BenchmarkConstraint& bc) {
  summary.validate();
  check_bc(bc, summary.mean.size());
  MdiResult out;
  const double denom = (bc.w.array().square() * summary.var.array()).sum();
  out.gamma = (bc.C - bc.w.dot(summary.mean)) / denom;
  out.mean = summary.mean.array() + out.gamma * bc.w.array() * summary.var.array();
  out.var = summary.var;
  return out;
}

KlEstimate clamp_kl(double raw) {
  KlEstimate out;
  if (std::isnan(raw)) {
    out.value = raw;
    out.warnings.push_back("KL estimate is NaN");
    return out;
  }
  if (raw < 0.0) {
    if (raw < -1e-8) {
      std::ostringstream msg;
      msg << "negative Monte Carlo KL estimate " << raw << " clamped to 0";
      out.warnings.push_back(msg.str());
    }
    out.value = 0.0;
    return out;
  }
  out.value = raw;
  return out;
}

KlEstimate kl_tilted(const FHDraws& draws, const BenchmarkConstraint& bc, double gamma) {
  check_bc(bc, draws.areas());
  const Index S = draws.draws();
  // a_s = gamma sum w theta~ + gamma^2/2 sum w^2 sigma2~ ; KL = lme(a) - gamma sum w theta_hat
  //     = lme(a - mean a) + gamma^2/2 mean_s sum w^2 sigma2~
  VectorXd a(S);
  double quad = 0.0;
  const VectorXd w2 = bc.w.array().square();
  for (Index s = 0; s < S; ++s) {
    const double q = 0.5 * gamma * gamma * draws.sigma2_tilde.row(s).dot(w2);
    a[s] = gamma * draws.theta_tilde.row(s).dot(bc.w) + q;
    quad += q;
  }
  quad /= static_cast<double>(S);
  const VectorXd centred = a.array() - a.mean();
  return clamp_kl(log_mean_exp(centred) + quad);
}

KlEstimate kl_tilted(const FHDraws& draws, const BenchmarkConstraint& bc, const VectorXd& theta_hat,
                     const TwoMomentTilt& tilt) {
  check_bc(bc, draws.areas());
  const Index S = draws.draws();
  VectorXd log_z(S);
  VectorXd gap(S);  // log Z_s - E_s[log tilt factor] >= 0
  for (Index s = 0; s < S; ++s) {
    double lz = 0.0;
    double elt = 0.0;
    for (Index i = 0; i < draws.areas(); ++i) {
      const double mu = draws.theta_tilde(s, i);
      const double v = draws.sigma2_tilde(s, i);
      const double b = tilt.gamma1 * bc.w[i];
      const double a = tilt.gamma2 * bc.w[i];
      const double c = theta_hat[i];
      // int exp(b t - a (t - c)^2 / 2) N(t; mu, v) dt, written around mu
      const double d = mu - c;
      const double lin = b - a * d;  // slope of the exponent at t = mu
      const double one_av = 1.0 + a * v;
      lz += -0.5 * std::log(one_av) + 0.5 * lin * lin * v / one_av + b * mu - 0.5 * a * d * d;
      elt += b * mu - 0.5 * a * (v + d * d);
    }
    log_z[s] = lz;
    gap[s] = lz - elt;
  }
  const VectorXd centred = log_z.array() - log_z.mean();
  return clamp_kl(log_mean_exp(centred) + gap.mean());
}

KlEstimate kl_tilted(const PGDraws& draws, const BenchmarkConstraint& bc, double gamma) {
  check_bc(bc, draws.areas());
  const Index S = draws.draws();
  VectorXd a(S);
  double gap = 0.0;
  for (Index s = 0; s < S; ++s) {
    double as = 0.0;
    double gs = 0.0;
    for (Index i = 0; i < draws.areas(); ++i) {
      const double x = gamma * bc.w[i] / draws.rate(s, i);
      const double l1p = std::log1p(x);
      as -= draws.shape(s, i) * l1p;
      gs += draws.shape(s, i) * (x - l1p);
    }
    a[s] = as;
    gap += gs;
  }
  gap /= static_cast<double>(S);
  const VectorXd centred = a.array() - a.mean();
  return clamp_kl(log_mean_exp(centred) + gap);
}

KlEstimate kl_normal_approx(const FHDraws& draws, const BenchmarkConstraint& bc, const MdiResult& mdi) {
  check_bc(bc, draws.areas());
  const Index S = draws.draws();
  const Index m = draws.areas();
  constexpr int kBins = 400;
  constexpr double kReach = 7.0;
  // the normal approximation being tilted: same variances, pre-tilt means
  const VectorXd q_mean = mdi.mean.array() - mdi.gamma * bc.w.array() * mdi.var.array();

  double marginal = 0.0;
  std::vector<double> edges(kBins + 1);
  std::vector<double> fcdf(kBins + 1);
  for (Index i = 0; i < m; ++i) {
    const double qsd = std::sqrt(mdi.var[i]);
    double lo = q_mean[i] - kReach * qsd;
    double hi = q_mean[i] + kReach * qsd;
    for (Index s = 0; s < S; ++s) {
      const double sd = std::sqrt(draws.sigma2_tilde(s, i));
      lo = std::min(lo, draws.theta_tilde(s, i) - kReach * sd);
      hi = std::max(hi, draws.theta_tilde(s, i) + kReach * sd);
    }
    const double width = (hi - lo) / kBins;
    for (int k = 0; k <= kBins; ++k) {
      edges[static_cast<std::size_t>(k)] = lo + width * k;
      fcdf[static_cast<std::size_t>(k)] = 0.0;
    }
    for (Index s = 0; s < S; ++s) {
      const double mu = draws.theta_tilde(s, i);
      const double inv_sd = 1.0 / std::sqrt(draws.sigma2_tilde(s, i));
      for (int k = 0; k <= kBins; ++k) {
        fcdf[static_cast<std::size_t>(k)] += normal_cdf((edges[static_cast<std::size_t>(k)] - mu) * inv_sd);
      }
    }
    for (auto& v : fcdf) v /= static_cast<double>(S);

    auto add = [&](double p, double q) {
      if (p > 0.0 && q > 0.0) marginal += p * std::log(p / q);
    };
    const double qz_lo = (lo - q_mean[i]) / qsd;
    const double qz_hi = (hi - q_mean[i]) / qsd;
    add(fcdf.front(), normal_cdf(qz_lo));
    add(1.0 - fcdf.back(), normal_cdf(-qz_hi));
    for (int k = 0; k < kBins; ++k) {
      const double p = fcdf[static_cast<std::size_t>(k + 1)] - fcdf[static_cast<std::size_t>(k)];
      const double za = (edges[static_cast<std::size_t>(k)] - q_mean[i]) / qsd;
      const double zb = (edges[static_cast<std::size_t>(k + 1)] - q_mean[i]) / qsd;
      // upper tail differences lose less precision on the right side
      const double q = zb <= 0.0 ? normal_cdf(zb) - normal_cdf(za) : normal_cdf(-za) - normal_cdf(-zb);
      add(p, q);
    }
  }
  const double tilt = 0.5 * mdi.gamma * mdi.gamma * (bc.w.array().square() * mdi.var.array()).sum();
  return clamp_kl(marginal + tilt);
}

}  // namespace tiltbench
