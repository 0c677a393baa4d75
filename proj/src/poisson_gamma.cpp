#include "tiltbench/poisson_gamma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/trigamma.hpp>

#include "tiltbench/error.hpp"
#include "tiltbench/parallel.hpp"
#include "tiltbench/root_find.hpp"

namespace tiltbench {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void PGDataset::validate() const {
  const Index m = z.size();
  if (n.size() != m || X.rows() != m) throw DataError("PGDataset: z, n and X disagree on m");
  if (!area.empty() && static_cast<Index>(area.size()) != m) {
    throw DataError("PGDataset: area labels disagree on m");
  }
  if (m < X.cols() + 1) throw DataError("PGDataset: need m >= p + 1");
  if (!z.allFinite() || !n.allFinite() || !X.allFinite()) throw DataError("PGDataset: non-finite value");
  for (Index i = 0; i < m; ++i) {
    if (z[i] < 0.0 || z[i] != std::floor(z[i])) throw DataError("PGDataset: z_i must be integers >= 0");
    if (!(n[i] > 0.0)) throw DataError("PGDataset: n_i must be > 0");
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  if (qr.rank() < X.cols()) throw DataError("PGDataset: X is not of full column rank");
}

PGPrior PGPrior::defaults(Index p) {
  PGPrior prior;
  prior.b0 = VectorXd::Zero(p);
  prior.B0 = 100.0 * MatrixXd::Identity(p, p);
  return prior;
}

void PGPrior::validate(Index p) const {
  if (b0.size() != p || B0.rows() != p || B0.cols() != p) {
    throw DataError("PGPrior: b0/B0 dimensions do not match p");
  }
  Eigen::LLT<MatrixXd> llt(B0);
  if (llt.info() != Eigen::Success) throw ParameterDomainError("PGPrior: B0 must be positive definite");
  if (!(a_nu > 0.0) || !(b_nu > 0.0)) throw ParameterDomainError("PGPrior: nu prior shape/rate must be > 0");
}

VectorXd PGDraws::lambda_mean() const {
  return shape.cwiseQuotient(rate).colwise().mean().transpose();
}

VectorXd PGDraws::posterior_variance() const {
  const RowMatrix cm = shape.cwiseQuotient(rate);
  const VectorXd mu = cm.colwise().mean().transpose();
  const RowMatrix cv = shape.cwiseQuotient(rate.cwiseProduct(rate));
  VectorXd spread = VectorXd::Zero(areas());
  for (Index s = 0; s < draws(); ++s) {
    spread += (cm.row(s).transpose() - mu).array().square().matrix();
  }
  return cv.colwise().mean().transpose() + spread / static_cast<double>(draws());
}

PGDraws derive_pg_draws(const PGDataset& data, MatrixXd beta, VectorXd nu, DrawProvenance meta) {
  const Index S = nu.size();
  const Index m = data.m();
  if (beta.rows() != S || beta.cols() != data.p()) {
    throw DataError("derive_pg_draws: draw dimensions do not match the dataset");
  }
  PGDraws out;
  out.shape.resize(S, m);
  out.rate.resize(S, m);
  for (Index s = 0; s < S; ++s) {
    const VectorXd eta = data.X * beta.row(s).transpose();
    for (Index i = 0; i < m; ++i) {
      const Gamma g = lambda_conditional(data.z[i], data.n[i], nu[s], std::exp(eta[i]));
      out.shape(s, i) = g.shape;
      out.rate(s, i) = g.rate;
    }
  }
  out.beta = std::move(beta);
  out.nu = std::move(nu);
  out.meta = std::move(meta);
  return out;
}

Gamma lambda_conditional(double z, double n, double nu, double m_i) {
  return {z + nu * m_i, n + nu};
}

namespace {

double log_gamma_density(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_mvn_kernel(const VectorXd& beta, const VectorXd& b0, const Eigen::LLT<MatrixXd>& B0) {
  const VectorXd d = beta - b0;
  return -0.5 * d.dot(B0.solve(d));
}

// Approximate inverse Fisher information of beta given the lambdas,
// sum_i (nu m_i)^2 trigamma(nu m_i) x_i x_i' + B0^{-1}; the proposal shape.
MatrixXd beta_proposal_cov(const PGDataset& data, const PGPrior& prior, const VectorXd& beta,
                           double nu) {
  const Index p = data.p();
  MatrixXd info = prior.B0.llt().solve(MatrixXd::Identity(p, p));
  const VectorXd eta = data.X * beta;
  for (Index i = 0; i < data.m(); ++i) {
    const double a = std::max(nu * std::exp(eta[i]), 1e-8);
    const double wgt = a * a * boost::math::trigamma(a);
    info += wgt * data.X.row(i).transpose() * data.X.row(i);
  }
  return info.llt().solve(MatrixXd::Identity(p, p));
}

}  // namespace

double pg_hyper_log_posterior(const PGDataset& data, const PGPrior& prior, const VectorXd& lambda,
                              const VectorXd& beta, double nu) {
  if (!(nu > 0.0)) return -std::numeric_limits<double>::infinity();
  const Eigen::LLT<MatrixXd> llt(prior.B0);
  double lp = log_mvn_kernel(beta, prior.b0, llt);
  lp += (prior.a_nu - 1.0) * std::log(nu) - prior.b_nu * nu;
  const VectorXd eta = data.X * beta;
  for (Index i = 0; i < data.m(); ++i) {
    lp += log_gamma_density(lambda[i], nu * std::exp(eta[i]), nu);
  }
  return lp;
}

PGDraws gibbs_pg(const PGDataset& data, const PGPrior& prior, const ChainConfig& chain, RngStream& rng) {
  data.validate();
  prior.validate(data.p());
  chain.validate();

  const Index m = data.m();
  const Index p = data.p();
  const Eigen::LLT<MatrixXd> B0llt(prior.B0);

  VectorXd lambda = (data.z.array() + 0.5) / data.n.array();
  VectorXd beta = data.X.colPivHouseholderQr().solve(VectorXd(lambda.array().log()));
  double nu = 1.0;

  // log target restricted to the terms that move with (beta, nu)
  auto log_target = [&](const VectorXd& b, double v) {
    double lp = log_mvn_kernel(b, prior.b0, B0llt);
    lp += (prior.a_nu - 1.0) * std::log(v) - prior.b_nu * v;
    const VectorXd eta = data.X * b;
    for (Index i = 0; i < m; ++i) lp += log_gamma_density(lambda[i], v * std::exp(eta[i]), v);
    return lp;
  };

  MatrixXd prop_chol = beta_proposal_cov(data, prior, beta, nu).llt().matrixL();
  double log_scale_beta = std::log(2.38 / std::sqrt(static_cast<double>(p)));
  double log_scale_nu = std::log(0.5);
  constexpr double kTarget = 0.3;
  constexpr int kBatch = 50;
  int batch_acc_beta = 0;
  int batch_acc_nu = 0;
  int batch_count = 0;
  int batches = 0;
  long post_acc_beta = 0;
  long post_acc_nu = 0;
  long post_iters = 0;

  const int S = chain.draws;
  MatrixXd beta_keep(S, p);
  VectorXd nu_keep(S);
  const std::int64_t total = static_cast<std::int64_t>(chain.burn_in) +
                             static_cast<std::int64_t>(S) * chain.thin;
  int kept = 0;
  constexpr double kTiny = std::numeric_limits<double>::min();

  for (std::int64_t it = 0; it < total; ++it) {
    const VectorXd eta = data.X * beta;
    for (Index i = 0; i < m; ++i) {
      const Gamma g = lambda_conditional(data.z[i], data.n[i], nu, std::exp(eta[i]));
      if (!std::isfinite(g.shape) || !(g.shape > 0.0)) {
        throw SamplerDivergenceError("gibbs_pg: non-finite lambda conditional", it);
      }
      lambda[i] = std::max(sample_gamma(g.shape, g.rate, rng), kTiny);
    }

    double current = log_target(beta, nu);
    if (!std::isfinite(current)) throw SamplerDivergenceError("gibbs_pg: non-finite log posterior", it);

    // beta: joint random walk
    {
      VectorXd z(p);
      for (Index k = 0; k < p; ++k) z[k] = rng.normal();
      const VectorXd proposal = beta + std::exp(log_scale_beta) * (prop_chol * z);
      const double cand = log_target(proposal, nu);
      if (std::isfinite(cand) && std::log(rng.uniform()) < cand - current) {
        beta = proposal;
        current = cand;
        ++batch_acc_beta;
        if (it >= chain.burn_in) ++post_acc_beta;
      }
    }
    // nu: random walk on log nu (Jacobian term log nu' - log nu)
    {
      const double step = std::exp(log_scale_nu) * rng.normal();
      const double proposal = nu * std::exp(step);
      const double cand = log_target(beta, proposal);
      if (std::isfinite(cand) && std::log(rng.uniform()) < cand - current + step) {
        nu = proposal;
        ++batch_acc_nu;
        if (it >= chain.burn_in) ++post_acc_nu;
      }
    }

    if (it < chain.burn_in) {
      if (++batch_count == kBatch) {
        ++batches;
        const double rate = 1.0 / std::sqrt(static_cast<double>(batches));
        const double delta = std::min(0.5, rate);
        log_scale_beta += delta * (static_cast<double>(batch_acc_beta) / kBatch - kTarget) * 2.0;
        log_scale_nu += delta * (static_cast<double>(batch_acc_nu) / kBatch - kTarget) * 2.0;
        batch_acc_beta = batch_acc_nu = batch_count = 0;
      }
      if (it == chain.burn_in / 2) {
        prop_chol = beta_proposal_cov(data, prior, beta, nu).llt().matrixL();
      }
    } else {
      ++post_iters;
    }

    const std::int64_t post = it - chain.burn_in;
    if (post >= 0 && (post + 1) % chain.thin == 0) {
      beta_keep.row(kept) = beta.transpose();
      nu_keep[kept] = nu;
      ++kept;
    }
  }

  DrawProvenance meta{"poisson-gamma", rng.seed(), chain.burn_in, chain.thin};
  PGDraws out = derive_pg_draws(data, std::move(beta_keep), std::move(nu_keep), std::move(meta));
  out.accept_beta = post_iters > 0 ? static_cast<double>(post_acc_beta) / post_iters : 0.0;
  out.accept_nu = post_iters > 0 ? static_cast<double>(post_acc_nu) / post_iters : 0.0;
  for (const auto& [label, rate] : {std::pair{"beta", out.accept_beta}, std::pair{"nu", out.accept_nu}}) {
    if (rate < 0.05 || rate > 0.95) {
      std::ostringstream msg;
      msg << "MH acceptance rate for " << label << " is " << rate << ", outside [0.05, 0.95]";
      out.warnings.push_back(msg.str());
    }
  }
  return out;
}

PGDraws gibbs_pg_chains(const PGDataset& data, const PGPrior& prior, const ChainConfig& chain,
                        std::uint64_t seed) {
  chain.validate();
  const int n = chain.chains;
  std::vector<PGDraws> parts(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) num_threads(std::min(n, worker_count()))
  for (int c = 0; c < n; ++c) {
    try {
      RngStream rng(seed, static_cast<std::uint64_t>(c));
      parts[static_cast<std::size_t>(c)] = gibbs_pg(data, prior, chain, rng);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (n == 1) return std::move(parts.front());

  const Index S = chain.draws;
  MatrixXd beta(S * n, data.p());
  VectorXd nu(S * n);
  double acc_b = 0.0;
  double acc_n = 0.0;
  std::vector<std::string> warnings;
  for (int c = 0; c < n; ++c) {
    const auto& part = parts[static_cast<std::size_t>(c)];
    beta.middleRows(c * S, S) = part.beta;
    nu.segment(c * S, S) = part.nu;
    acc_b += part.accept_beta / n;
    acc_n += part.accept_nu / n;
    for (const auto& w : part.warnings) warnings.push_back("chain " + std::to_string(c) + ": " + w);
  }
  DrawProvenance meta = parts.front().meta;
  meta.seed = seed;
  PGDraws out = derive_pg_draws(data, std::move(beta), std::move(nu), std::move(meta));
  out.accept_beta = acc_b;
  out.accept_nu = acc_n;
  out.warnings = std::move(warnings);
  return out;
}

namespace {

void check_constraint(const PGDraws& draws, const BenchmarkConstraint& bc) {
  bc.validate();
  if (bc.m() != draws.areas()) throw DataError("constraint weights length != number of areas");
  if (draws.draws() < 1) throw DataError("empty draw set");
}

}  // namespace

double pg_tilted_total(const PGDraws& draws, const BenchmarkConstraint& bc, double gamma) {
  double acc = 0.0;
  for (Index s = 0; s < draws.draws(); ++s) {
    for (Index i = 0; i < draws.areas(); ++i) {
      acc += bc.w[i] * draws.shape(s, i) / (draws.rate(s, i) + gamma * bc.w[i]);
    }
  }
  return acc / static_cast<double>(draws.draws());
}

double pg_gamma_floor(const PGDraws& draws, const BenchmarkConstraint& bc) {
  double lo = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < draws.areas(); ++i) {
    lo = std::min(lo, draws.rate.col(i).minCoeff() / bc.w[i]);
  }
  return -lo;
}

double solve_gamma_pg(const PGDraws& draws, const BenchmarkConstraint& bc) {
  check_constraint(draws, bc);
  const double floor = pg_gamma_floor(draws, bc);
  if (!(bc.C > 0.0)) {
    throw InfeasibleTargetError("Poisson-gamma benchmark target C must be > 0", 0.0,
                                std::numeric_limits<double>::infinity());
  }
  auto f = [&](double g) { return pg_tilted_total(draws, bc, g) - bc.C; };
  bool found = false;
  const RootResult root = solve_monotone(f, /*increasing=*/false, 0.0, floor, &found);
  if (!found) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "benchmark target C = " << bc.C
        << " is not attainable with positive tilted rates (gamma floor " << floor << ")";
    throw InfeasibleTargetError(msg.str(), 0.0, std::numeric_limits<double>::infinity());
  }
  return root.root;
}

VectorXd benchmarked_means_pg(const PGDraws& draws, const BenchmarkConstraint& bc, double gamma) {
  check_constraint(draws, bc);
  VectorXd out = VectorXd::Zero(draws.areas());
  for (Index s = 0; s < draws.draws(); ++s) {
    for (Index i = 0; i < draws.areas(); ++i) {
      out[i] += draws.shape(s, i) / (draws.rate(s, i) + gamma * bc.w[i]);
    }
  }
  return out / static_cast<double>(draws.draws());
}

DrawMatrix sample_tilted_pg(const PGDraws& draws, const BenchmarkConstraint& bc, double gamma,
                            RngStream& rng, int per_draw) {
  check_constraint(draws, bc);
  if (per_draw < 1) throw ParameterDomainError("sample_tilted_pg: per_draw must be >= 1");
  const Index S = draws.draws();
  const Index m = draws.areas();
  RowMatrix out(S * per_draw, m);
  for (Index s = 0; s < S; ++s) {
    for (Index i = 0; i < m; ++i) {
      const double rate = draws.rate(s, i) + gamma * bc.w[i];
      if (!(rate > 0.0)) {
        throw InfeasibleTargetError("sample_tilted_pg: non-positive tilted rate", 0.0,
                                    std::numeric_limits<double>::infinity());
      }
    }
    for (int k = 0; k < per_draw; ++k) {
      for (Index i = 0; i < m; ++i) {
        const double rate = draws.rate(s, i) + gamma * bc.w[i];
        out(s * per_draw + k, i) =
            std::max(sample_gamma(draws.shape(s, i), rate, rng), std::numeric_limits<double>::min());
      }
    }
  }
  DrawProvenance meta = draws.meta;
  meta.model += "+tilted";
  return DrawMatrix(std::move(out), std::move(meta));
}

}  // namespace tiltbench
