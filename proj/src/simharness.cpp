#include "tiltbench/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include <omp.h>

#include "tiltbench/comparators.hpp"
#include "tiltbench/distributions.hpp"
#include "tiltbench/error.hpp"
#include "tiltbench/parallel.hpp"

namespace tiltbench {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kFixedCovariateStream = 0xC0FFEE0000000000ULL;
constexpr double kIdentityTol = 1e-8;

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

int group_of(Index i, Index m) { return static_cast<int>((i * 5) / m); }

// x1 ~ N(0,1), x2 ~ Ber(0.5); x2 is redrawn until it is not constant so the
// design keeps full rank at small m
MatrixXd draw_design(Index m, RngStream& rng) {
  MatrixXd X(m, 3);
  X.col(0).setOnes();
  for (Index i = 0; i < m; ++i) X(i, 1) = rng.normal();
  for (;;) {
    for (Index i = 0; i < m; ++i) X(i, 2) = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const double s = X.col(2).sum();
    if (s > 0.0 && s < static_cast<double>(m)) break;
  }
  return X;
}

MatrixXd scenario_design(const SimScenario& scn, int rep, RngStream& data_rng) {
  if (scn.redraw_covariates) return draw_design(scn.m, data_rng);
  (void)rep;
  RngStream fixed(scn.base_seed, kFixedCovariateStream);
  return draw_design(scn.m, fixed);
}

std::vector<std::string> area_labels(Index m) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) out.push_back("a" + std::to_string(i + 1));
  return out;
}

VectorXd group_n(const SimScenario& scn) {
  VectorXd n(scn.m);
  for (Index i = 0; i < scn.m; ++i) n[i] = scn.group_n[static_cast<std::size_t>(group_of(i, scn.m))];
  return n;
}

double relative_gap(const VectorXd& est, const BenchmarkConstraint& bc) {
  return std::abs(bc.w.dot(est) - bc.C) / std::max(1.0, std::abs(bc.C));
}

double mse(const VectorXd& est, const VectorXd& truth) { return (est - truth).squaredNorm() / est.size(); }

struct Intervals {
  VectorXd lo;
  VectorXd hi;
};

Intervals draw_intervals(const DrawMatrix& dm) {
  const Index m = dm.areas();
  Intervals out{VectorXd(m), VectorXd(m)};
  std::vector<double> col(static_cast<std::size_t>(dm.draws()));
  for (Index i = 0; i < m; ++i) {
    for (Index s = 0; s < dm.draws(); ++s) col[static_cast<std::size_t>(s)] = dm.theta()(s, i);
    const auto [lo, hi] = equal_tailed_interval(col);
    out.lo[i] = lo;
    out.hi[i] = hi;
  }
  return out;
}

Intervals normal_intervals(const VectorXd& mean, const VectorXd& var) {
  constexpr double z = 1.959963984540054;
  const VectorXd sd = var.cwiseSqrt();
  return {mean - z * sd, mean + z * sd};
}

void score_intervals(ReplicationMetrics& out, Estimator e, const Intervals& iv, const VectorXd& truth,
                     bool want_cp, bool want_al) {
  const Index m = truth.size();
  auto& row = out.value[static_cast<std::size_t>(e)];
  if (want_cp) {
    int hit = 0;
    for (Index i = 0; i < m; ++i) hit += (truth[i] >= iv.lo[i] && truth[i] <= iv.hi[i]) ? 1 : 0;
    row[static_cast<std::size_t>(Metric::CP)] = 100.0 * hit / static_cast<double>(m);
  }
  if (want_al) row[static_cast<std::size_t>(Metric::AL)] = (iv.hi - iv.lo).mean();
}

bool has(const std::vector<Estimator>& v, Estimator e) { return std::find(v.begin(), v.end(), e) != v.end(); }
bool has(const std::vector<Metric>& v, Metric k) { return std::find(v.begin(), v.end(), k) != v.end(); }

void set(ReplicationMetrics& out, Estimator e, Metric k, double v) {
  out.value[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)] = v;
}

void run_fh(const SimScenario& scn, int rep, const std::vector<Estimator>& est,
            const std::vector<Metric>& met, ReplicationMetrics& out) {
  const auto streams = replication_streams(rep);
  const FHSample sample = gen_fh(scn, rep);
  const FHDataset& data = sample.data;
  const VectorXd w = sample.n / sample.n.sum();
  const BenchmarkConstraint bc{w, w.dot(data.y), std::nullopt};

  FHPrior prior = FHPrior::defaults(data.p(), scn.prior);
  RngStream chain_rng(scn.base_seed, streams.chain);
  const FHDraws draws = gibbs_fh(data, prior, scn.chain, chain_rng);
  RngStream iv_rng(scn.base_seed, streams.intervals);

  const bool want_mse = has(met, Metric::MSE);
  const bool want_cp = has(met, Metric::CP);
  const bool want_al = has(met, Metric::AL);
  const bool want_kl = has(met, Metric::KL);
  const VectorXd& truth = sample.theta_true;
  const PosteriorSummary summary = summarize(draws);

  if (has(est, Estimator::HB)) {
    if (want_mse) set(out, Estimator::HB, Metric::MSE, mse(summary.mean, truth));
    if (want_cp || want_al) {
      const DrawMatrix dm = sample_tilted(draws, bc, 0.0, iv_rng);
      score_intervals(out, Estimator::HB, draw_intervals(dm), truth, want_cp, want_al);
    }
    if (want_kl) set(out, Estimator::HB, Metric::KL, 0.0);
  }
  if (has(est, Estimator::ET)) {
    const double gamma = tilt_gamma_mean(draws, bc);
    out.gamma = gamma;
    const VectorXd et = benchmarked_means(draws, bc, gamma);
    out.identity_error = std::max(out.identity_error, relative_gap(et, bc));
    if (want_mse) set(out, Estimator::ET, Metric::MSE, mse(et, truth));
    if (want_cp || want_al) {
      const DrawMatrix dm = sample_tilted(draws, bc, gamma, iv_rng);
      score_intervals(out, Estimator::ET, draw_intervals(dm), truth, want_cp, want_al);
    }
    if (want_kl) set(out, Estimator::ET, Metric::KL, kl_tilted(draws, bc, gamma).value);
  }
  if (has(est, Estimator::MDI)) {
    const MdiResult mdi = mdi_normal(summary, bc);
    out.identity_error = std::max(out.identity_error, relative_gap(mdi.mean, bc));
    if (want_mse) set(out, Estimator::MDI, Metric::MSE, mse(mdi.mean, truth));
    if (want_cp || want_al) {
      score_intervals(out, Estimator::MDI, normal_intervals(mdi.mean, mdi.var), truth, want_cp, want_al);
    }
    if (want_kl) set(out, Estimator::MDI, Metric::KL, kl_normal_approx(draws, bc, mdi).value);
  }
  if (has(est, Estimator::WL1)) {
    const VectorXd wl = constrained_bayes(summary, summary.var.cwiseInverse(), bc);
    out.identity_error = std::max(out.identity_error, relative_gap(wl, bc));
    if (want_mse) set(out, Estimator::WL1, Metric::MSE, mse(wl, truth));
  }
  if (has(est, Estimator::WL2)) {
    const VectorXd wl = constrained_bayes(summary, data.D.cwiseInverse(), bc);
    out.identity_error = std::max(out.identity_error, relative_gap(wl, bc));
    if (want_mse) set(out, Estimator::WL2, Metric::MSE, mse(wl, truth));
  }
}

void run_pg(const SimScenario& scn, int rep, const std::vector<Estimator>& est,
            const std::vector<Metric>& met, ReplicationMetrics& out) {
  const auto streams = replication_streams(rep);
  const PGSample sample = gen_pg(scn, rep);
  const PGDataset& data = sample.data;
  const VectorXd w = data.n / data.n.sum();
  const BenchmarkConstraint bc{w, w.dot(data.y()), std::nullopt};

  const PGPrior prior = PGPrior::defaults(data.p());
  RngStream chain_rng(scn.base_seed, streams.chain);
  const PGDraws draws = gibbs_pg(data, prior, scn.chain, chain_rng);
  RngStream iv_rng(scn.base_seed, streams.intervals);

  const bool want_mse = has(met, Metric::MSE);
  const bool want_cp = has(met, Metric::CP);
  const bool want_al = has(met, Metric::AL);
  const bool want_kl = has(met, Metric::KL);
  const VectorXd& truth = sample.lambda_true;
  const PosteriorSummary summary = summarize(draws);

  if (has(est, Estimator::HB)) {
    if (want_mse) set(out, Estimator::HB, Metric::MSE, mse(summary.mean, truth));
    if (want_cp || want_al) {
      const DrawMatrix dm = sample_tilted_pg(draws, bc, 0.0, iv_rng);
      score_intervals(out, Estimator::HB, draw_intervals(dm), truth, want_cp, want_al);
    }
    if (want_kl) set(out, Estimator::HB, Metric::KL, 0.0);
  }
  if (has(est, Estimator::ET)) {
    const double gamma = solve_gamma_pg(draws, bc);
    out.gamma = gamma;
    const VectorXd et = benchmarked_means_pg(draws, bc, gamma);
    out.identity_error = std::max(out.identity_error, relative_gap(et, bc));
    if (want_mse) set(out, Estimator::ET, Metric::MSE, mse(et, truth));
    if (want_cp || want_al) {
      const DrawMatrix dm = sample_tilted_pg(draws, bc, gamma, iv_rng);
      score_intervals(out, Estimator::ET, draw_intervals(dm), truth, want_cp, want_al);
    }
    if (want_kl) set(out, Estimator::ET, Metric::KL, kl_tilted(draws, bc, gamma).value);
  }
  if (has(est, Estimator::MDI)) {
    const MdiResult mdi = mdi_normal(summary, bc);
    out.identity_error = std::max(out.identity_error, relative_gap(mdi.mean, bc));
    if (want_mse) set(out, Estimator::MDI, Metric::MSE, mse(mdi.mean, truth));
    if (want_cp || want_al) {
      score_intervals(out, Estimator::MDI, normal_intervals(mdi.mean, mdi.var), truth, want_cp, want_al);
    }
  }
  if (has(est, Estimator::WL1)) {
    const VectorXd wl = constrained_bayes(summary, w, bc);
    out.identity_error = std::max(out.identity_error, relative_gap(wl, bc));
    if (want_mse) set(out, Estimator::WL1, Metric::MSE, mse(wl, truth));
  }
  if (has(est, Estimator::WL2)) {
    const VectorXd wl = constrained_bayes(summary, w.cwiseQuotient(summary.mean), bc);
    out.identity_error = std::max(out.identity_error, relative_gap(wl, bc));
    if (want_mse) set(out, Estimator::WL2, Metric::MSE, mse(wl, truth));
  }
}

struct Kahan {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

MetricsTable drive(const SimScenario& scn, const std::vector<Estimator>& est,
                   const std::vector<Metric>& met, int threads) {
  scn.validate();
  std::vector<ReplicationMetrics> reps(static_cast<std::size_t>(scn.reps));
  std::exception_ptr fatal;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int r = 0; r < scn.reps; ++r) {
    try {
      reps[static_cast<std::size_t>(r)] = run_replication(scn, r, est, met);
    } catch (...) {
#pragma omp critical(tiltbench_study_fatal)
      if (!fatal) fatal = std::current_exception();
    }
  }
  if (fatal) std::rethrow_exception(fatal);
  return aggregate(scn, est, met, std::move(reps));
}

}  // namespace

std::string to_string(ModelKind v) { return v == ModelKind::FH ? "fh" : "pg"; }

std::string to_string(Scenario v) {
  switch (v) {
    case Scenario::I: return "I";
    case Scenario::II: return "II";
    case Scenario::III: return "III";
  }
  return "?";
}

std::string to_string(Estimator v) {
  switch (v) {
    case Estimator::HB: return "HB";
    case Estimator::ET: return "ET";
    case Estimator::MDI: return "MDI";
    case Estimator::WL1: return "WL1";
    case Estimator::WL2: return "WL2";
  }
  return "?";
}

std::string to_string(Metric v) {
  switch (v) {
    case Metric::MSE: return "MSE";
    case Metric::CP: return "CP";
    case Metric::AL: return "AL";
    case Metric::KL: return "KL";
  }
  return "?";
}

ModelKind parse_model(const std::string& s) {
  const auto u = upper(s);
  if (u == "FH") return ModelKind::FH;
  if (u == "PG") return ModelKind::PG;
  throw ConfigError("model", "unknown model '" + s + "' (expected fh or pg)");
}

Scenario parse_scenario(const std::string& s) {
  const auto u = upper(s);
  if (u == "I" || u == "1") return Scenario::I;
  if (u == "II" || u == "2") return Scenario::II;
  if (u == "III" || u == "3") return Scenario::III;
  throw ConfigError("scenario", "unknown scenario '" + s + "' (expected I, II or III)");
}

Estimator parse_estimator(const std::string& s) {
  const auto u = upper(s);
  for (auto e : kAllEstimators) {
    if (to_string(e) == u) return e;
  }
  throw ConfigError("estimator", "unknown estimator '" + s + "'");
}

Metric parse_metric(const std::string& s) {
  const auto u = upper(s);
  for (auto k : kAllMetrics) {
    if (to_string(k) == u) return k;
  }
  throw ConfigError("metric", "unknown metric '" + s + "'");
}

SimScenario SimScenario::fh(Scenario scn, EffectFamily prior, int m, int reps, std::uint64_t seed) {
  SimScenario out;
  out.model = ModelKind::FH;
  out.scenario = scn;
  out.m = m;
  out.reps = reps;
  out.base_seed = seed;
  out.beta_true = (VectorXd(3) << -3.0, 0.5, 1.0).finished();
  out.prior = prior;
  out.chain = ChainConfig::fh_defaults();
  return out;
}

SimScenario SimScenario::pg(Scenario scn, int m, int reps, std::uint64_t seed) {
  SimScenario out;
  out.model = ModelKind::PG;
  out.scenario = scn;
  out.m = m;
  out.reps = reps;
  out.base_seed = seed;
  out.beta_true = (VectorXd(3) << 1.0, 0.5, 1.0).finished();
  out.chain = ChainConfig::pg_defaults();
  return out;
}

void SimScenario::validate() const {
  if (m < 5 || m % 5 != 0) throw ConfigError("m", "m must be a positive multiple of 5");
  if (reps < 1) throw ConfigError("reps", "reps must be >= 1");
  if (beta_true.size() != 3 || !beta_true.allFinite()) {
    throw ConfigError("beta_true", "beta_true must hold 3 finite values (intercept, x1, x2)");
  }
  for (double d : group_D) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("group_D", "group_D entries must be > 0");
  }
  for (double n : group_n) {
    if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError("group_n", "group_n entries must be > 0");
  }
  if (model == ModelKind::FH && !(A_true > 0.0)) throw ConfigError("A_true", "A_true must be > 0");
  if (model == ModelKind::PG && !(nu_true > 0.0)) throw ConfigError("nu_true", "nu_true must be > 0");
  if (!(t_dof > 2.0)) throw ConfigError("t_dof", "t_dof must exceed 2 for a finite variance");
  chain.validate();
}

ReplicationStreams replication_streams(int rep) {
  const auto r = static_cast<std::uint64_t>(rep);
  return {3 * r, 3 * r + 1, 3 * r + 2};
}

FHSample gen_fh(const SimScenario& scn, int rep) {
  if (scn.model != ModelKind::FH) throw ConfigError("model", "gen_fh needs an FH scenario");
  scn.validate();
  RngStream rng(scn.base_seed, replication_streams(rep).data);
  const Index m = scn.m;
  FHSample out;
  out.data.X = scenario_design(scn, rep, rng);
  out.data.D.resize(m);
  out.n = group_n(scn);
  for (Index i = 0; i < m; ++i) out.data.D[i] = scn.group_D[static_cast<std::size_t>(group_of(i, m))];
  out.data.area = area_labels(m);

  const double t_scale = std::sqrt((scn.t_dof - 2.0) / scn.t_dof);
  const double sd_a = std::sqrt(scn.A_true);
  out.theta_true.resize(m);
  out.data.y.resize(m);
  const VectorXd fit = out.data.X * scn.beta_true;
  for (Index i = 0; i < m; ++i) {
    double v = 0.0;
    switch (scn.scenario) {
      case Scenario::I: v = rng.normal(); break;
      case Scenario::II: v = rng.uniform() < 0.3 ? 0.0 : rng.normal(); break;
      case Scenario::III: v = t_scale * draw(StudentT{scn.t_dof}, rng); break;
    }
    out.theta_true[i] = fit[i] + sd_a * v;
  }
  for (Index i = 0; i < m; ++i) {
    out.data.y[i] = out.theta_true[i] + std::sqrt(out.data.D[i]) * rng.normal();
  }
  return out;
}

PGSample gen_pg(const SimScenario& scn, int rep) {
  if (scn.model != ModelKind::PG) throw ConfigError("model", "gen_pg needs a PG scenario");
  scn.validate();
  RngStream rng(scn.base_seed, replication_streams(rep).data);
  const Index m = scn.m;
  const double nu = scn.nu_true;
  PGSample out;
  out.data.X = scenario_design(scn, rep, rng);
  out.data.n = group_n(scn);
  out.data.area = area_labels(m);
  out.lambda_true.resize(m);
  out.data.z.resize(m);
  const VectorXd mu = (out.data.X * scn.beta_true).array().exp();
  for (Index i = 0; i < m; ++i) {
    double lam = 0.0;
    switch (scn.scenario) {
      case Scenario::I: lam = sample_gamma(nu * mu[i], nu, rng); break;
      case Scenario::II: {
        const double k = rng.uniform() < 0.2 ? 3.0 : 1.0;
        lam = sample_gamma(k * nu * mu[i], nu, rng);
        break;
      }
      case Scenario::III: lam = draw(LogNormal{std::log(mu[i]), nu / 20.0}, rng); break;
    }
    out.lambda_true[i] = lam;
  }
  for (Index i = 0; i < m; ++i) {
    out.data.z[i] = sample_poisson(out.lambda_true[i] * out.data.n[i], rng);
  }
  return out;
}

std::pair<double, double> equal_tailed_interval(std::vector<double> column, double level) {
  if (column.empty()) throw DataError("equal_tailed_interval: no draws");
  if (!(level > 0.0 && level < 1.0)) throw ParameterDomainError("equal_tailed_interval: level must be in (0,1)");
  std::sort(column.begin(), column.end());
  // linear interpolation between order statistics (R type 7)
  auto q = [&](double p) {
    const double h = p * static_cast<double>(column.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, column.size() - 1);
    return column[lo] + (h - static_cast<double>(lo)) * (column[hi] - column[lo]);
  };
  const double tail = 0.5 * (1.0 - level);
  return {q(tail), q(1.0 - tail)};
}

ReplicationMetrics run_replication(const SimScenario& scn, int rep, const std::vector<Estimator>& estimators,
                                   const std::vector<Metric>& metrics) {
  ReplicationMetrics out;
  out.rep = rep;
  for (auto& row : out.value) row.fill(kNaN);
  try {
    if (scn.model == ModelKind::FH) {
      run_fh(scn, rep, estimators, metrics, out);
    } else {
      run_pg(scn, rep, estimators, metrics, out);
    }
    out.ok = true;
  } catch (const SamplerDivergenceError& e) {
    out.ok = false;
    out.error = e.what();
    for (auto& row : out.value) row.fill(kNaN);
  }
  if (out.ok && out.identity_error > kIdentityTol) {
    std::ostringstream msg;
    msg << "replication " << rep << ": benchmark identity off by " << out.identity_error;
    throw InternalInvariantError(msg.str());
  }
  return out;
}

std::optional<MetricCell> MetricsTable::find(Estimator e, Metric k) const {
  for (const auto& c : cells) {
    if (c.estimator == e && c.metric == k) return c;
  }
  return std::nullopt;
}

double MetricsTable::value(Estimator e, Metric k) const {
  const auto c = find(e, k);
  if (!c) throw DataError("MetricsTable: no cell " + to_string(e) + "/" + to_string(k));
  return c->value;
}

double MetricsTable::mc_se(Estimator e, Metric k) const {
  const auto c = find(e, k);
  if (!c) throw DataError("MetricsTable: no cell " + to_string(e) + "/" + to_string(k));
  return c->mc_se;
}

MetricsTable aggregate(const SimScenario& scn, const std::vector<Estimator>& estimators,
                       const std::vector<Metric>& metrics, std::vector<ReplicationMetrics> reps) {
  std::sort(reps.begin(), reps.end(), [](const auto& a, const auto& b) { return a.rep < b.rep; });
  MetricsTable t;
  t.model = scn.model;
  t.scenario = scn.scenario;
  t.prior = scn.prior;
  t.reps_requested = static_cast<int>(reps.size());
  for (const auto& r : reps) {
    if (r.ok) {
      ++t.reps_used;
      t.max_identity_error = std::max(t.max_identity_error, r.identity_error);
    } else {
      ++t.reps_failed;
    }
  }
  if (t.reps_requested > 0 && 100 * t.reps_failed > t.reps_requested) {
    std::ostringstream msg;
    msg << t.reps_failed << " of " << t.reps_requested << " replications diverged (limit 1%)";
    throw SamplerDivergenceError(msg.str(), -1);
  }
  for (auto e : estimators) {
    for (auto k : metrics) {
      Kahan sum;
      int n = 0;
      for (const auto& r : reps) {
        const double v = r.ok ? r.get(e, k) : kNaN;
        if (std::isnan(v)) continue;
        sum.add(v);
        ++n;
      }
      if (n == 0) continue;
      const double mean = sum.sum / n;
      Kahan ss;
      for (const auto& r : reps) {
        const double v = r.ok ? r.get(e, k) : kNaN;
        if (std::isnan(v)) continue;
        ss.add((v - mean) * (v - mean));
      }
      const double se = n > 1 ? std::sqrt(ss.sum / (n - 1) / n) : 0.0;
      t.cells.push_back({e, k, mean, se, n});
    }
  }
  t.replications = std::move(reps);
  return t;
}

MetricsTable run_study(const SimScenario& scn, const std::vector<Estimator>& estimators,
                       const std::vector<Metric>& metrics) {
  return drive(scn, estimators, metrics, worker_count());
}

namespace serial {

MetricsTable run_study(const SimScenario& scn, const std::vector<Estimator>& estimators,
                       const std::vector<Metric>& metrics) {
  scn.validate();
  std::vector<ReplicationMetrics> reps;
  reps.reserve(static_cast<std::size_t>(scn.reps));
  for (int r = 0; r < scn.reps; ++r) reps.push_back(run_replication(scn, r, estimators, metrics));
  return aggregate(scn, estimators, metrics, std::move(reps));
}

}  // namespace serial

void write_metrics_csv(std::ostream& os, const MetricsTable& table, bool header) {
  if (header) os << "model,scenario,prior,estimator,metric,value,mc_se,reps\n";
  char buf[64];
  for (const auto& c : table.cells) {
    os << to_string(table.model) << ',' << to_string(table.scenario) << ','
       << (table.model == ModelKind::FH ? to_string(table.prior) : std::string("gamma")) << ','
       << to_string(c.estimator) << ',' << to_string(c.metric) << ',';
    std::snprintf(buf, sizeof buf, "%.17g", c.value);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", c.mc_se);
    os << buf << ',' << c.reps << '\n';
  }
}

std::string metrics_sidecar_json(const SimScenario& scn, const MetricsTable& table) {
  nlohmann::ordered_json j;
  j["format"] = "tiltbench-metrics/1";
  j["model"] = to_string(scn.model);
  j["scenario"] = to_string(scn.scenario);
  j["prior"] = scn.model == ModelKind::FH ? to_string(scn.prior) : "gamma";
  j["m"] = scn.m;
  j["reps"] = scn.reps;
  j["base_seed"] = scn.base_seed;
  j["stream_layout"] = "data=3r, chain=3r+1, intervals=3r+2";
  j["group_D"] = scn.group_D;
  j["group_n"] = scn.group_n;
  j["beta_true"] = std::vector<double>(scn.beta_true.data(), scn.beta_true.data() + scn.beta_true.size());
  if (scn.model == ModelKind::FH) {
    j["A_true"] = scn.A_true;
    j["t_dof"] = scn.t_dof;
  } else {
    j["nu_true"] = scn.nu_true;
  }
  j["chain"] = {{"burn_in", scn.chain.burn_in}, {"draws", scn.chain.draws}, {"thin", scn.chain.thin}};
  j["redraw_covariates"] = scn.redraw_covariates;
  j["reps_used"] = table.reps_used;
  j["reps_failed"] = table.reps_failed;
  j["max_identity_error"] = table.max_identity_error;
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& r : table.replications) {
    if (!r.ok) failures.push_back({{"rep", r.rep}, {"error", r.error}});
  }
  j["failures"] = failures;
  return j.dump(2);
}

}  // namespace tiltbench
