#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tiltbench/fay_herriot.hpp"
#include "tiltbench/poisson_gamma.hpp"

namespace tiltbench {

enum class ModelKind { FH, PG };
enum class Scenario { I, II, III };
enum class Estimator { HB, ET, MDI, WL1, WL2 };
enum class Metric { MSE, CP, AL, KL };

inline constexpr std::array<Estimator, 5> kAllEstimators = {Estimator::HB, Estimator::ET, Estimator::MDI,
                                                            Estimator::WL1, Estimator::WL2};
inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::MSE, Metric::CP, Metric::AL, Metric::KL};

std::string to_string(ModelKind v);
std::string to_string(Scenario v);
std::string to_string(Estimator v);
std::string to_string(Metric v);
ModelKind parse_model(const std::string& s);
Scenario parse_scenario(const std::string& s);
Estimator parse_estimator(const std::string& s);
Metric parse_metric(const std::string& s);

/// Generative design of one simulation experiment. Areas fall into five
/// equal groups sharing D_i and n_i.
struct SimScenario {
  ModelKind model = ModelKind::FH;
  Scenario scenario = Scenario::I;
  int m = 50;
  int reps = 200;
  std::uint64_t base_seed = 20240917;
  std::array<double, 5> group_D = {0.3, 0.7, 1.0, 1.5, 2.0};
  std::array<double, 5> group_n = {30.0, 20.0, 15.0, 10.0, 5.0};
  Eigen::VectorXd beta_true;  // intercept, x1 ~ N(0,1), x2 ~ Ber(0.5)
  double A_true = 0.5;        // FH random-effect variance
  double nu_true = 5.0;       // PG gamma precision
  double t_dof = 2.5;         // FH scenario III
  EffectFamily prior = EffectFamily::Normal;  // FH fitting prior
  ChainConfig chain = ChainConfig::fh_defaults();
  bool redraw_covariates = true;

  static SimScenario fh(Scenario scn, EffectFamily prior, int m, int reps, std::uint64_t seed);
  static SimScenario pg(Scenario scn, int m, int reps, std::uint64_t seed);
  void validate() const;
};

struct FHSample {
  FHDataset data;
  Eigen::VectorXd theta_true;
  Eigen::VectorXd n;
};

struct PGSample {
  PGDataset data;
  Eigen::VectorXd lambda_true;
};

FHSample gen_fh(const SimScenario& scn, int rep);
PGSample gen_pg(const SimScenario& scn, int rep);

/// Random stream ids used by replication `rep` (seed = base_seed).
struct ReplicationStreams {
  std::uint64_t data;
  std::uint64_t chain;
  std::uint64_t intervals;
};
ReplicationStreams replication_streams(int rep);

/// One replication's metric values, NaN where not computed.
struct ReplicationMetrics {
  int rep = 0;
  bool ok = false;
  std::string error;
  std::array<std::array<double, 4>, 5> value{};
  double identity_error = 0.0;  // max relative benchmark-identity violation
  double gamma = 0.0;

  double get(Estimator e, Metric k) const {
    return value[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)];
  }
};

struct MetricCell {
  Estimator estimator = Estimator::HB;
  Metric metric = Metric::MSE;
  double value = 0.0;
  double mc_se = 0.0;
  int reps = 0;
};

struct MetricsTable {
  ModelKind model = ModelKind::FH;
  Scenario scenario = Scenario::I;
  EffectFamily prior = EffectFamily::Normal;
  int reps_requested = 0;
  int reps_used = 0;
  int reps_failed = 0;
  double max_identity_error = 0.0;
  std::vector<MetricCell> cells;
  std::vector<ReplicationMetrics> replications;

  std::optional<MetricCell> find(Estimator e, Metric k) const;
  /// Cell value; throws if the cell was not computed.
  double value(Estimator e, Metric k) const;
  double mc_se(Estimator e, Metric k) const;
};

/// Equal-tailed credible interval of one column of draws.
std::pair<double, double> equal_tailed_interval(std::vector<double> column, double level = 0.95);

/// Fits one replication and evaluates every requested estimator/metric.
/// Sampler divergence is caught and reported through `ok`/`error`.
ReplicationMetrics run_replication(const SimScenario& scn, int rep,
                                   const std::vector<Estimator>& estimators,
                                   const std::vector<Metric>& metrics);

/// Runs all replications concurrently (OpenMP, worker_count() threads) and
/// aggregates in replication order with compensated sums, so the table is
/// bit-identical for any worker count. Throws if more than 1% of
/// replications diverge.
MetricsTable run_study(const SimScenario& scn, const std::vector<Estimator>& estimators,
                       const std::vector<Metric>& metrics);

/// Aggregates per-replication results into a table.
MetricsTable aggregate(const SimScenario& scn, const std::vector<Estimator>& estimators,
                       const std::vector<Metric>& metrics, std::vector<ReplicationMetrics> reps);

/// CSV rows `model,scenario,prior,estimator,metric,value,mc_se,reps`.
void write_metrics_csv(std::ostream& os, const MetricsTable& table, bool header = true);

/// JSON sidecar with the full scenario configuration and seed layout.
std::string metrics_sidecar_json(const SimScenario& scn, const MetricsTable& table);

namespace serial {

/// Single-threaded reference driver.
MetricsTable run_study(const SimScenario& scn, const std::vector<Estimator>& estimators,
                       const std::vector<Metric>& metrics);

}  // namespace serial

}  // namespace tiltbench
