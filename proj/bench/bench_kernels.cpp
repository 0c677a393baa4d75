// Serial reference kernels vs their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include "tiltbench/et_core.hpp"
#include "tiltbench/parallel.hpp"
#include "tiltbench/simharness.hpp"

using namespace tiltbench;

namespace {

DrawMatrix make_draws(Eigen::Index S, Eigen::Index m) {
  RngStream rng(1, 0);
  RowMatrix th(S, m);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index i = 0; i < m; ++i) th(s, i) = rng.normal();
  }
  return DrawMatrix(std::move(th));
}

BenchmarkConstraint make_bc(Eigen::Index m) {
  return {Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m)), 0.1, std::nullopt};
}

void BM_WeightedStatisticSerial(benchmark::State& st) {
  const auto d = make_draws(st.range(0), 200);
  const auto bc = make_bc(200);
  const auto spec = NEFModelSpec::poisson_log({});
  for (auto _ : st) benchmark::DoNotOptimize(serial::weighted_statistic(d, spec, bc));
}

void BM_WeightedStatisticParallel(benchmark::State& st) {
  const auto d = make_draws(st.range(0), 200);
  const auto bc = make_bc(200);
  const auto spec = NEFModelSpec::poisson_log({});
  for (auto _ : st) benchmark::DoNotOptimize(weighted_statistic(d, spec, bc));
}

void BM_SnisLogWeightsSerial(benchmark::State& st) {
  const Eigen::VectorXd t = Eigen::VectorXd::Random(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(serial::snis_log_weights(t, 0.7));
}

void BM_SnisLogWeightsParallel(benchmark::State& st) {
  const Eigen::VectorXd t = Eigen::VectorXd::Random(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(snis_log_weights(t, 0.7));
}

SimScenario small_study() {
  auto s = SimScenario::fh(Scenario::I, EffectFamily::Normal, 25, 8, 3);
  s.chain = {100, 300, 1, 1};
  return s;
}

const std::vector<Estimator> kEst(kAllEstimators.begin(), kAllEstimators.end());
const std::vector<Metric> kMet(kAllMetrics.begin(), kAllMetrics.end());

void BM_StudySerial(benchmark::State& st) {
  const auto s = small_study();
  for (auto _ : st) benchmark::DoNotOptimize(serial::run_study(s, kEst, kMet));
}

void BM_StudyParallel(benchmark::State& st) {
  const auto s = small_study();
  for (auto _ : st) benchmark::DoNotOptimize(run_study(s, kEst, kMet));
}

}  // namespace

BENCHMARK(BM_WeightedStatisticSerial)->Arg(1000)->Arg(20000);
BENCHMARK(BM_WeightedStatisticParallel)->Arg(1000)->Arg(20000);
BENCHMARK(BM_SnisLogWeightsSerial)->Arg(1000)->Arg(1000000);
BENCHMARK(BM_SnisLogWeightsParallel)->Arg(1000)->Arg(1000000);
BENCHMARK(BM_StudySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StudyParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
