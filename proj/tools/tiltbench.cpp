// tiltbench: fit, benchmark and simulate from the command line.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 configuration or input error,
// 3 infeasible benchmark target, 4 sampler divergence.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tiltbench/comparators.hpp"
#include "tiltbench/error.hpp"
#include "tiltbench/et_core.hpp"
#include "tiltbench/fay_herriot.hpp"
#include "tiltbench/io.hpp"
#include "tiltbench/parallel.hpp"
#include "tiltbench/poisson_gamma.hpp"
#include "tiltbench/simharness.hpp"

namespace fs = std::filesystem;
using namespace tiltbench;
using Eigen::Index;
using Eigen::VectorXd;
using json = nlohmann::ordered_json;

namespace {

// post-fit sampling streams sit far above the chain streams 0..chains-1
constexpr std::uint64_t kHbStream = 1ULL << 40;
constexpr std::uint64_t kEtStream = (1ULL << 40) + 1;

const std::vector<std::string> kKeys = {"model", "prior",  "dataset", "weights", "target", "H",
                                        "burn_in", "draws", "thin",    "chains",  "seed",   "out",
                                        "scenario", "reps", "m",       "threads", "draws_dir"};

struct RunConfig {
  std::string command;
  ModelKind model = ModelKind::FH;
  EffectFamily prior = EffectFamily::Normal;
  fs::path dataset;
  std::string weights = "proportional-n";
  std::optional<double> target;  // empty: internal
  std::optional<double> H;
  ChainConfig chain;
  std::uint64_t seed = 0;
  bool seed_from_entropy = false;
  fs::path out = ".";
  Scenario scenario = Scenario::I;
  int reps = 200;
  int m = 50;
  int threads = 0;
  std::optional<fs::path> draws_dir;
};

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config", "line " + std::to_string(lineno) + " is not 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    for (auto& c : key) {
      if (c == '-') c = '_';
    }
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) throw ConfigError(key, "unknown key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_same_v<T, double>) {
      out = std::stod(v, &used);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
      out = std::stoull(v, &used);
    } else {
      out = static_cast<T>(std::stoll(v, &used));
    }
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key, "invalid value '" + v + "'");
  }
}

RunConfig resolve(const std::string& command, const std::map<std::string, std::string>& kv) {
  RunConfig c;
  c.command = command;
  auto get = [&](const std::string& k) -> std::optional<std::string> {
    const auto it = kv.find(k);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  if (auto v = get("model")) c.model = parse_model(*v);
  if (auto v = get("prior")) {
    try {
      c.prior = parse_effect_family(*v);
    } catch (const Error&) {
      throw ConfigError("prior", "unknown prior '" + *v + "' (expected normal, laplace or horseshoe)");
    }
  }
  c.chain = c.model == ModelKind::FH ? ChainConfig::fh_defaults() : ChainConfig::pg_defaults();
  if (auto v = get("burn_in")) c.chain.burn_in = parse_number<int>("burn_in", *v);
  if (auto v = get("draws")) c.chain.draws = parse_number<int>("draws", *v);
  if (auto v = get("thin")) c.chain.thin = parse_number<int>("thin", *v);
  if (auto v = get("chains")) c.chain.chains = parse_number<int>("chains", *v);
  if (c.chain.burn_in < 0) throw ConfigError("burn_in", "must be >= 0");
  if (c.chain.draws < 1) throw ConfigError("draws", "must be >= 1");
  if (c.chain.thin < 1) throw ConfigError("thin", "must be >= 1");
  if (c.chain.chains < 1) throw ConfigError("chains", "must be >= 1");
  if (auto v = get("seed")) {
    c.seed = parse_number<std::uint64_t>("seed", *v);
  } else {
    std::random_device rd;
    c.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    c.seed_from_entropy = true;
  }
  if (auto v = get("out")) c.out = *v;
  if (auto v = get("threads")) {
    c.threads = parse_number<int>("threads", *v);
    if (c.threads < 1) throw ConfigError("threads", "must be >= 1");
  }
  if (command == "simulate") {
    if (get("dataset")) throw ConfigError("dataset", "simulate takes a scenario, not a dataset");
    if (auto v = get("scenario")) c.scenario = parse_scenario(*v);
    if (auto v = get("reps")) c.reps = parse_number<int>("reps", *v);
    if (auto v = get("m")) c.m = parse_number<int>("m", *v);
    if (c.reps < 1) throw ConfigError("reps", "must be >= 1");
    if (c.m < 5 || c.m % 5 != 0) throw ConfigError("m", "must be a positive multiple of 5");
    return c;
  }
  const auto ds = get("dataset");
  if (!ds) throw ConfigError("dataset", "required for " + command);
  c.dataset = *ds;
  if (!fs::is_regular_file(c.dataset)) throw ConfigError("dataset", "file not found: " + *ds);
  if (auto v = get("weights")) {
    if (*v != "proportional-n" && v->rfind("col:", 0) != 0) {
      throw ConfigError("weights", "expected proportional-n or col:NAME");
    }
    c.weights = *v;
  }
  if (auto v = get("target")) {
    if (*v != "internal") c.target = parse_number<double>("target", *v);
  }
  if (auto v = get("H")) {
    c.H = parse_number<double>("H", *v);
    if (!(*c.H > 0.0)) throw ConfigError("H", "must be > 0");
    if (c.model != ModelKind::FH || c.prior != EffectFamily::Normal) {
      throw ConfigError("H", "second-moment targets need --model fh --prior normal");
    }
  }
  if (auto v = get("draws_dir")) {
    if (command != "benchmark") throw ConfigError("draws_dir", "only valid for benchmark");
    c.draws_dir = *v;
    if (!fs::is_regular_file(*c.draws_dir / "draws.json")) {
      throw ConfigError("draws_dir", "no draws.json in " + *v);
    }
  }
  return c;
}

BenchmarkConstraint make_constraint(const RunConfig& c, const CsvTable& table, const VectorXd& y) {
  VectorXd raw;
  if (c.weights == "proportional-n") {
    if (!table.has("n")) throw ConfigError("weights", "proportional-n needs an 'n' column in the dataset");
    raw = table.numeric("n");
  } else {
    const std::string col = c.weights.substr(4);
    if (!table.has(col)) throw ConfigError("weights", "dataset has no column '" + col + "'");
    raw = table.numeric(col);
  }
  if ((raw.array() <= 0.0).any() || !raw.allFinite()) throw ConfigError("weights", "weights must be finite and > 0");
  BenchmarkConstraint bc;
  bc.w = raw / raw.sum();
  bc.C = c.target ? *c.target : bc.w.dot(y);
  bc.H = c.H;
  return bc;
}

json chain_json(const RunConfig& c) {
  return {{"burn_in", c.chain.burn_in}, {"draws", c.chain.draws}, {"thin", c.chain.thin}, {"chains", c.chain.chains}};
}

json base_diagnostics(const RunConfig& c) {
  json d;
  d["command"] = c.command;
  d["model"] = to_string(c.model);
  if (c.model == ModelKind::FH) d["prior"] = to_string(c.prior);
  d["seed"] = c.seed;
  d["seed_source"] = c.seed_from_entropy ? "entropy" : "flag";
  d["threads"] = worker_count();
  d["chain"] = chain_json(c);
  return d;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct IntervalCols {
  VectorXd lo, hi;
};

IntervalCols intervals_of(const DrawMatrix& dm) {
  IntervalCols out{VectorXd(dm.areas()), VectorXd(dm.areas())};
  std::vector<double> col(static_cast<std::size_t>(dm.draws()));
  for (Index i = 0; i < dm.areas(); ++i) {
    for (Index s = 0; s < dm.draws(); ++s) col[static_cast<std::size_t>(s)] = dm.theta()(s, i);
    const auto [lo, hi] = equal_tailed_interval(col);
    out.lo[i] = lo;
    out.hi[i] = hi;
  }
  return out;
}

// SNIS ESS of the tilt reaching the same target from the untilted sample
double snis_ess(const DrawMatrix& untilted, const NEFModelSpec& spec, const BenchmarkConstraint& bc,
                std::vector<std::string>& warnings) {
  try {
    const TiltSolution sol = solve_tilt_snis(untilted, spec, bc);
    for (const auto& w : sol.warnings) warnings.push_back(w);
    return sol.ess;
  } catch (const InfeasibleTargetError& e) {
    warnings.push_back(std::string("SNIS diagnostic skipped: ") + e.what());
    return 0.0;
  }
}

int cmd_fit(const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const CsvTable table = read_csv(c.dataset);
  fs::create_directories(c.out);
  json d = base_diagnostics(c);
  if (c.model == ModelKind::FH) {
    const FHDataset data = fh_dataset_from(table);
    const FHDraws draws = gibbs_fh_chains(data, FHPrior::defaults(data.p(), c.prior), c.chain, c.seed);
    write_fh_draws(c.out / "draws", draws);
    d["A_mean"] = draws.A.mean();
  } else {
    const PGDataset data = pg_dataset_from(table);
    const PGDraws draws = gibbs_pg_chains(data, PGPrior::defaults(data.p()), c.chain, c.seed);
    write_pg_draws(c.out / "draws", draws);
    d["acceptance"] = {{"beta", draws.accept_beta}, {"nu", draws.accept_nu}};
    d["nu_mean"] = draws.nu.mean();
    d["warnings"] = draws.warnings;
  }
  d["draws_dir"] = (c.out / "draws").string();
  d["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(c.out / "diagnostics.json", d);
  std::cout << "draws written to " << (c.out / "draws").string() << '\n';
  return 0;
}

int cmd_benchmark(const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const CsvTable table = read_csv(c.dataset);
  fs::create_directories(c.out);
  json d = base_diagnostics(c);
  std::vector<std::string> warnings;
  EstimatesTable est;
  RngStream hb_rng(c.seed, kHbStream);
  RngStream et_rng(c.seed, kEtStream);

  if (c.model == ModelKind::FH) {
    const FHDataset data = fh_dataset_from(table);
    const BenchmarkConstraint bc = make_constraint(c, table, data.y);
    bc.validate();
    for (const auto& a : bc.advisories()) warnings.push_back(a);
    FHDraws draws;
    if (c.draws_dir) {
      if (draws_model(*c.draws_dir) != "fh") throw ConfigError("draws_dir", "draws are not from an fh fit");
      draws = read_fh_draws(*c.draws_dir, data);
      if (draws.family != c.prior) throw ConfigError("prior", "does not match the prior of the saved draws");
    } else {
      draws = gibbs_fh_chains(data, FHPrior::defaults(data.p(), c.prior), c.chain, c.seed);
    }
    const PosteriorSummary summary = summarize(draws);
    const DrawMatrix hb = sample_tilted(draws, bc, 0.0, hb_rng);
    const IntervalCols hb_iv = intervals_of(hb);
    est.hb_mean = summary.mean;
    est.hb_lo95 = hb_iv.lo;
    est.hb_hi95 = hb_iv.hi;
    if (bc.H) {
      const TwoMomentTilt tilt = tilt_two_moment(draws, bc, summary.mean);
      est.et_mean = two_moment_means(draws, bc, summary.mean, tilt);
      const IntervalCols iv = intervals_of(sample_two_moment(draws, bc, summary.mean, tilt, et_rng));
      est.et_lo95 = iv.lo;
      est.et_hi95 = iv.hi;
      d["gamma1"] = tilt.gamma1;
      d["gamma2"] = tilt.gamma2;
      d["solver"] = tilt.method;
      const KlEstimate kl = kl_tilted(draws, bc, summary.mean, tilt);
      d["kl_et"] = kl.value;
      for (const auto& w : kl.warnings) warnings.push_back(w);
    } else {
      const double gamma = tilt_gamma_mean(draws, bc);
      est.et_mean = benchmarked_means(draws, bc, gamma);
      const IntervalCols iv = intervals_of(sample_tilted(draws, bc, gamma, et_rng));
      est.et_lo95 = iv.lo;
      est.et_hi95 = iv.hi;
      d["gamma"] = gamma;
      const KlEstimate kl = kl_tilted(draws, bc, gamma);
      d["kl_et"] = kl.value;
      for (const auto& w : kl.warnings) warnings.push_back(w);
      d["ess"] = snis_ess(hb, NEFModelSpec::gaussian(VectorXd::Ones(data.m())), bc, warnings);
    }
    const MdiResult mdi = mdi_normal(summary, bc);
    est.mdi = mdi.mean;
    est.wl1 = constrained_bayes(summary, summary.var.cwiseInverse(), bc);
    est.wl2 = constrained_bayes(summary, data.D.cwiseInverse(), bc);
    d["gamma_mdi"] = mdi.gamma;
    const KlEstimate kl_mdi = kl_normal_approx(draws, bc, mdi);
    d["kl_mdi"] = kl_mdi.value;
    for (const auto& w : kl_mdi.warnings) warnings.push_back(w);
    d["A_mean"] = draws.A.mean();
    est.area = data.area;
    d["C"] = bc.C;
    d["identity_gap_et"] = bc.w.dot(est.et_mean) - bc.C;
  } else {
    if (c.H) throw ConfigError("H", "second-moment targets need --model fh");
    const PGDataset data = pg_dataset_from(table);
    const BenchmarkConstraint bc = make_constraint(c, table, data.y());
    bc.validate();
    for (const auto& a : bc.advisories()) warnings.push_back(a);
    PGDraws draws;
    if (c.draws_dir) {
      if (draws_model(*c.draws_dir) != "pg") throw ConfigError("draws_dir", "draws are not from a pg fit");
      draws = read_pg_draws(*c.draws_dir, data);
    } else {
      draws = gibbs_pg_chains(data, PGPrior::defaults(data.p()), c.chain, c.seed);
    }
    for (const auto& w : draws.warnings) warnings.push_back(w);
    const PosteriorSummary summary = summarize(draws);
    const DrawMatrix hb = sample_tilted_pg(draws, bc, 0.0, hb_rng);
    const IntervalCols hb_iv = intervals_of(hb);
    est.hb_mean = summary.mean;
    est.hb_lo95 = hb_iv.lo;
    est.hb_hi95 = hb_iv.hi;
    const double gamma = solve_gamma_pg(draws, bc);
    est.et_mean = benchmarked_means_pg(draws, bc, gamma);
    const IntervalCols iv = intervals_of(sample_tilted_pg(draws, bc, gamma, et_rng));
    est.et_lo95 = iv.lo;
    est.et_hi95 = iv.hi;
    d["gamma"] = gamma;
    const KlEstimate kl = kl_tilted(draws, bc, gamma);
    d["kl_et"] = kl.value;
    for (const auto& w : kl.warnings) warnings.push_back(w);
    // SNIS on log lambda with psi' = exp
    RowMatrix log_hb = hb.theta().array().log();
    d["ess"] = snis_ess(DrawMatrix(std::move(log_hb)), NEFModelSpec::poisson_log(VectorXd::Ones(data.m())), bc,
                        warnings);
    const MdiResult mdi = mdi_normal(summary, bc);
    est.mdi = mdi.mean;
    est.wl1 = constrained_bayes(summary, bc.w, bc);
    est.wl2 = constrained_bayes(summary, bc.w.cwiseQuotient(summary.mean), bc);
    d["gamma_mdi"] = mdi.gamma;
    d["acceptance"] = {{"beta", draws.accept_beta}, {"nu", draws.accept_nu}};
    est.area = data.area;
    d["C"] = bc.C;
    d["identity_gap_et"] = bc.w.dot(est.et_mean) - bc.C;
  }
  {
    std::ofstream out(c.out / "estimates.csv");
    if (!out) throw DataError("cannot write " + (c.out / "estimates.csv").string());
    write_estimates_csv(out, est);
  }
  d["warnings"] = warnings;
  d["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(c.out / "diagnostics.json", d);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "estimates written to " << (c.out / "estimates.csv").string() << '\n';
  return 0;
}

int cmd_simulate(const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  SimScenario scn = c.model == ModelKind::FH ? SimScenario::fh(c.scenario, c.prior, c.m, c.reps, c.seed)
                                             : SimScenario::pg(c.scenario, c.m, c.reps, c.seed);
  scn.chain = c.chain;
  const std::vector<Estimator> est(kAllEstimators.begin(), kAllEstimators.end());
  const std::vector<Metric> met(kAllMetrics.begin(), kAllMetrics.end());
  const MetricsTable table = run_study(scn, est, met);
  fs::create_directories(c.out);
  {
    std::ofstream out(c.out / "metrics.csv");
    if (!out) throw DataError("cannot write " + (c.out / "metrics.csv").string());
    write_metrics_csv(out, table);
  }
  {
    std::ofstream out(c.out / "metrics.json");
    out << metrics_sidecar_json(scn, table) << '\n';
  }
  json d = base_diagnostics(c);
  d["scenario"] = to_string(c.scenario);
  d["m"] = c.m;
  d["reps"] = c.reps;
  d["reps_failed"] = table.reps_failed;
  d["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(c.out / "diagnostics.json", d);
  write_metrics_csv(std::cout, table);
  return 0;
}

void add_common(CLI::App* sub, std::map<std::string, std::string>& kv, std::string& config) {
  auto opt = [&](const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&kv, key](const std::string& v) { kv[key] = v; }, help);
  };
  sub->add_option("--config", config, "key = value file; flags override it");
  opt("--model", "model", "fh | pg");
  opt("--prior", "prior", "normal | laplace | horseshoe (fh)");
  opt("--burn-in", "burn_in", "burn-in iterations");
  opt("--draws", "draws", "retained draws per chain");
  opt("--thin", "thin", "thinning interval");
  opt("--chains", "chains", "independent chains");
  opt("--seed", "seed", "64-bit seed (default: entropy, recorded)");
  opt("--out", "out", "output directory");
  opt("--threads", "threads", "worker threads");
}

void add_data(CLI::App* sub, std::map<std::string, std::string>& kv) {
  auto opt = [&](const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&kv, key](const std::string& v) { kv[key] = v; }, help);
  };
  opt("--dataset", "dataset", "CSV dataset");
  opt("--weights", "weights", "proportional-n | col:NAME");
  opt("--target", "target", "internal | a number");
  opt("--H", "H", "second-moment target (fh, normal prior)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropic-tilting benchmarking for small-area models"};
  app.require_subcommand(1);
  std::map<std::string, std::string> kv;
  std::string config;

  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler and save draws");
  add_common(fit, kv, config);
  add_data(fit, kv);
  auto* bench = app.add_subcommand("benchmark", "benchmarked estimates from a fit or saved draws");
  add_common(bench, kv, config);
  add_data(bench, kv);
  bench->add_option_function<std::string>(
      "--draws-dir", [&kv](const std::string& v) { kv["draws_dir"] = v; }, "draws saved by fit");
  auto* sim = app.add_subcommand("simulate", "replicated simulation study");
  add_common(sim, kv, config);
  sim->add_option_function<std::string>(
      "--scenario", [&kv](const std::string& v) { kv["scenario"] = v; }, "I | II | III");
  sim->add_option_function<std::string>("--reps", [&kv](const std::string& v) { kv["reps"] = v; }, "replications");
  sim->add_option_function<std::string>("--m", [&kv](const std::string& v) { kv["m"] = v; }, "areas (multiple of 5)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (!config.empty()) {
      for (const auto& [k, v] : read_config_file(config)) kv.emplace(k, v);  // flags win
    }
    const RunConfig c = resolve(command, kv);
    if (c.threads > 0) set_worker_count(c.threads);
    if (command == "fit") return cmd_fit(c);
    if (command == "benchmark") return cmd_benchmark(c);
    return cmd_simulate(c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const ParameterDomainError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const InfeasibleTargetError& e) {
    std::cerr << "infeasible target: " << e.what() << '\n';
    return 3;
  } catch (const SamplerDivergenceError& e) {
    std::cerr << "sampler divergence: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
