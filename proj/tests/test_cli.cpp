#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "tiltbench/io.hpp"

using namespace tiltbench;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tiltbench_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(TILTBENCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_pg_data(const fs::path& dir) {
  const fs::path p = dir / "pg.csv";
  std::ofstream out(p);
  out << "area,z,n,x1\n";
  const int z[] = {3, 0, 7, 2, 5, 1, 9, 4, 0, 6};
  const int n[] = {5, 4, 6, 3, 8, 2, 7, 5, 3, 6};
  for (int i = 0; i < 10; ++i) out << "a" << i << ',' << z[i] << ',' << n[i] << ',' << 0.1 * i - 0.4 << '\n';
  return p;
}

fs::path write_fh_data(const fs::path& dir) {
  const fs::path p = dir / "fh.csv";
  std::ofstream out(p);
  out << "area,y,D,x1,n\n";
  const double y[] = {1.2, -0.3, 0.8, 2.1, 0.0, 1.5, 0.7, -1.0, 0.4, 1.9};
  for (int i = 0; i < 10; ++i) {
    out << "a" << i << ',' << y[i] << ',' << 0.5 + 0.1 * i << ',' << 0.2 * i - 1.0 << ',' << 5 + i << '\n';
  }
  return p;
}

}  // namespace

TEST(Cli, MissingDatasetIsConfigError) {
  const fs::path dir = scratch("missing");
  EXPECT_EQ(run("benchmark --model fh --dataset " + (dir / "nope.csv").string() + " --out " + dir.string()), 2);
}

TEST(Cli, UnknownConfigKeyRejected) {
  const fs::path dir = scratch("cfg");
  std::ofstream(dir / "run.cfg") << "# comment\nmodel = pg\nbogus_key = 1\n";
  EXPECT_EQ(run("fit --config " + (dir / "run.cfg").string() + " --out " + dir.string()), 2);
}

TEST(Cli, UnknownFlagRejected) { EXPECT_EQ(run("fit --no-such-flag"), 2); }

TEST(Cli, PgBenchmarkMeetsInternalTarget) {
  const fs::path dir = scratch("pgbench");
  const fs::path data = write_pg_data(dir);
  ASSERT_EQ(run("benchmark --model pg --dataset " + data.string() + " --seed 11 --burn-in 200 --draws 400 --out " +
                dir.string()),
            0);
  std::ifstream in(dir / "estimates.csv");
  const EstimatesTable est = read_estimates_csv(in);
  const CsvTable raw = read_csv(data);
  const Eigen::VectorXd z = raw.numeric("z"), n = raw.numeric("n");
  const Eigen::VectorXd w = n / n.sum();
  const double target = w.dot(z.cwiseQuotient(n));
  EXPECT_NEAR(w.dot(est.et_mean), target, 1e-8 * std::abs(target));
  EXPECT_NEAR(w.dot(est.wl1), target, 1e-8 * std::abs(target));
  EXPECT_TRUE(fs::exists(dir / "diagnostics.json"));
}

TEST(Cli, FitThenBenchmarkMatchesOneShot) {
  const fs::path dir = scratch("twostep");
  const fs::path data = write_fh_data(dir);
  const std::string common = "--model fh --prior laplace --dataset " + data.string() + " --seed 5 --burn-in 100 --draws 300";
  ASSERT_EQ(run("fit " + common + " --out " + (dir / "fit").string()), 0);
  ASSERT_EQ(run("benchmark " + common + " --draws-dir " + (dir / "fit" / "draws").string() + " --out " +
                (dir / "b2").string()),
            0);
  ASSERT_EQ(run("benchmark " + common + " --out " + (dir / "b1").string()), 0);
  const std::string a = slurp(dir / "b1" / "estimates.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b2" / "estimates.csv"));
}

TEST(Cli, NumericTargetAndInfeasible) {
  const fs::path dir = scratch("target");
  const fs::path data = write_pg_data(dir);
  const std::string base = "benchmark --model pg --dataset " + data.string() + " --seed 2 --burn-in 100 --draws 200 ";
  EXPECT_EQ(run(base + "--target 0.9 --out " + (dir / "ok").string()), 0);
  EXPECT_EQ(run(base + "--target=-1 --out " + (dir / "bad").string()), 3);
}

TEST(Cli, SimulateWritesMetrics) {
  const fs::path dir = scratch("sim");
  ASSERT_EQ(run("simulate --model pg --scenario II --reps 2 --m 10 --burn-in 100 --draws 200 --seed 3 --out " +
                dir.string()),
            0);
  const CsvTable t = read_csv(dir / "metrics.csv");
  EXPECT_TRUE(t.has("mc_se"));
  EXPECT_FALSE(t.rows.empty());
  EXPECT_TRUE(fs::exists(dir / "metrics.json"));
  EXPECT_EQ(run("simulate --model pg --scenario II --reps 2 --m 12 --out " + dir.string()), 2);
}
