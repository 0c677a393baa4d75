#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tiltbench/error.hpp"
#include "tiltbench/io.hpp"

using namespace tiltbench;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tiltbench_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kFhCsv =
    "area,y,D,x1,n\n"
    "a,1.5,0.3,0.2,30\n"
    "b,0.5,0.7,-1.0,20\n"
    "c,2.0,1.0,0.5,15\n"
    "d,1.1,1.5,1.5,10\n"
    "e,0.0,2.0,-0.3,5\n";

}  // namespace

TEST(Io, ReadsFhDatasetWithIntercept) {
  std::istringstream in(kFhCsv);
  const FHDataset d = fh_dataset_from(read_csv(in));
  EXPECT_EQ(d.m(), 5);
  EXPECT_EQ(d.p(), 2);
  EXPECT_EQ(d.X(0, 0), 1.0);
  EXPECT_EQ(d.X(1, 1), -1.0);
  EXPECT_EQ(d.area[3], "d");
}

TEST(Io, ExplicitInterceptKept) {
  std::istringstream in("area,z,n,x1,x2\na,1,5,1,0.3\nb,0,4,1,0.1\nc,3,6,1,-0.4\n");
  const PGDataset d = pg_dataset_from(read_csv(in));
  EXPECT_EQ(d.p(), 2);
}

TEST(Io, RejectsRaggedAndNonNumeric) {
  std::istringstream ragged("area,y,D\na,1\n");
  EXPECT_THROW(read_csv(ragged), DataError);
  std::istringstream bad("area,y,D,x1\na,1,zz,1\nb,1,1,2\nc,2,1,3\n");
  EXPECT_THROW(fh_dataset_from(read_csv(bad)), DataError);
  std::istringstream missing("area,y,x1\na,1,1\n");
  EXPECT_THROW(fh_dataset_from(read_csv(missing)), DataError);
}

TEST(Io, FhDrawsRoundTripBitwise) {
  std::istringstream in(kFhCsv);
  const FHDataset data = fh_dataset_from(read_csv(in));
  RngStream rng(3, 0);
  const FHDraws d = gibbs_fh(data, FHPrior::defaults(2, EffectFamily::Horseshoe), {20, 50, 1, 1}, rng);
  const fs::path dir = scratch("fh");
  write_fh_draws(dir, d);
  EXPECT_EQ(draws_model(dir), "fh");
  const FHDraws back = read_fh_draws(dir, data);
  EXPECT_TRUE(back.beta == d.beta);
  EXPECT_TRUE(back.A == d.A);
  EXPECT_TRUE(back.u == d.u);
  EXPECT_TRUE(back.theta_tilde == d.theta_tilde);
  EXPECT_TRUE(back.sigma2_tilde == d.sigma2_tilde);
  EXPECT_EQ(back.family, EffectFamily::Horseshoe);
  EXPECT_EQ(back.meta.seed, 3u);
}

TEST(Io, PgDrawsRoundTripBitwise) {
  std::istringstream in("area,z,n,x1\na,3,5,0.1\nb,0,4,1.2\nc,7,6,-0.4\nd,2,3,0.0\n");
  const PGDataset data = pg_dataset_from(read_csv(in));
  RngStream rng(4, 0);
  const PGDraws d = gibbs_pg(data, PGPrior::defaults(2), {50, 60, 1, 1}, rng);
  const fs::path dir = scratch("pg");
  write_pg_draws(dir, d);
  const PGDraws back = read_pg_draws(dir, data);
  EXPECT_TRUE(back.beta == d.beta);
  EXPECT_TRUE(back.nu == d.nu);
  EXPECT_TRUE(back.shape == d.shape);
  EXPECT_TRUE(back.rate == d.rate);
  EXPECT_EQ(back.accept_beta, d.accept_beta);
}

TEST(Io, DrawsShapeMismatchRejected) {
  std::istringstream in(kFhCsv);
  const FHDataset data = fh_dataset_from(read_csv(in));
  RngStream rng(5, 0);
  const FHDraws d = gibbs_fh(data, FHPrior::defaults(2), {10, 10, 1, 1}, rng);
  const fs::path dir = scratch("mismatch");
  write_fh_draws(dir, d);
  FHDataset smaller = data;
  smaller.y.conservativeResize(4);
  smaller.D.conservativeResize(4);
  smaller.X.conservativeResize(4, 2);
  smaller.area.resize(4);
  EXPECT_THROW(read_fh_draws(dir, smaller), DataError);
}

TEST(Io, EstimatesRoundTrip) {
  EstimatesTable t;
  t.area = {"x", "y"};
  for (VectorXd* v : {&t.hb_mean, &t.hb_lo95, &t.hb_hi95, &t.et_mean, &t.et_lo95, &t.et_hi95, &t.wl1, &t.wl2, &t.mdi}) {
    *v = VectorXd::Random(2);
  }
  std::stringstream ss;
  write_estimates_csv(ss, t);
  const EstimatesTable back = read_estimates_csv(ss);
  EXPECT_EQ(back.area, t.area);
  EXPECT_TRUE(back.et_mean == t.et_mean);
  EXPECT_TRUE(back.mdi == t.mdi);
}

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}
