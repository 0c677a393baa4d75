#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tiltbench/fay_herriot.hpp"
#include "tiltbench/poisson_gamma.hpp"

namespace tiltbench {

/// Header plus string cells; comma separated, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  bool has(const std::string& name) const;
  std::size_t index(const std::string& name) const;  // throws DataError when missing
  Eigen::VectorXd numeric(const std::string& name) const;
  std::vector<std::string> text(const std::string& name) const;
};

CsvTable read_csv(std::istream& is);
CsvTable read_csv(const std::filesystem::path& path);

/// Covariate columns x1, x2, ... in numeric order. An intercept column is
/// prepended unless one of them is identically 1.
Eigen::MatrixXd design_from(const CsvTable& t);

/// `area,y,D,x1..xp`; other columns (e.g. n) are ignored here.
FHDataset fh_dataset_from(const CsvTable& t);
/// `area,z,n,x1..xp`.
PGDataset pg_dataset_from(const CsvTable& t);

std::string format_double(double v);

/// Retained draws: `<stem>.csv` (one row per draw, %.17g) and
/// `<stem>.json` (format version, model, provenance, shape).
void write_fh_draws(const std::filesystem::path& dir, const FHDraws& draws);
void write_pg_draws(const std::filesystem::path& dir, const PGDraws& draws);
/// Loaders re-derive the conditional moments from `data`.
FHDraws read_fh_draws(const std::filesystem::path& dir, const FHDataset& data);
PGDraws read_pg_draws(const std::filesystem::path& dir, const PGDataset& data);
/// Model recorded in the draws header ("fh" or "pg").
std::string draws_model(const std::filesystem::path& dir);

struct EstimatesTable {
  std::vector<std::string> area;
  Eigen::VectorXd hb_mean, hb_lo95, hb_hi95;
  Eigen::VectorXd et_mean, et_lo95, et_hi95;
  Eigen::VectorXd wl1, wl2, mdi;
};

void write_estimates_csv(std::ostream& os, const EstimatesTable& t);
EstimatesTable read_estimates_csv(std::istream& is);

}  // namespace tiltbench
