#include "tiltbench/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "tiltbench/error.hpp"

namespace tiltbench {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

constexpr const char* kDrawsFormat = "tiltbench-draws/1";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw DataError(where + ": cannot parse '" + s + "' as a number");
  return v;
}

// "x12" -> 12, anything else -> -1
int covariate_index(const std::string& name) {
  if (name.size() < 2 || name[0] != 'x') return -1;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), v);
  if (ec != std::errc() || ptr != name.data() + name.size() || v < 1) return -1;
  return v;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_matrix_rows(std::ostream& os, const std::vector<std::string>& header,
                       const std::vector<const double*>& cols, const std::vector<Index>& strides, Index rows) {
  for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
  os << '\n';
  for (Index r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      os << (k ? "," : "") << format_double(cols[k][r * strides[k]]);
    }
    os << '\n';
  }
}

nlohmann::json read_header(const fs::path& dir) {
  auto in = open_in(dir / "draws.json");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("draws.json: " + std::string(e.what()));
  }
  if (j.value("format", "") != kDrawsFormat) throw DataError("draws.json: unsupported format");
  return j;
}

DrawProvenance provenance_from(const nlohmann::json& j) {
  DrawProvenance p;
  p.model = j.at("model").get<std::string>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.burn_in = j.at("burn_in").get<int>();
  p.thin = j.at("thin").get<int>();
  return p;
}

nlohmann::ordered_json header_for(const DrawProvenance& meta, const std::string& model, Index S, Index m, Index p) {
  nlohmann::ordered_json j;
  j["format"] = kDrawsFormat;
  j["model"] = model;
  j["seed"] = meta.seed;
  j["burn_in"] = meta.burn_in;
  j["thin"] = meta.thin;
  j["draws"] = S;
  j["areas"] = m;
  j["p"] = p;
  return j;
}

void check_shape(const nlohmann::json& j, const std::string& model, Index m, Index p) {
  if (j.at("model").get<std::string>() != model) throw DataError("draws.json: model is not " + model);
  if (j.at("areas").get<Index>() != m || j.at("p").get<Index>() != p) {
    throw DataError("draws.json: draws do not match the dataset dimensions");
  }
}

}  // namespace

bool CsvTable::has(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

std::size_t CsvTable::index(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("CSV: missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

VectorXd CsvTable::numeric(const std::string& name) const {
  const std::size_t k = index(name);
  VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out[static_cast<Index>(r)] = parse_double(rows[r][k], "CSV row " + std::to_string(r + 2) + ", column " + name);
  }
  return out;
}

std::vector<std::string> CsvTable::text(const std::string& name) const {
  const std::size_t k = index(name);
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[k]);
  return out;
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw DataError("CSV: empty input");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size()) {
      throw DataError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                      " fields, got " + std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable read_csv(const fs::path& path) {
  auto in = open_in(path);
  return read_csv(in);
}

MatrixXd design_from(const CsvTable& t) {
  std::vector<std::pair<int, std::string>> cov;
  for (const auto& h : t.header) {
    const int k = covariate_index(h);
    if (k > 0) cov.emplace_back(k, h);
  }
  std::sort(cov.begin(), cov.end());
  const Index m = static_cast<Index>(t.rows.size());
  std::vector<VectorXd> cols;
  bool intercept = false;
  for (const auto& [k, name] : cov) {
    cols.push_back(t.numeric(name));
    if (m > 0 && (cols.back().array() == 1.0).all()) intercept = true;
  }
  const Index p = static_cast<Index>(cols.size()) + (intercept ? 0 : 1);
  MatrixXd X(m, p);
  Index c = 0;
  if (!intercept) X.col(c++).setOnes();
  for (const auto& v : cols) X.col(c++) = v;
  return X;
}

FHDataset fh_dataset_from(const CsvTable& t) {
  FHDataset d;
  d.area = t.text("area");
  d.y = t.numeric("y");
  d.D = t.numeric("D");
  d.X = design_from(t);
  d.validate();
  return d;
}

PGDataset pg_dataset_from(const CsvTable& t) {
  PGDataset d;
  d.area = t.text("area");
  d.z = t.numeric("z");
  d.n = t.numeric("n");
  d.X = design_from(t);
  d.validate();
  return d;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_fh_draws(const fs::path& dir, const FHDraws& draws) {
  fs::create_directories(dir);
  const Index S = draws.draws();
  const Index m = draws.areas();
  const Index p = draws.beta.cols();
  auto j = header_for(draws.meta, "fh", S, m, p);
  j["family"] = to_string(draws.family);
  {
    auto out = open_out(dir / "draws.json");
    out << j.dump(2) << '\n';
  }
  std::vector<std::string> header;
  std::vector<const double*> cols;
  std::vector<Index> strides;
  for (Index k = 0; k < p; ++k) {
    header.push_back("beta" + std::to_string(k + 1));
    cols.push_back(draws.beta.data() + k * draws.beta.rows());  // column-major
    strides.push_back(1);
  }
  header.push_back("A");
  cols.push_back(draws.A.data());
  strides.push_back(1);
  for (Index i = 0; i < m; ++i) {
    header.push_back("u" + std::to_string(i + 1));
    cols.push_back(draws.u.data() + i);  // row-major
    strides.push_back(m);
  }
  auto out = open_out(dir / "draws.csv");
  write_matrix_rows(out, header, cols, strides, S);
}

void write_pg_draws(const fs::path& dir, const PGDraws& draws) {
  fs::create_directories(dir);
  const Index S = draws.draws();
  const Index p = draws.beta.cols();
  auto j = header_for(draws.meta, "pg", S, draws.areas(), p);
  j["accept_beta"] = draws.accept_beta;
  j["accept_nu"] = draws.accept_nu;
  j["warnings"] = draws.warnings;
  {
    auto out = open_out(dir / "draws.json");
    out << j.dump(2) << '\n';
  }
  std::vector<std::string> header;
  std::vector<const double*> cols;
  std::vector<Index> strides;
  for (Index k = 0; k < p; ++k) {
    header.push_back("beta" + std::to_string(k + 1));
    cols.push_back(draws.beta.data() + k * draws.beta.rows());
    strides.push_back(1);
  }
  header.push_back("nu");
  cols.push_back(draws.nu.data());
  strides.push_back(1);
  auto out = open_out(dir / "draws.csv");
  write_matrix_rows(out, header, cols, strides, S);
}

std::string draws_model(const fs::path& dir) { return read_header(dir).at("model").get<std::string>(); }

FHDraws read_fh_draws(const fs::path& dir, const FHDataset& data) {
  const auto j = read_header(dir);
  check_shape(j, "fh", data.m(), data.p());
  const CsvTable t = read_csv(dir / "draws.csv");
  const Index S = j.at("draws").get<Index>();
  if (static_cast<Index>(t.rows.size()) != S) throw DataError("draws.csv: row count does not match header");
  MatrixXd beta(S, data.p());
  for (Index k = 0; k < data.p(); ++k) beta.col(k) = t.numeric("beta" + std::to_string(k + 1));
  VectorXd A = t.numeric("A");
  RowMatrix u(S, data.m());
  for (Index i = 0; i < data.m(); ++i) u.col(i) = t.numeric("u" + std::to_string(i + 1));
  return derive_fh_draws(data, std::move(beta), std::move(A), std::move(u),
                         parse_effect_family(j.at("family").get<std::string>()), provenance_from(j));
}

PGDraws read_pg_draws(const fs::path& dir, const PGDataset& data) {
  const auto j = read_header(dir);
  check_shape(j, "pg", data.m(), data.p());
  const CsvTable t = read_csv(dir / "draws.csv");
  const Index S = j.at("draws").get<Index>();
  if (static_cast<Index>(t.rows.size()) != S) throw DataError("draws.csv: row count does not match header");
  MatrixXd beta(S, data.p());
  for (Index k = 0; k < data.p(); ++k) beta.col(k) = t.numeric("beta" + std::to_string(k + 1));
  PGDraws out = derive_pg_draws(data, std::move(beta), t.numeric("nu"), provenance_from(j));
  out.accept_beta = j.value("accept_beta", 0.0);
  out.accept_nu = j.value("accept_nu", 0.0);
  out.warnings = j.value("warnings", std::vector<std::string>{});
  return out;
}

void write_estimates_csv(std::ostream& os, const EstimatesTable& t) {
  os << "area,hb_mean,hb_lo95,hb_hi95,et_mean,et_lo95,et_hi95,wl1,wl2,mdi\n";
  for (std::size_t r = 0; r < t.area.size(); ++r) {
    const auto i = static_cast<Index>(r);
    os << t.area[r];
    for (const VectorXd* v : {&t.hb_mean, &t.hb_lo95, &t.hb_hi95, &t.et_mean, &t.et_lo95, &t.et_hi95, &t.wl1,
                              &t.wl2, &t.mdi}) {
      os << ',' << format_double((*v)[i]);
    }
    os << '\n';
  }
}

EstimatesTable read_estimates_csv(std::istream& is) {
  const CsvTable t = read_csv(is);
  const std::vector<std::string> expect = {"area",   "hb_mean", "hb_lo95", "hb_hi95", "et_mean",
                                           "et_lo95", "et_hi95", "wl1",     "wl2",     "mdi"};
  if (t.header != expect) throw DataError("estimates.csv: unexpected header");
  EstimatesTable out;
  out.area = t.text("area");
  out.hb_mean = t.numeric("hb_mean");
  out.hb_lo95 = t.numeric("hb_lo95");
  out.hb_hi95 = t.numeric("hb_hi95");
  out.et_mean = t.numeric("et_mean");
  out.et_lo95 = t.numeric("et_lo95");
  out.et_hi95 = t.numeric("et_hi95");
  out.wl1 = t.numeric("wl1");
  out.wl2 = t.numeric("wl2");
  out.mdi = t.numeric("mdi");
  return out;
}

}  // namespace tiltbench
