#pragma once

// Text persistence: dataset CSV ingestion, the JSON run configuration, and the delimited
// output files (traces, partitions, summaries, plot data, reports, manifest).
// Numbers are written with 17 significant digits so every file round-trips exactly.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cdbmm/errors.hpp"
#include "cdbmm/estimands.hpp"
#include "cdbmm/fit.hpp"
#include "cdbmm/gibbs.hpp"
#include "cdbmm/matching.hpp"
#include "cdbmm/model.hpp"
#include "cdbmm/normal_math.hpp"
#include "cdbmm/partition.hpp"
#include "cdbmm/scenarios.hpp"

namespace cdbmm {

inline constexpr const char* kSoftwareVersion = "0.1.0";

inline std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------------------------
// Run configuration

struct ColumnRoles {
  std::string outcome = "y";
  std::string treatment = "t";
  std::vector<std::string> covariates;   // empty: every other column
  std::vector<std::string> categorical;  // subset of covariates

  friend bool operator==(const ColumnRoles&, const ColumnRoles&) = default;
};

struct MatchingConfig {
  bool enabled = false;
  std::optional<double> caliper;
  double ridge = 0.0;

  friend bool operator==(const MatchingConfig&, const MatchingConfig&) = default;
};

struct RunConfig {
  std::string input;
  char delimiter = ',';
  ColumnRoles columns;
  Hyperparams hyper;
  ChainConfig chain;
  PartitionLoss loss = PartitionLoss::vi;
  int min_reliable_group_size = 5;
  MatchingConfig matching;
  std::string output_dir = "cdbmm_out";

  FitOptions fit_options() const { return FitOptions{hyper, chain, loss, min_reliable_group_size}; }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

using nlohmann::json;

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("config field '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw InputError("config section '" + where + "' must be an object");
  for (const auto& [k, _] : j.items())
    if (std::none_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; }))
      throw InputError("config section '" + where + "': unknown field '" + k + "'");
}

}  // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["input"] = c.input;
  j["delimiter"] = std::string(1, c.delimiter);
  j["columns"] = {{"outcome", c.columns.outcome},
                  {"treatment", c.columns.treatment},
                  {"covariates", c.columns.covariates},
                  {"categorical", c.columns.categorical}};
  j["hyperparams"] = {{"mu_beta", c.hyper.mu_beta},   {"sigma2_beta", c.hyper.sigma2_beta}, {"mu_eta", c.hyper.mu_eta},
                      {"sigma2_eta", c.hyper.sigma2_eta}, {"gamma1", c.hyper.gamma1},         {"gamma2", c.hyper.gamma2},
                      {"L", c.hyper.L}};
  j["chain"] = {{"n_iter", c.chain.n_iter}, {"burn_in", c.chain.burn_in}, {"thin", c.chain.thin},
                {"seed", c.chain.seed},     {"warmup", c.chain.warmup}};
  j["loss"] = to_string(c.loss);
  j["min_reliable_group_size"] = c.min_reliable_group_size;
  j["matching"] = {{"enabled", c.matching.enabled}, {"ridge", c.matching.ridge}};
  j["matching"]["caliper"] = c.matching.caliper ? nlohmann::json(*c.matching.caliper) : nlohmann::json(nullptr);
  j["output_dir"] = c.output_dir;
  return j;
}

/// Missing fields keep their defaults; unknown fields are rejected.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using detail::read_field;
  detail::reject_unknown(j, {"input", "delimiter", "columns", "hyperparams", "chain", "loss", "min_reliable_group_size", "matching", "output_dir"}, "root");
  RunConfig c;
  read_field(j, "input", c.input);
  if (j.contains("delimiter")) {
    std::string d;
    read_field(j, "delimiter", d);
    if (d.size() != 1) throw InputError("config field 'delimiter' must be a single character");
    c.delimiter = d[0];
  }
  if (j.contains("columns")) {
    const auto& s = j.at("columns");
    detail::reject_unknown(s, {"outcome", "treatment", "covariates", "categorical"}, "columns");
    read_field(s, "outcome", c.columns.outcome);
    read_field(s, "treatment", c.columns.treatment);
    read_field(s, "covariates", c.columns.covariates);
    read_field(s, "categorical", c.columns.categorical);
  }
  if (j.contains("hyperparams")) {
    const auto& s = j.at("hyperparams");
    detail::reject_unknown(s, {"mu_beta", "sigma2_beta", "mu_eta", "sigma2_eta", "gamma1", "gamma2", "L"}, "hyperparams");
    read_field(s, "mu_beta", c.hyper.mu_beta);
    read_field(s, "sigma2_beta", c.hyper.sigma2_beta);
    read_field(s, "mu_eta", c.hyper.mu_eta);
    read_field(s, "sigma2_eta", c.hyper.sigma2_eta);
    read_field(s, "gamma1", c.hyper.gamma1);
    read_field(s, "gamma2", c.hyper.gamma2);
    read_field(s, "L", c.hyper.L);
  }
  if (j.contains("chain")) {
    const auto& s = j.at("chain");
    detail::reject_unknown(s, {"n_iter", "burn_in", "thin", "seed", "warmup"}, "chain");
    read_field(s, "n_iter", c.chain.n_iter);
    read_field(s, "burn_in", c.chain.burn_in);
    read_field(s, "thin", c.chain.thin);
    read_field(s, "seed", c.chain.seed);
    read_field(s, "warmup", c.chain.warmup);
  }
  if (j.contains("loss")) {
    std::string l;
    read_field(j, "loss", l);
    c.loss = parse_partition_loss(l);
  }
  read_field(j, "min_reliable_group_size", c.min_reliable_group_size);
  if (j.contains("matching")) {
    const auto& s = j.at("matching");
    detail::reject_unknown(s, {"enabled", "caliper", "ridge"}, "matching");
    read_field(s, "enabled", c.matching.enabled);
    read_field(s, "ridge", c.matching.ridge);
    if (s.contains("caliper") && !s.at("caliper").is_null()) {
      double v = 0.0;
      read_field(s, "caliper", v);
      c.matching.caliper = v;
    }
  }
  read_field(j, "output_dir", c.output_dir);
  return c;
}

inline void save_run_config(const RunConfig& c, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write config file " + path.string());
  f << to_json(c).dump(2) << '\n';
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("config file " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

// ---------------------------------------------------------------------------------------------
// Delimited text

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    cells.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cells;
}

inline std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parse a delimited file with a header row. Row numbers in errors count data rows from 1
/// (the header is row 0); columns are named.
inline Dataset load_dataset(const std::filesystem::path& path, const RunConfig& cfg, std::ostream* log = nullptr) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw InputError(path.string() + ": empty file (no header row)");
  const auto header = detail::split_line(line, cfg.delimiter);
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j].empty()) throw InputError(path.string() + ": header column " + std::to_string(j + 1) + " has an empty name");
    if (!col.emplace(header[j], j).second) throw InputError(path.string() + ": duplicated header name '" + header[j] + "'");
  }
  auto need = [&](const std::string& name, const char* role) {
    const auto it = col.find(name);
    if (it == col.end()) throw InputError(path.string() + ": missing " + role + " column '" + name + "'");
    return it->second;
  };
  const std::size_t yc = need(cfg.columns.outcome, "outcome");
  const std::size_t tc = need(cfg.columns.treatment, "treatment");
  if (yc == tc) throw InputError(path.string() + ": outcome and treatment name the same column");
  std::vector<std::string> cov_names = cfg.columns.covariates;
  if (cov_names.empty())
    for (std::size_t j = 0; j < header.size(); ++j)
      if (j != yc && j != tc) cov_names.push_back(header[j]);
  std::vector<std::size_t> xc;
  for (const auto& name : cov_names) {
    const std::size_t j = need(name, "covariate");
    if (j == yc || j == tc) throw InputError(path.string() + ": column '" + name + "' cannot be both a covariate and the outcome/treatment");
    xc.push_back(j);
  }
  for (const auto& name : cfg.columns.categorical)
    if (std::find(cov_names.begin(), cov_names.end(), name) == cov_names.end())
      throw InputError(path.string() + ": categorical column '" + name + "' is not a covariate");

  std::vector<double> y;
  std::vector<int> t;
  std::vector<std::vector<double>> x;
  std::size_t row = 0;
  while (std::getline(f, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto cells = detail::split_line(line, cfg.delimiter);
    if (cells.size() != header.size())
      throw InputError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " fields, header has " +
                       std::to_string(header.size()));
    auto number = [&](std::size_t j) {
      const auto v = detail::parse_number(cells[j]);
      if (!v) throw InputError(path.string() + ": row " + std::to_string(row) + ", column '" + header[j] + "': non-numeric value \"" + cells[j] + "\"");
      return *v;
    };
    y.push_back(number(yc));
    const double tv = number(tc);
    if (tv != 0.0 && tv != 1.0)
      throw InputError(path.string() + ": row " + std::to_string(row) + ", column '" + header[tc] + "': treatment value \"" + cells[tc] +
                       "\" is not 0 or 1");
    t.push_back(static_cast<int>(tv));
    std::vector<double> xr;
    for (std::size_t j : xc) xr.push_back(number(j));
    x.push_back(std::move(xr));
  }
  if (row == 0) throw InputError(path.string() + ": no data rows");
  for (int arm = 0; arm < 2; ++arm)
    if (std::count(t.begin(), t.end(), arm) == 0)
      throw InputError(path.string() + ": treatment column '" + header[tc] + "' has no rows with value " + std::to_string(arm) + " (empty arm)");

  Dataset d;
  d.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  d.t = std::move(t);
  d.x.resize(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(xc.size()));
  for (std::size_t i = 0; i < row; ++i)
    for (std::size_t j = 0; j < xc.size(); ++j) d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i][j];
  d.column_names = cov_names;
  d.categorical.assign(cov_names.size(), false);
  for (std::size_t j = 0; j < cov_names.size(); ++j)
    d.categorical[j] = std::find(cfg.columns.categorical.begin(), cfg.columns.categorical.end(), cov_names[j]) != cfg.columns.categorical.end();
  d.validate();
  if (log)
    *log << "loaded " << path.string() << ": " << d.n() << " rows, " << d.arm_count(0) << " control, " << d.arm_count(1) << " treated, "
         << d.p() << " covariates\n";
  return d;
}

class TableWriter {
 public:
  TableWriter(const std::filesystem::path& path, const std::vector<std::string>& header, char delim = ',') : path_(path), delim_(delim) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path);
    if (!out_) throw InputError("cannot write " + path.string());
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) out_ << (j ? std::string(1, delim_) : std::string()) << cells[j];
    out_ << '\n';
    if (!out_) throw InputError("write failed: " + path_.string());
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  char delim_;
  std::ofstream out_;
};

inline void write_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::vector<std::string> header = {"y", "t"};
  for (std::size_t j = 0; j < d.p(); ++j) header.push_back(j < d.column_names.size() ? d.column_names[j] : "x" + std::to_string(j + 1));
  TableWriter w(path, header);
  for (std::size_t i = 0; i < d.n(); ++i) {
    std::vector<std::string> r = {format_number(d.y[static_cast<Eigen::Index>(i)]), std::to_string(d.t[i])};
    for (std::size_t j = 0; j < d.p(); ++j) r.push_back(format_number(d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    w.row(r);
  }
}

/// One-column label file, header "label"; labels written one-based.
inline void write_partition(const std::vector<int>& labels, const std::filesystem::path& path) {
  TableWriter w(path, {"label"});
  for (int l : labels) w.row({std::to_string(l + 1)});
}

/// Inverse of write_partition: returns zero-based labels. A header line is optional.
inline std::vector<int> read_partition(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open partition file " + path.string());
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::string s = detail::trim(line);
    if (s.empty()) continue;
    if (lineno == 1 && s == "label") continue;
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 1)
      throw InputError(path.string() + ": line " + std::to_string(lineno) + ": expected a positive integer label, got \"" + s + "\"");
    labels.push_back(v - 1);
  }
  return labels;
}

// ---------------------------------------------------------------------------------------------
// Traces: one file per block and arm, header row, one row per stored iteration.

inline std::vector<std::filesystem::path> write_traces(const PosteriorDraws& draws, const std::vector<std::string>& covariate_names,
                                                       const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  const int L = draws.hyper.L;
  const std::size_t p = draws.draws.empty() ? 0 : static_cast<std::size_t>(draws.draws.front().arms[0].beta.cols());
  auto numbered = [](const std::string& stem, int k) { return stem + "_" + std::to_string(k); };
  for (int t = 0; t < 2; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    const std::string sfx = "_t" + std::to_string(t) + ".csv";
    std::vector<std::string> h_eta = {"iteration"}, h_s2 = {"iteration"}, h_beta = {"iteration"}, h_s = {"iteration"}, h_y = {"iteration"};
    for (int l = 1; l <= L; ++l) {
      h_eta.push_back(numbered("eta", l));
      h_s2.push_back(numbered("sigma2", l));
    }
    for (int l = 1; l < L; ++l) {
      h_beta.push_back("beta0_" + std::to_string(l));
      for (std::size_t j = 0; j < p; ++j)
        h_beta.push_back("beta_" + std::to_string(l) + "_" + (j < covariate_names.size() ? covariate_names[j] : "x" + std::to_string(j + 1)));
    }
    for (std::size_t i = 1; i <= draws.n; ++i) {
      h_s.push_back(numbered("S", static_cast<int>(i)));
      h_y.push_back(numbered("y", static_cast<int>(i)));
    }
    TableWriter eta(dir / ("trace_eta" + sfx), h_eta), s2(dir / ("trace_sigma2" + sfx), h_s2), beta(dir / ("trace_beta" + sfx), h_beta),
        alloc(dir / ("trace_allocation" + sfx), h_s), yimp(dir / ("trace_y_imputed" + sfx), h_y);
    for (const Draw& d : draws.draws) {
      const ArmParams& a = d.arms[ut];
      const std::string it = std::to_string(d.iteration);
      std::vector<std::string> r1 = {it}, r2 = {it}, r3 = {it}, r4 = {it}, r5 = {it};
      for (int l = 0; l < L; ++l) {
        r1.push_back(format_number(a.eta[l]));
        r2.push_back(format_number(a.sigma2[l]));
      }
      for (int l = 0; l < L - 1; ++l) {
        r3.push_back(format_number(a.beta0[l]));
        for (Eigen::Index j = 0; j < a.beta.cols(); ++j) r3.push_back(format_number(a.beta(l, j)));
      }
      for (std::size_t i = 0; i < draws.n; ++i) {
        r4.push_back(std::to_string(d.S[ut][i] + 1));
        r5.push_back(format_number(d.y_imputed[ut][static_cast<Eigen::Index>(i)]));
      }
      eta.row(r1);
      s2.row(r2);
      beta.row(r3);
      alloc.row(r4);
      yimp.row(r5);
    }
    for (auto* w : {&eta, &s2, &beta, &alloc, &yimp}) files.push_back(w->path());
  }
  return files;
}

// ---------------------------------------------------------------------------------------------
// Group summaries and plot data

namespace detail {

inline std::vector<std::string> summary_cells(const PosteriorSummary& s) {
  return {format_number(s.mean), format_number(s.median), format_number(s.lower), format_number(s.upper)};
}

inline void write_samples(const GroupSamples& gs, const PosteriorDraws& draws, const std::filesystem::path& path) {
  std::vector<std::string> header = {"iteration"};
  for (Eigen::Index g = 0; g < gs.samples.cols(); ++g) header.push_back("group_" + std::to_string(g + 1));
  TableWriter w(path, header);
  for (Eigen::Index r = 0; r < gs.samples.rows(); ++r) {
    std::vector<std::string> row = {std::to_string(draws.draws[static_cast<std::size_t>(r)].iteration)};
    for (Eigen::Index g = 0; g < gs.samples.cols(); ++g) row.push_back(format_number(gs.samples(r, g)));
    w.row(row);
  }
}

}  // namespace detail

/// Gaussian kernel density on `grid`, Silverman's rule-of-thumb bandwidth.
inline std::vector<double> kernel_density(const std::vector<double>& samples, const std::vector<double>& grid) {
  std::vector<double> out(grid.size(), 0.0);
  std::vector<double> v;
  for (double s : samples)
    if (std::isfinite(s)) v.push_back(s);
  if (v.empty()) return std::vector<double>(grid.size(), std::nan(""));
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double s : v) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : v) var += (s - mean) * (s - mean);
  const double sd = v.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : std::max(1e-3, 1e-3 * std::abs(mean));
  const double h = 0.9 * spread * std::pow(n, -0.2);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double acc = 0.0;
    for (double s : v) acc += normal_pdf(grid[k], s, h * h);
    out[k] = acc / n;
  }
  return out;
}

inline constexpr int kPlotGridPoints = 256;

inline std::vector<double> plot_grid(const Eigen::MatrixXd& samples) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < samples.size(); ++i)
    if (std::isfinite(samples.data()[i])) {
      lo = std::min(lo, samples.data()[i]);
      hi = std::max(hi, samples.data()[i]);
    }
  if (!std::isfinite(lo)) return {};
  const double pad = std::max(0.1 * (hi - lo), 1e-3);
  lo -= pad;
  hi += pad;
  std::vector<double> g(kPlotGridPoints);
  for (int k = 0; k < kPlotGridPoints; ++k) g[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (kPlotGridPoints - 1);
  return g;
}

/// All fit artifacts except traces. Returns the files written.
inline std::vector<std::filesystem::path> write_fit_summaries(const FitResult& fit, const Dataset& data, int min_reliable_group_size,
                                                              const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (int t = 0; t < 2; ++t) {
    const auto p = dir / ("partition_t" + std::to_string(t) + ".csv");
    write_partition(fit.partitions[static_cast<std::size_t>(t)].partition.labels, p);
    files.push_back(p);
  }
  {
    const auto p = dir / "groups.csv";
    write_partition(fit.groups, p);
    files.push_back(p);
  }
  {
    TableWriter w(dir / "group_summary.csv",
                  {"group", "size", "low_reliability", "gate_mean", "gate_median", "gate_lower", "gate_upper", "garr_mean", "garr_median",
                   "garr_lower", "garr_upper", "garr_undefined_draws"});
    for (std::size_t g = 0; g < fit.sizes.size(); ++g) {
      std::vector<std::string> r = {std::to_string(g + 1), std::to_string(fit.sizes[g]),
                                    fit.low_reliability(static_cast<int>(g), min_reliable_group_size) ? "1" : "0"};
      for (auto& c : detail::summary_cells(fit.gate.summary[g])) r.push_back(c);
      for (auto& c : detail::summary_cells(fit.garr.summary[g])) r.push_back(c);
      r.push_back(std::to_string(fit.garr.undefined_draws[g]));
      w.row(r);
    }
    files.push_back(w.path());
  }
  {
    TableWriter w(dir / "ate_summary.csv", {"ate_mean", "ate_median", "ate_lower", "ate_upper", "draws"});
    auto r = detail::summary_cells(fit.ate.summary);
    r.push_back(std::to_string(fit.ate.samples.size()));
    w.row(r);
    files.push_back(w.path());
  }
  {
    TableWriter w(dir / "partition_summary.csv", {"arm", "clusters", "expected_loss"});
    for (int t = 0; t < 2; ++t)
      w.row({std::to_string(t), std::to_string(fit.occupied_clusters(t)), format_number(fit.partitions[static_cast<std::size_t>(t)].expected_loss)});
    files.push_back(w.path());
  }
  detail::write_samples(fit.gate, fit.draws, dir / "samples_gate.csv");
  detail::write_samples(fit.garr, fit.draws, dir / "samples_garr.csv");
  files.push_back(dir / "samples_gate.csv");
  files.push_back(dir / "samples_garr.csv");
  {
    TableWriter w(dir / "samples_ate.csv", {"iteration", "ate"});
    for (std::size_t r = 0; r < fit.ate.samples.size(); ++r) w.row({std::to_string(fit.draws.draws[r].iteration), format_number(fit.ate.samples[r])});
    files.push_back(w.path());
  }
  {
    std::vector<std::string> header = {"group", "statistic"};
    for (std::size_t j = 0; j < data.p(); ++j) header.push_back(j < data.column_names.size() ? data.column_names[j] : "x" + std::to_string(j + 1));
    TableWriter w(dir / "plot_profiles.csv", header);
    for (Eigen::Index g = 0; g < fit.profiles.means.rows(); ++g) {
      std::vector<std::string> m = {std::to_string(g + 1), "mean"}, mo = {std::to_string(g + 1), "mode"};
      for (Eigen::Index j = 0; j < fit.profiles.means.cols(); ++j) {
        m.push_back(format_number(fit.profiles.means(g, j)));
        mo.push_back(format_number(fit.profiles.modes(g, j)));
      }
      w.row(m);
      w.row(mo);
    }
    files.push_back(w.path());
  }
  {
    TableWriter w(dir / "plot_density.csv", {"estimand", "group", "x", "density"});
    auto emit = [&](const char* name, const GroupSamples& gs) {
      const auto grid = plot_grid(gs.samples);
      for (Eigen::Index g = 0; g < gs.samples.cols(); ++g) {
        const Eigen::VectorXd col = gs.samples.col(g);
        const auto dens = kernel_density(std::vector<double>(col.data(), col.data() + col.size()), grid);
        for (std::size_t k = 0; k < grid.size(); ++k) w.row({name, std::to_string(g + 1), format_number(grid[k]), format_number(dens[k])});
      }
    };
    emit("gate", fit.gate);
    emit("garr", fit.garr);
    files.push_back(w.path());
  }
  return files;
}

inline std::vector<std::filesystem::path> write_matching(const MatchingReport& m, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  {
    TableWriter w(dir / "matched_pairs.csv", {"treated", "control"});
    for (const auto& [a, b] : m.match.pairs) w.row({std::to_string(a + 1), std::to_string(b + 1)});
    files.push_back(w.path());
  }
  {
    TableWriter w(dir / "balance.csv", {"covariate", "smd_before", "smd_after", "degenerate"});
    for (const auto& r : m.balance) w.row({r.name, format_number(r.smd_before), format_number(r.smd_after), r.degenerate ? "1" : "0"});
    files.push_back(w.path());
  }
  {
    TableWriter w(dir / "propensity.csv", {"unit", "score", "matched"});
    for (Eigen::Index i = 0; i < m.match.scores.size(); ++i)
      w.row({std::to_string(i + 1), format_number(m.match.scores[i]), m.match.retained[static_cast<std::size_t>(i)] ? "1" : "0"});
    files.push_back(w.path());
  }
  return files;
}

inline std::vector<std::filesystem::path> write_synthetic(const SyntheticDataset& s, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  write_dataset(s.data, dir / "data.csv");
  files.push_back(dir / "data.csv");
  {
    TableWriter w(dir / "truth_units.csv", {"unit", "group", "y0", "y1"});
    for (std::size_t i = 0; i < s.data.n(); ++i)
      w.row({std::to_string(i + 1), std::to_string(s.true_groups[i] + 1), format_number(s.y0[static_cast<Eigen::Index>(i)]),
             format_number(s.y1[static_cast<Eigen::Index>(i)])});
    files.push_back(w.path());
  }
  {
    TableWriter w(dir / "truth_summary.csv", {"quantity", "group", "value"});
    for (std::size_t g = 0; g < s.true_gate.size(); ++g) w.row({"gate", std::to_string(g + 1), format_number(s.true_gate[g])});
    w.row({"ate_population", "NA", format_number(s.true_ate)});
    w.row({"ate_sample", "NA", format_number(s.sample_ate)});
    files.push_back(w.path());
  }
  return files;
}

/// Table-1-style rows (one per report) plus the raw per-replicate metrics.
inline std::vector<std::filesystem::path> write_study(const std::vector<StudyReport>& reports, const std::filesystem::path& dir) {
  std::size_t k = 0;
  for (const auto& r : reports) k = std::max(k, r.true_gate.size());
  std::vector<std::string> header = {"scenario", "n", "sigma2_beta", "reps", "ari_mean", "ari_sd", "bias_mean", "bias_sd", "mse"};
  for (std::size_t g = 1; g <= k; ++g) {
    header.push_back("true_gate_" + std::to_string(g));
    header.push_back("matched_gate_mean_" + std::to_string(g));
  }
  TableWriter w(dir / "study_report.csv", header);
  TableWriter raw(dir / "study_replicates.csv", {"scenario", "sigma2_beta", "replicate", "seed", "ari", "ate_estimate", "ate_bias", "ate_squared_error",
                                                  "clusters_control", "clusters_treated", "groups"});
  for (const auto& r : reports) {
    std::vector<std::string> row = {std::to_string(r.scenario), std::to_string(r.n), format_number(r.hyper.sigma2_beta), std::to_string(r.replicates.size()),
                                    format_number(r.ari_mean()), format_number(r.ari_sd()), format_number(r.bias_mean()), format_number(r.bias_sd()),
                                    format_number(r.mse())};
    for (std::size_t g = 0; g < k; ++g) {
      row.push_back(g < r.true_gate.size() ? format_number(r.true_gate[g]) : "NA");
      row.push_back(g < r.true_gate.size() ? format_number(r.matched_gate_mean(g)) : "NA");
    }
    w.row(row);
    for (const auto& m : r.replicates)
      raw.row({std::to_string(r.scenario), format_number(r.hyper.sigma2_beta), std::to_string(m.replicate + 1), std::to_string(m.seed), format_number(m.ari),
               format_number(m.ate_estimate), format_number(m.ate_bias), format_number(m.ate_squared_error), std::to_string(m.clusters_control),
               std::to_string(m.clusters_treated), std::to_string(m.groups)});
  }
  return {w.path(), raw.path()};
}

/// Plain-text manifest: software version, command line, seeds, configuration and outputs.
inline void write_manifest(const std::filesystem::path& dir, const std::string& command, const std::vector<std::pair<std::string, std::string>>& settings,
                           const std::vector<std::filesystem::path>& files) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / "manifest.txt");
  if (!f) throw InputError("cannot write manifest in " + dir.string());
  f << "software: cdbmm " << kSoftwareVersion << '\n';
  f << "command: " << command << '\n';
  for (const auto& [k, v] : settings) f << k << ": " << v << '\n';
  f << "files:\n";
  for (const auto& p : files) f << "  " << std::filesystem::relative(p, dir).generic_string() << '\n';
}

}  // namespace cdbmm
