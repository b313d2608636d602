#pragma once

// Simulated data-generating processes with known groups and effects, and replicate
// studies that fit the model to them and score the recovered groups and effects.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "cdbmm/errors.hpp"
#include "cdbmm/fit.hpp"
#include "cdbmm/model.hpp"
#include "cdbmm/partition.hpp"
#include "cdbmm/rng.hpp"

namespace cdbmm {

inline constexpr std::array<double, 5> kCovariateSuccess = {0.4, 0.6, 0.3, 0.5, 0.2};

inline double expit(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Group rule on the full five-covariate row; returns a zero-based group index.
using GroupRule = std::function<int(const std::array<int, 5>&)>;

struct ScenarioDefinition {
  int p = 2;                       // number of covariates exposed in the dataset
  std::vector<double> eta0, eta1;  // per-group potential-outcome means
  std::vector<double> sd0, sd1;    // per-group standard deviations
  GroupRule rule;
  bool extended_treatment = false;  // treatment law with X3 and X4*X5 terms

  int groups() const { return static_cast<int>(eta0.size()); }
  std::vector<double> gate() const {
    std::vector<double> g(eta0.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = eta1[k] - eta0[k];
    return g;
  }
  double treatment_probability(const std::array<int, 5>& x) const {
    double lin = 0.4 * x[0] + 0.6 * x[1];
    if (extended_treatment) lin += -0.3 * x[2] + 0.2 * x[3] * x[4];
    return expit(lin);
  }
};

inline int three_group_rule(const std::array<int, 5>& x) {
  if (x[0] == 1) return 1;
  return x[1] == 1 ? 2 : 0;
}

/// Built-in scenario `id` in 1..7.
inline ScenarioDefinition scenario_definition(int id) {
  auto same = [](double v, std::size_t k) { return std::vector<double>(k, v); };
  ScenarioDefinition d;
  switch (id) {
    case 1:
      d.eta0 = {2, 4, 6}, d.eta1 = {0, 3, 6}, d.sd0 = d.sd1 = same(0.3, 3), d.rule = three_group_rule;
      break;
    case 2:
      d.eta0 = {0, 2.2, 4.4}, d.eta1 = {0, 0, 0}, d.sd0 = d.sd1 = same(0.2, 3), d.rule = three_group_rule;
      break;
    case 3:
      d.eta0 = {1, 2, 3}, d.eta1 = {0, 1.5, 3}, d.sd0 = {0.2, 0.25, 0.25}, d.sd1 = {0.25, 0.3, 0.2};
      d.rule = three_group_rule;
      break;
    case 4:
      d.eta0 = {1, 2, 3, 3}, d.eta1 = {0, 1.5, 3, 4.5}, d.sd0 = d.sd1 = same(0.2, 4);
      d.rule = [](const std::array<int, 5>& x) {
        if (x[0] == 0) return x[1] == 1 ? 0 : 1;
        return x[1] == 1 ? 2 : 3;
      };
      break;
    case 5:
      d.p = 5, d.extended_treatment = true;
      d.eta0 = {2, 2, 3, 4.5, 6.5}, d.eta1 = {0, 1, 2.5, 5, 7.5}, d.sd0 = d.sd1 = same(0.2, 5);
      d.rule = [](const std::array<int, 5>& x) {
        if (x[0] == 1 && x[1] == 1) return 0;
        if (x[0] == 0 && x[2] == 1) return 1;
        if (x[0] == 0 && x[2] == 0 && x[3] == 1) return 2;
        if (x[0] == 0 && x[2] == 0 && x[3] == 0) return 3;
        return 4;
      };
      break;
    case 6:
      d.eta0 = {1.5, 2, 2.5}, d.eta1 = {1, 1.75, 2.5}, d.sd0 = d.sd1 = same(0.3, 3), d.rule = three_group_rule;
      break;
    case 7:
      d.eta0 = {2}, d.eta1 = {3}, d.sd0 = d.sd1 = same(0.5, 1), d.rule = [](const std::array<int, 5>&) { return 0; };
      break;
    default:
      throw InputError("unknown scenario id " + std::to_string(id) + " (expected 1..7)");
  }
  return d;
}

struct ScenarioOverrides {
  std::optional<std::vector<double>> eta0, eta1, sd0, sd1;
  GroupRule rule;
  std::optional<int> groups;  // required with a custom rule whose group count differs
};

struct ScenarioSpec {
  int id = 1;
  std::size_t n = 500;
  std::uint64_t seed = 1;
  ScenarioOverrides overrides;

  ScenarioDefinition definition() const {
    ScenarioDefinition d = scenario_definition(id);
    const auto& o = overrides;
    if (o.eta0) d.eta0 = *o.eta0;
    if (o.eta1) d.eta1 = *o.eta1;
    if (o.sd0) d.sd0 = *o.sd0;
    if (o.sd1) d.sd1 = *o.sd1;
    if (o.rule) d.rule = o.rule;
    const std::size_t k = d.eta0.size();
    if (d.eta1.size() != k || d.sd0.size() != k || d.sd1.size() != k)
      throw InputError("scenario overrides: eta/sd vectors must all have one entry per group");
    if (o.groups && static_cast<std::size_t>(*o.groups) != k)
      throw InputError("scenario overrides: declared group count does not match eta/sd vectors");
    for (double s : d.sd0)
      if (!(s > 0.0)) throw InputError("scenario overrides: standard deviations must be positive");
    for (double s : d.sd1)
      if (!(s > 0.0)) throw InputError("scenario overrides: standard deviations must be positive");
    return d;
  }
};

struct SyntheticDataset {
  Dataset data;
  std::vector<int> true_groups;
  Eigen::VectorXd y0, y1;
  std::vector<double> true_gate;
  double true_ate = 0.0;    // population value under the covariate law
  double sample_ate = 0.0;  // mean of y1 - y0 over the simulated units
};

/// Population group probabilities implied by the independent Bernoulli covariate law.
inline std::vector<double> group_probabilities(const ScenarioDefinition& d) {
  std::vector<double> prob(static_cast<std::size_t>(d.groups()), 0.0);
  for (int mask = 0; mask < 32; ++mask) {
    std::array<int, 5> x{};
    double pr = 1.0;
    for (int j = 0; j < 5; ++j) {
      x[static_cast<std::size_t>(j)] = (mask >> j) & 1;
      pr *= x[static_cast<std::size_t>(j)] ? kCovariateSuccess[static_cast<std::size_t>(j)] : 1.0 - kCovariateSuccess[static_cast<std::size_t>(j)];
    }
    prob[static_cast<std::size_t>(d.rule(x))] += pr;
  }
  return prob;
}

inline SyntheticDataset simulate_scenario(const ScenarioSpec& spec) {
  if (spec.n < 2) throw InputError("simulate_scenario: n must be at least 2");
  const ScenarioDefinition d = spec.definition();
  RngHandle rng(spec.seed);
  const std::size_t n = spec.n;
  SyntheticDataset s;
  s.data.y.resize(static_cast<Eigen::Index>(n));
  s.data.t.resize(n);
  s.data.x.resize(static_cast<Eigen::Index>(n), d.p);
  s.y0.resize(static_cast<Eigen::Index>(n));
  s.y1.resize(static_cast<Eigen::Index>(n));
  s.true_groups.resize(n);
  for (int j = 0; j < d.p; ++j) {
    s.data.column_names.push_back("x" + std::to_string(j + 1));
    s.data.categorical.push_back(true);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    std::array<int, 5> x{};
    for (std::size_t j = 0; j < 5; ++j) x[j] = rng.uniform() < kCovariateSuccess[j] ? 1 : 0;
    const int t = rng.uniform() < d.treatment_probability(x) ? 1 : 0;
    const int g = d.rule(x);
    if (g < 0 || g >= d.groups()) throw InputError("simulate_scenario: group rule returned an out-of-range group");
    const auto ug = static_cast<std::size_t>(g);
    s.y0[ii] = d.eta0[ug] + d.sd0[ug] * rng.normal();
    s.y1[ii] = d.eta1[ug] + d.sd1[ug] * rng.normal();
    for (int j = 0; j < d.p; ++j) s.data.x(ii, j) = x[static_cast<std::size_t>(j)];
    s.data.t[i] = t;
    s.data.y[ii] = t == 1 ? s.y1[ii] : s.y0[ii];
    s.true_groups[i] = g;
  }
  s.true_gate = d.gate();
  const auto prob = group_probabilities(d);
  for (std::size_t g = 0; g < prob.size(); ++g) s.true_ate += prob[g] * s.true_gate[g];
  s.sample_ate = (s.y1 - s.y0).mean();
  return s;
}

/// Maximum-weight assignment of rows to columns (Hungarian algorithm on the padded square
/// matrix). Returns, per row, the matched column or -1.
inline std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weight) {
  const auto rows = static_cast<int>(weight.rows()), cols = static_cast<int>(weight.cols());
  const int m = std::max(rows, cols);
  const double top = weight.size() ? weight.maxCoeff() : 0.0;
  // Minimize cost = top - weight on a 1-indexed square matrix.
  auto cost = [&](int i, int j) { return (i <= rows && j <= cols) ? top - weight(i - 1, j - 1) : top; };
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(m + 1), 0.0), v(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<int> match(static_cast<std::size_t>(m + 1), 0), way(static_cast<std::size_t>(m + 1), 0);
  for (int i = 1; i <= m; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[uj];
        if (cur < minv[uj]) {
          minv[uj] = cur;
          way[uj] = j0;
        }
        if (minv[uj] < delta) {
          delta = minv[uj];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) {
          u[static_cast<std::size_t>(match[uj])] += delta;
          v[uj] -= delta;
        } else {
          minv[uj] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(rows), -1);
  for (int j = 1; j <= cols; ++j) {
    const int i = match[static_cast<std::size_t>(j)];
    if (i >= 1 && i <= rows) row_to_col[static_cast<std::size_t>(i - 1)] = j - 1;
  }
  return row_to_col;
}

/// Metrics of one fitted replicate.
struct ReplicateMetrics {
  int replicate = 0;
  std::uint64_t seed = 0;
  double ari = 0.0;
  double ate_estimate = 0.0;
  double ate_bias = 0.0;
  double ate_squared_error = 0.0;
  std::size_t clusters_control = 0;
  std::size_t clusters_treated = 0;
  std::size_t groups = 0;
  std::vector<double> matched_gate;      // per true group: posterior-mean GATE of its matched estimated group (NaN if none)
  std::vector<double> matched_gate_error;
};

struct StudyReport {
  int scenario = 0;
  std::size_t n = 0;
  Hyperparams hyper;
  std::vector<double> true_gate;
  std::vector<ReplicateMetrics> replicates;

  double ari_mean() const { return mean_of([](const ReplicateMetrics& r) { return r.ari; }); }
  double ari_sd() const { return sd_of([](const ReplicateMetrics& r) { return r.ari; }); }
  double bias_mean() const { return mean_of([](const ReplicateMetrics& r) { return r.ate_bias; }); }
  double bias_sd() const { return sd_of([](const ReplicateMetrics& r) { return r.ate_bias; }); }
  double mse() const { return mean_of([](const ReplicateMetrics& r) { return r.ate_squared_error; }); }

  /// Replicate mean of the matched GATE estimate for true group g (NaN entries skipped).
  double matched_gate_mean(std::size_t g) const {
    double s = 0.0;
    int c = 0;
    for (const auto& r : replicates)
      if (g < r.matched_gate.size() && std::isfinite(r.matched_gate[g])) {
        s += r.matched_gate[g];
        ++c;
      }
    return c ? s / c : std::nan("");
  }

 private:
  template <class F>
  double mean_of(F f) const {
    double s = 0.0;
    for (const auto& r : replicates) s += f(r);
    return replicates.empty() ? std::nan("") : s / static_cast<double>(replicates.size());
  }
  template <class F>
  double sd_of(F f) const {
    if (replicates.size() < 2) return 0.0;
    const double m = mean_of(f);
    double s = 0.0;
    for (const auto& r : replicates) s += (f(r) - m) * (f(r) - m);
    return std::sqrt(s / static_cast<double>(replicates.size() - 1));
  }
};

/// Score a fit against the simulation truth.
inline ReplicateMetrics score_replicate(const SyntheticDataset& sim, const FitResult& fit) {
  ReplicateMetrics m;
  m.ari = adjusted_rand_index(Partition(fit.groups), Partition(sim.true_groups));
  m.ate_estimate = fit.ate.summary.mean;
  m.ate_bias = bias(m.ate_estimate, sim.true_ate);
  m.ate_squared_error = squared_error(m.ate_estimate, sim.true_ate);
  m.clusters_control = fit.occupied_clusters(0);
  m.clusters_treated = fit.occupied_clusters(1);
  m.groups = static_cast<std::size_t>(group_count(fit.groups));

  const int k_true = static_cast<int>(sim.true_gate.size());
  const int k_est = group_count(fit.groups);
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(k_true, k_est);
  for (std::size_t i = 0; i < fit.groups.size(); ++i) overlap(sim.true_groups[i], fit.groups[i]) += 1.0;
  const auto assign = max_weight_assignment(overlap);
  for (int g = 0; g < k_true; ++g) {
    const int h = assign[static_cast<std::size_t>(g)];
    const double est = (h >= 0 && overlap(g, h) > 0.0) ? fit.gate.summary[static_cast<std::size_t>(h)].mean : std::nan("");
    m.matched_gate.push_back(est);
    m.matched_gate_error.push_back(est - sim.true_gate[static_cast<std::size_t>(g)]);
  }
  return m;
}

struct StudyConfig {
  FitOptions fit;
  int n_reps = 10;
  int workers = 1;
};

/// Simulate, fit and score `n_reps` replicates. Replicate r uses simulation seed
/// split(spec.seed, 2r) and chain seed split(spec.seed, 2r + 1), so results do not depend
/// on the worker count.
inline StudyReport replicate_study(const ScenarioSpec& spec, const StudyConfig& cfg) {
  if (cfg.n_reps < 1) throw InputError("replicate_study: n_reps must be at least 1");
  StudyReport report;
  report.scenario = spec.id;
  report.n = spec.n;
  report.hyper = cfg.fit.hyper;
  report.true_gate = spec.definition().gate();
  report.replicates.resize(static_cast<std::size_t>(cfg.n_reps));

  auto one = [&](int r) {
    try {
      ScenarioSpec rs = spec;
      rs.seed = RngHandle::split_seed(spec.seed, 2 * static_cast<std::uint64_t>(r));
      FitOptions fo = cfg.fit;
      fo.chain.seed = RngHandle::split_seed(spec.seed, 2 * static_cast<std::uint64_t>(r) + 1);
      const SyntheticDataset sim = simulate_scenario(rs);
      const FitResult fit = fit_model(sim.data, fo);
      ReplicateMetrics m = score_replicate(sim, fit);
      m.replicate = r;
      m.seed = rs.seed;
      report.replicates[static_cast<std::size_t>(r)] = std::move(m);
    } catch (const std::exception& e) {
      throw NumericError("replicate " + std::to_string(r) + ": " + e.what());
    }
  };

  const int workers = std::max(1, std::min(cfg.workers, cfg.n_reps));
  if (workers == 1) {
    for (int r = 0; r < cfg.n_reps; ++r) one(r);
    return report;
  }
  std::atomic<int> next{0};
  std::vector<std::future<void>> pool;
  for (int w = 0; w < workers; ++w)
    pool.push_back(std::async(std::launch::async, [&] {
      for (int r = next++; r < cfg.n_reps; r = next++) one(r);
    }));
  for (auto& f : pool) f.get();
  return report;
}

/// One replicate study per σ²_β value, everything else fixed.
inline std::vector<StudyReport> sensitivity_grid(const ScenarioSpec& spec, const std::vector<double>& sigma2_beta_values,
                                                 const StudyConfig& cfg) {
  std::vector<StudyReport> out;
  for (double v : sigma2_beta_values) {
    if (!(v > 0.0)) throw InputError("sensitivity_grid: sigma2_beta values must be positive");
    StudyConfig c = cfg;
    c.fit.hyper.sigma2_beta = v;
    out.push_back(replicate_study(spec, c));
  }
  return out;
}

}  // namespace cdbmm
