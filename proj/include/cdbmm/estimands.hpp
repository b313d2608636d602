#pragma once

// Heterogeneity groups from the two arms' point-estimate partitions, and posterior
// samples of group-level causal effects computed from imputed potential outcomes.

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cdbmm/errors.hpp"
#include "cdbmm/gibbs.hpp"
#include "cdbmm/model.hpp"
#include "cdbmm/partition.hpp"

namespace cdbmm {

/// Cartesian-product groups: units share a group iff they share a cluster in both
/// partitions. Labels are contiguous from 0 in order of first appearance.
inline std::vector<int> form_groups(const Partition& control, const Partition& treated) {
  if (control.n() != treated.n()) throw InputError("form_groups: partitions have different lengths");
  std::map<std::pair<int, int>, int> cell;
  std::vector<int> g(control.n());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto [it, _] = cell.try_emplace({control.labels[i], treated.labels[i]}, static_cast<int>(cell.size()));
    g[i] = it->second;
  }
  return g;
}

inline int group_count(const std::vector<int>& groups) {
  return groups.empty() ? 0 : *std::max_element(groups.begin(), groups.end()) + 1;
}

inline std::vector<int> group_sizes(const std::vector<int>& groups) {
  std::vector<int> sizes(static_cast<std::size_t>(group_count(groups)), 0);
  for (int g : groups) ++sizes[static_cast<std::size_t>(g)];
  return sizes;
}

struct PosteriorSummary {
  double mean = 0.0;
  double median = 0.0;
  double lower = 0.0;  // 2.5% quantile
  double upper = 0.0;  // 97.5% quantile
};

/// Sample quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline PosteriorSummary summarize(const std::vector<double>& samples) {
  PosteriorSummary s;
  if (samples.empty()) {
    s.mean = s.median = s.lower = s.upper = std::nan("");
    return s;
  }
  double total = 0.0;
  for (double v : samples) total += v;
  s.mean = total / static_cast<double>(samples.size());
  s.median = quantile(samples, 0.5);
  s.lower = quantile(samples, 0.025);
  s.upper = quantile(samples, 0.975);
  return s;
}

/// Per-group samples of an estimand: samples(r, g).
struct GroupSamples {
  Eigen::MatrixXd samples;             // draws x groups
  std::vector<PosteriorSummary> summary;
  std::vector<int> undefined_draws;    // per group; nonzero only for ratio estimands
};

namespace detail {

// Group means of each arm's imputed outcomes at one draw.
inline std::pair<std::vector<double>, std::vector<double>> group_arm_means(const Draw& d, const std::vector<int>& groups, int k) {
  std::vector<double> m0(static_cast<std::size_t>(k), 0.0), m1(static_cast<std::size_t>(k), 0.0), cnt(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto g = static_cast<std::size_t>(groups[i]);
    m0[g] += d.y_imputed[0][static_cast<Eigen::Index>(i)];
    m1[g] += d.y_imputed[1][static_cast<Eigen::Index>(i)];
    cnt[g] += 1.0;
  }
  for (std::size_t g = 0; g < m0.size(); ++g) {
    m0[g] /= cnt[g];
    m1[g] /= cnt[g];
  }
  return {m0, m1};
}

inline void check_groups(const PosteriorDraws& draws, const std::vector<int>& groups) {
  if (groups.size() != draws.n) throw InputError("group labels and posterior draws cover different units");
}

}  // namespace detail

/// GATE_g at draw r: mean over units in g of y(1) - y(0).
inline GroupSamples gate_posterior(const PosteriorDraws& draws, const std::vector<int>& groups) {
  detail::check_groups(draws, groups);
  const int k = group_count(groups);
  GroupSamples out;
  out.samples.resize(static_cast<Eigen::Index>(draws.draws.size()), k);
  out.undefined_draws.assign(static_cast<std::size_t>(k), 0);
  for (std::size_t r = 0; r < draws.draws.size(); ++r) {
    std::vector<double> diff(static_cast<std::size_t>(k), 0.0), cnt(static_cast<std::size_t>(k), 0.0);
    const Draw& d = draws.draws[r];
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const auto g = static_cast<std::size_t>(groups[i]);
      diff[g] += d.y_imputed[1][static_cast<Eigen::Index>(i)] - d.y_imputed[0][static_cast<Eigen::Index>(i)];
      cnt[g] += 1.0;
    }
    for (int g = 0; g < k; ++g) out.samples(static_cast<Eigen::Index>(r), g) = diff[static_cast<std::size_t>(g)] / cnt[static_cast<std::size_t>(g)];
  }
  for (int g = 0; g < k; ++g) {
    const Eigen::VectorXd col = out.samples.col(g);
    out.summary.push_back(summarize(std::vector<double>(col.data(), col.data() + col.size())));
  }
  return out;
}

inline constexpr double kRatioDenominatorFloor = 1e-12;

/// GARR_g at draw r: mean_g y(1) / mean_g y(0). Draws whose denominator is within 1e-12 of
/// zero are counted in `undefined_draws` and stored as NaN; a group with any such draw has an
/// undefined (NaN) summary.
inline GroupSamples garr_posterior(const PosteriorDraws& draws, const std::vector<int>& groups) {
  detail::check_groups(draws, groups);
  const int k = group_count(groups);
  GroupSamples out;
  out.samples.resize(static_cast<Eigen::Index>(draws.draws.size()), k);
  out.undefined_draws.assign(static_cast<std::size_t>(k), 0);
  for (std::size_t r = 0; r < draws.draws.size(); ++r) {
    const auto [m0, m1] = detail::group_arm_means(draws.draws[r], groups, k);
    for (int g = 0; g < k; ++g) {
      const auto ug = static_cast<std::size_t>(g);
      if (std::abs(m0[ug]) <= kRatioDenominatorFloor) {
        ++out.undefined_draws[ug];
        out.samples(static_cast<Eigen::Index>(r), g) = std::nan("");
      } else {
        out.samples(static_cast<Eigen::Index>(r), g) = m1[ug] / m0[ug];
      }
    }
  }
  for (int g = 0; g < k; ++g) {
    if (out.undefined_draws[static_cast<std::size_t>(g)] > 0) {
      out.summary.push_back(summarize({}));
      continue;
    }
    const Eigen::VectorXd col = out.samples.col(g);
    out.summary.push_back(summarize(std::vector<double>(col.data(), col.data() + col.size())));
  }
  return out;
}

struct AteSamples {
  std::vector<double> samples;
  PosteriorSummary summary;
};

/// ATE at draw r: mean over all units of y(1) - y(0).
inline AteSamples ate_posterior(const PosteriorDraws& draws) {
  AteSamples out;
  out.samples.reserve(draws.draws.size());
  for (const Draw& d : draws.draws) out.samples.push_back((d.y_imputed[1] - d.y_imputed[0]).mean());
  out.summary = summarize(out.samples);
  return out;
}

inline double bias(double estimate, double truth) { return estimate - truth; }
inline double squared_error(double estimate, double truth) { return (estimate - truth) * (estimate - truth); }

/// Per-group covariate means; columns flagged categorical also report the modal level
/// (smallest level on ties). `modes` is NaN for non-categorical columns.
struct GroupProfiles {
  Eigen::MatrixXd means;  // groups x p
  Eigen::MatrixXd modes;  // groups x p
};

inline GroupProfiles group_profiles(const std::vector<int>& groups, const Dataset& data) {
  if (groups.size() != data.n()) throw InputError("group_profiles: group labels and dataset differ in length");
  const int k = group_count(groups);
  const auto p = static_cast<Eigen::Index>(data.p());
  GroupProfiles out{Eigen::MatrixXd::Zero(k, p), Eigen::MatrixXd::Constant(k, p, std::nan(""))};
  const std::vector<int> sizes = group_sizes(groups);
  for (std::size_t i = 0; i < groups.size(); ++i) out.means.row(groups[i]) += data.x.row(static_cast<Eigen::Index>(i));
  for (int g = 0; g < k; ++g) out.means.row(g) /= static_cast<double>(sizes[static_cast<std::size_t>(g)]);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (data.categorical.empty() || !data.categorical[static_cast<std::size_t>(j)]) continue;
    std::vector<std::map<double, int>> freq(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < groups.size(); ++i) ++freq[static_cast<std::size_t>(groups[i])][data.x(static_cast<Eigen::Index>(i), j)];
    for (int g = 0; g < k; ++g) {
      int best = -1;
      for (const auto& [level, c] : freq[static_cast<std::size_t>(g)])
        if (c > best) {
          best = c;
          out.modes(g, j) = level;
        }
    }
  }
  return out;
}

}  // namespace cdbmm
