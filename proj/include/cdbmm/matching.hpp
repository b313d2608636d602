#pragma once

// Propensity-score preprocessing: logistic propensity by IRLS, greedy 1-to-1 nearest-neighbour
// matching without replacement, and standardized mean differences before/after matching.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cdbmm/errors.hpp"
#include "cdbmm/model.hpp"

namespace cdbmm {

struct PropensityOptions {
  double ridge = 0.0;  // L2 penalty on the slopes (intercept unpenalized)
  double tolerance = 1e-8;
  int max_iter = 100;
};

struct PropensityFit {
  Eigen::VectorXd coef;    // intercept first
  Eigen::VectorXd scores;  // fitted probabilities
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline std::string column_label(const std::vector<std::string>& names, Eigen::Index j) {
  if (static_cast<std::size_t>(j) < names.size()) return names[static_cast<std::size_t>(j)];
  return "x" + std::to_string(j + 1);
}

// Columns of [1 X] that are linear combinations of the columns before them.
inline std::vector<Eigen::Index> collinear_columns(const Eigen::MatrixXd& design) {
  std::vector<Eigen::Index> bad;
  std::vector<Eigen::Index> kept;
  const double scale = std::max(1.0, design.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    kept.push_back(j);
    Eigen::MatrixXd sub(design.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = design.col(kept[k]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    qr.setThreshold(1e-10 * scale);
    if (qr.rank() < static_cast<Eigen::Index>(kept.size())) {
      bad.push_back(j);
      kept.pop_back();
    }
  }
  return bad;
}

}  // namespace detail

/// Logistic regression of t on [1 X] by iteratively reweighted least squares. Stops when the
/// largest absolute score entry drops below the tolerance or after max_iter steps.
inline PropensityFit fit_propensity(const Eigen::MatrixXd& X, const std::vector<int>& t, const PropensityOptions& opt = {},
                                    const std::vector<std::string>& names = {}) {
  const Eigen::Index n = X.rows();
  if (static_cast<std::size_t>(n) != t.size()) throw InputError("fit_propensity: X and t differ in length");
  const auto treated = std::count(t.begin(), t.end(), 1);
  if (treated == 0 || treated == n) throw InputError("fit_propensity: both treatment arms must be non-empty");
  for (int v : t)
    if (v != 0 && v != 1) throw InputError("fit_propensity: treatment must be 0/1");
  if (opt.ridge < 0.0 || !std::isfinite(opt.ridge)) throw InputError("fit_propensity: ridge must be non-negative");

  const Eigen::Index q = X.cols() + 1;
  Eigen::MatrixXd D(n, q);
  D.col(0).setOnes();
  D.rightCols(q - 1) = X;
  if (opt.ridge == 0.0) {
    const auto bad = detail::collinear_columns(D);
    if (!bad.empty()) {
      std::string msg = "fit_propensity: design is rank deficient; collinear column(s):";
      for (Eigen::Index j : bad) msg += " " + (j == 0 ? std::string("(intercept)") : detail::column_label(names, j - 1));
      throw NumericError(msg);
    }
  }
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = t[static_cast<std::size_t>(i)];
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(q, opt.ridge);
  penalty[0] = 0.0;

  PropensityFit fit;
  fit.coef = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd p(n);
  for (int it = 1; it <= opt.max_iter; ++it) {
    const Eigen::VectorXd eta = D * fit.coef;
    p = eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
    const Eigen::VectorXd score = D.transpose() * (y - p) - penalty.cwiseProduct(fit.coef);
    fit.iterations = it - 1;
    if (score.cwiseAbs().maxCoeff() < opt.tolerance) {
      fit.converged = true;
      break;
    }
    const Eigen::VectorXd w = (p.array() * (1.0 - p.array())).matrix();
    Eigen::MatrixXd info = D.transpose() * w.asDiagonal() * D;
    info.diagonal() += penalty;
    const Eigen::VectorXd step = info.ldlt().solve(score);
    fit.coef += step;
    fit.iterations = it;
    if (!fit.coef.allFinite() || fit.coef.cwiseAbs().maxCoeff() > 30.0)
      throw NumericError("fit_propensity: coefficients diverge (perfect or quasi-perfect separation); refit with a ridge penalty");
  }
  const Eigen::VectorXd eta = D * fit.coef;
  fit.scores = eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
  if (!fit.converged) {
    const Eigen::VectorXd score = D.transpose() * (y - fit.scores) - penalty.cwiseProduct(fit.coef);
    fit.converged = score.cwiseAbs().maxCoeff() < opt.tolerance;
  }
  return fit;
}

struct MatchResult {
  std::vector<std::pair<int, int>> pairs;  // (treated index, control index)
  std::vector<bool> retained;
  Eigen::VectorXd scores;
};

/// Greedy matching without replacement: treated units in decreasing score order (ties by
/// index), each paired with the unmatched control nearest in score, ties to the lower control
/// index. A treated unit whose nearest control lies beyond `caliper` stays unmatched.
inline MatchResult nearest_neighbor_match(const Eigen::VectorXd& scores, const std::vector<int>& t, std::optional<double> caliper = std::nullopt) {
  const auto n = static_cast<std::size_t>(scores.size());
  if (n != t.size()) throw InputError("nearest_neighbor_match: scores and t differ in length");
  std::vector<int> treated;
  std::set<std::pair<double, int>> controls;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = scores[static_cast<Eigen::Index>(i)];
    if (!(s > 0.0 && s < 1.0)) throw InputError("nearest_neighbor_match: scores must lie in (0,1)");
    if (t[i] == 1) treated.push_back(static_cast<int>(i));
    else if (t[i] == 0) controls.emplace(s, static_cast<int>(i));
    else throw InputError("nearest_neighbor_match: treatment must be 0/1");
  }
  if (treated.empty() || controls.empty()) throw InputError("nearest_neighbor_match: both treatment arms must be non-empty");
  if (caliper && !(*caliper > 0.0)) throw InputError("nearest_neighbor_match: caliper must be positive");
  std::stable_sort(treated.begin(), treated.end(), [&](int a, int b) { return scores[a] > scores[b]; });

  MatchResult out;
  out.scores = scores;
  out.retained.assign(n, false);
  constexpr int lowest = std::numeric_limits<int>::min();
  for (int i : treated) {
    if (controls.empty()) break;
    const double s = scores[i];
    auto hi = controls.lower_bound({s, lowest});
    std::optional<std::pair<double, int>> best;
    double best_d = std::numeric_limits<double>::infinity();
    auto consider = [&](double cs) {
      // first element of the run with score cs has the lowest index among them
      const auto& c = *controls.lower_bound({cs, lowest});
      const double d = std::abs(c.first - s);
      if (d < best_d || (d == best_d && best && c.second < best->second)) {
        best_d = d;
        best = c;
      }
    };
    if (hi != controls.end()) consider(hi->first);
    if (hi != controls.begin()) consider(std::prev(hi)->first);
    if (!best || (caliper && best_d > *caliper)) continue;
    out.pairs.emplace_back(i, best->second);
    out.retained[static_cast<std::size_t>(i)] = true;
    out.retained[static_cast<std::size_t>(best->second)] = true;
    controls.erase(*best);
  }
  return out;
}

struct BalanceRow {
  std::string name;
  double smd_before = 0.0;
  double smd_after = 0.0;
  bool degenerate = false;  // zero pooled variance with unequal means
};

namespace detail {

struct ArmMoments {
  double mean[2] = {0.0, 0.0};
  double var[2] = {0.0, 0.0};
};

template <class Value, class Keep>
ArmMoments arm_moments(std::size_t n, const std::vector<int>& t, Value value, Keep keep) {
  ArmMoments m;
  double cnt[2] = {0.0, 0.0}, sum[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep(i)) continue;
    cnt[t[i]] += 1.0;
    sum[t[i]] += value(i);
  }
  for (int a = 0; a < 2; ++a) m.mean[a] = cnt[a] > 0 ? sum[a] / cnt[a] : std::nan("");
  double ss[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep(i)) continue;
    const double d = value(i) - m.mean[t[i]];
    ss[t[i]] += d * d;
  }
  for (int a = 0; a < 2; ++a) m.var[a] = cnt[a] > 1 ? ss[a] / (cnt[a] - 1.0) : 0.0;
  return m;
}

template <class Value>
BalanceRow balance_row(std::string name, std::size_t n, const std::vector<int>& t, const std::vector<bool>& retained, Value value) {
  const ArmMoments pre = arm_moments(n, t, value, [](std::size_t) { return true; });
  const ArmMoments post = arm_moments(n, t, value, [&](std::size_t i) { return retained[i]; });
  const double pooled = std::sqrt(0.5 * (pre.var[0] + pre.var[1]));
  BalanceRow row{std::move(name), 0.0, 0.0, false};
  auto smd = [&](const ArmMoments& m) {
    const double diff = m.mean[1] - m.mean[0];
    if (pooled > 0.0) return diff / pooled;
    if (diff == 0.0) return 0.0;
    row.degenerate = true;
    return std::nan("");
  };
  row.smd_before = smd(pre);
  row.smd_after = smd(post);
  return row;
}

}  // namespace detail

/// SMD per covariate and for the propensity score: (mean treated - mean control) divided by
/// the pre-match pooled sd sqrt((s_t^2 + s_c^2) / 2), the same denominator before and after.
inline std::vector<BalanceRow> balance_table(const Eigen::MatrixXd& X, const std::vector<int>& t, const MatchResult& match,
                                             const std::vector<std::string>& names = {}) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (n != t.size() || n != match.retained.size()) throw InputError("balance_table: X, t and match cover different units");
  std::vector<BalanceRow> rows;
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    rows.push_back(detail::balance_row(detail::column_label(names, j), n, t, match.retained,
                                       [&](std::size_t i) { return X(static_cast<Eigen::Index>(i), j); }));
  if (match.scores.size() == X.rows())
    rows.push_back(detail::balance_row("propensity_score", n, t, match.retained,
                                       [&](std::size_t i) { return match.scores[static_cast<Eigen::Index>(i)]; }));
  return rows;
}

/// Dataset restricted to the matched units, in original order.
inline Dataset matched_subset(const Dataset& data, const MatchResult& match) {
  if (match.retained.size() != data.n()) throw InputError("matched_subset: match and dataset differ in length");
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < data.n(); ++i)
    if (match.retained[i]) keep.push_back(static_cast<Eigen::Index>(i));
  Dataset out;
  out.column_names = data.column_names;
  out.categorical = data.categorical;
  out.y.resize(static_cast<Eigen::Index>(keep.size()));
  out.x.resize(static_cast<Eigen::Index>(keep.size()), data.x.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.y[static_cast<Eigen::Index>(k)] = data.y[keep[k]];
    out.x.row(static_cast<Eigen::Index>(k)) = data.x.row(keep[k]);
    out.t.push_back(data.t[static_cast<std::size_t>(keep[k])]);
  }
  return out;
}

struct MatchOptions {
  PropensityOptions propensity;
  std::optional<double> caliper;
};

struct MatchingReport {
  PropensityFit propensity;
  MatchResult match;
  std::vector<BalanceRow> balance;
  Dataset matched;
};

inline MatchingReport match_dataset(const Dataset& data, const MatchOptions& opt = {}) {
  data.validate();
  MatchingReport r;
  r.propensity = fit_propensity(data.x, data.t, opt.propensity, data.column_names);
  r.match = nearest_neighbor_match(r.propensity.scores, data.t, opt.caliper);
  r.balance = balance_table(data.x, data.t, r.match, data.column_names);
  r.matched = matched_subset(data, r.match);
  return r;
}

}  // namespace cdbmm
