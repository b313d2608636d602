#pragma once

// Posterior summaries over partitions: co-clustering (similarity) matrix, expected
// Binder / variation-of-information losses, point estimation, adjusted Rand index.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cdbmm/errors.hpp"

namespace cdbmm {

/// Cluster labels per unit. Labels are arbitrary integers; only the co-clustering relation matters.
struct Partition {
  std::vector<int> labels;

  Partition() = default;
  explicit Partition(std::vector<int> l) : labels(std::move(l)) {}

  std::size_t n() const { return labels.size(); }

  /// Relabel 0, 1, 2, ... in order of first appearance.
  Partition canonical() const {
    std::map<int, int> remap;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto [it, _] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
      out[i] = it->second;
    }
    return Partition(std::move(out));
  }

  std::size_t num_clusters() const { return std::set<int>(labels.begin(), labels.end()).size(); }

  /// Same co-clustering relation.
  bool equivalent(const Partition& other) const { return canonical().labels == other.canonical().labels; }
};

enum class PartitionLoss { binder, vi };

inline PartitionLoss parse_partition_loss(std::string_view name) {
  if (name == "binder") return PartitionLoss::binder;
  if (name == "vi") return PartitionLoss::vi;
  throw InputError("unknown partition loss '" + std::string(name) + "' (expected binder or vi)");
}

inline std::string_view to_string(PartitionLoss loss) { return loss == PartitionLoss::binder ? "binder" : "vi"; }

/// Empirical co-clustering frequencies over the given allocation draws (n x n, unit diagonal).
inline Eigen::MatrixXd build_psm(std::span<const std::vector<int>> draws) {
  if (draws.empty()) throw InputError("build_psm: need at least one draw");
  const std::size_t n = draws.front().size();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::vector<int>> members;
  for (const auto& s : draws) {
    if (s.size() != n) throw InputError("build_psm: draws have different lengths");
    std::map<int, std::vector<int>> by_label;
    for (std::size_t i = 0; i < n; ++i) by_label[s[i]].push_back(static_cast<int>(i));
    for (const auto& [label, idx] : by_label) {
      for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b) counts(idx[b], idx[a]) += 1.0;
    }
  }
  counts /= static_cast<double>(draws.size());
  Eigen::MatrixXd psm = counts.triangularView<Eigen::StrictlyLower>();
  psm += counts.triangularView<Eigen::StrictlyLower>().transpose();
  psm.diagonal().setOnes();
  return psm;
}

/// Posterior expected Binder loss, sum_{i<j} |1[c_i = c_j] - psm_ij|.
inline double expected_binder_loss(const Partition& c, const Eigen::MatrixXd& psm) {
  const auto n = static_cast<Eigen::Index>(c.n());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int cj = c.labels[static_cast<std::size_t>(j)];
    for (Eigen::Index i = j + 1; i < n; ++i)
      loss += (c.labels[static_cast<std::size_t>(i)] == cj) ? 1.0 - psm(i, j) : psm(i, j);
  }
  return loss;
}

/// Lower bound of the posterior expected variation of information (Wade & Ghahramani form):
/// (1/n) sum_i [ log2 |c_i| + log2 sum_j psm_ij - 2 log2 sum_j 1[c_j = c_i] psm_ij ].
inline double expected_vi_lower_bound(const Partition& c, const Eigen::MatrixXd& psm) {
  const auto n = static_cast<Eigen::Index>(c.n());
  std::map<int, double> size;
  for (int l : c.labels) size[l] += 1.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int ci = c.labels[static_cast<std::size_t>(i)];
    double same = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (c.labels[static_cast<std::size_t>(j)] == ci) same += psm(i, j);
    total += std::log2(size[ci]) + std::log2(psm.row(i).sum()) - 2.0 * std::log2(same);
  }
  return total / static_cast<double>(n);
}

inline double expected_loss(const Partition& c, const Eigen::MatrixXd& psm, PartitionLoss loss) {
  return loss == PartitionLoss::binder ? expected_binder_loss(c, psm) : expected_vi_lower_bound(c, psm);
}

namespace detail {

/// Visit every set partition of {0..n-1} as a restricted growth string.
inline void for_each_set_partition(std::size_t n, const std::function<void(const std::vector<int>&)>& visit) {
  if (n == 0) {
    visit({});
    return;
  }
  std::vector<int> a(n, 0), m(n, 0);  // m[i] = max(a[0..i-1])
  for (;;) {
    visit(a);
    std::size_t i = n - 1;
    while (i > 0 && a[i] == m[i] + 1) --i;
    if (i == 0) return;
    ++a[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      a[j] = 0;
      m[j] = std::max(m[j - 1], a[j - 1]);
    }
  }
}

}  // namespace detail

namespace detail {

// Incremental single-unit moves. Keeps cluster sizes and, per unit, the psm mass shared
// with its own cluster, so each candidate move is scored in O(n).
class LocalSearch {
 public:
  LocalSearch(const Eigen::MatrixXd& psm, const Partition& start, PartitionLoss loss)
      : psm_(&psm), loss_(loss), labels_(start.canonical().labels) {
    const auto n = labels_.size();
    const auto k = static_cast<std::size_t>(*std::max_element(labels_.begin(), labels_.end()) + 1);
    size_.assign(k, 0.0);
    same_.assign(n, 0.0);
    for (int l : labels_) size_[static_cast<std::size_t>(l)] += 1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (labels_[i] == labels_[j]) same_[i] += psm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  Partition partition() const { return Partition(labels_); }

  /// Sweep units, applying the best improving move for each; returns whether anything moved.
  bool move_units() {
    bool any = false;
    for (bool improved = true; improved;) {
      improved = false;
      for (std::size_t u = 0; u < labels_.size(); ++u) {
        const int from = labels_[u];
        int best_target = from;
        double best_delta = -1e-12;
        for (std::size_t target = 0; target <= size_.size(); ++target) {
          const int tgt = static_cast<int>(target);
          if (tgt == from) continue;
          const bool fresh = target == size_.size() || size_[target] == 0.0;
          if (fresh && size_[static_cast<std::size_t>(from)] == 1.0) continue;
          const double d = delta(u, tgt);
          if (d < best_delta) {
            best_delta = d;
            best_target = tgt;
          }
        }
        if (best_target != from) {
          apply(u, best_target);
          improved = any = true;
        }
      }
    }
    return any;
  }

 private:
  double p(std::size_t i, std::size_t j) const {
    return (*psm_)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double cluster_size(int c) const {
    return static_cast<std::size_t>(c) < size_.size() ? size_[static_cast<std::size_t>(c)] : 0.0;
  }

  double delta(std::size_t u, int to) const {
    const int from = labels_[u];
    const std::size_t n = labels_.size();
    if (loss_ == PartitionLoss::binder) {
      double d = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == u) continue;
        if (labels_[j] == from) d += 2.0 * p(u, j) - 1.0;
        else if (labels_[j] == to) d -= 2.0 * p(u, j) - 1.0;
      }
      return d;
    }
    const double na = cluster_size(from), nb = cluster_size(to);
    double d = 0.0, same_u_new = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == u) continue;
      if (labels_[j] == from) {
        d -= std::log2(na) - 2.0 * std::log2(same_[j]);
        d += std::log2(na - 1.0) - 2.0 * std::log2(same_[j] - p(u, j));
      } else if (labels_[j] == to) {
        d -= std::log2(nb) - 2.0 * std::log2(same_[j]);
        d += std::log2(nb + 1.0) - 2.0 * std::log2(same_[j] + p(u, j));
        same_u_new += p(u, j);
      }
    }
    d -= std::log2(na) - 2.0 * std::log2(same_[u]);
    d += std::log2(nb + 1.0) - 2.0 * std::log2(same_u_new);
    return d / static_cast<double>(n);
  }

  void apply(std::size_t u, int to) {
    const int from = labels_[u];
    if (static_cast<std::size_t>(to) >= size_.size()) size_.resize(static_cast<std::size_t>(to) + 1, 0.0);
    double same_u = 1.0;
    for (std::size_t j = 0; j < labels_.size(); ++j) {
      if (j == u) continue;
      if (labels_[j] == from) same_[j] -= p(u, j);
      else if (labels_[j] == to) {
        same_[j] += p(u, j);
        same_u += p(u, j);
      }
    }
    same_[u] = same_u;
    size_[static_cast<std::size_t>(from)] -= 1.0;
    size_[static_cast<std::size_t>(to)] += 1.0;
    labels_[u] = to;
  }

  const Eigen::MatrixXd* psm_;
  PartitionLoss loss_;
  std::vector<int> labels_;
  std::vector<double> size_;
  std::vector<double> same_;
};

}  // namespace detail

/// Best partition reachable by merging one pair of clusters, or the input if no merge helps.
inline Partition best_merge(const Partition& c, const Eigen::MatrixXd& psm, PartitionLoss loss) {
  const Partition base = c.canonical();
  const int k = static_cast<int>(base.num_clusters());
  Partition best = base;
  double best_loss = expected_loss(base, psm, loss);
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      Partition m = base;
      for (int& l : m.labels)
        if (l == b) l = a;
      const double v = expected_loss(m, psm, loss);
      if (v < best_loss - 1e-12) {
        best_loss = v;
        best = m.canonical();
      }
    }
  return best;
}

/// Largest n for which point estimation scans every set partition.
inline constexpr std::size_t kExhaustivePartitionLimit = 9;

struct PointEstimate {
  Partition partition;
  double expected_loss = 0.0;
};

/// Partition minimizing the posterior expected loss.
///
/// For n <= exhaustive_limit every set partition is scored. Otherwise the search scores every
/// distinct candidate draw, then improves the best one by single-unit moves and greedy
/// cluster merges until neither lowers the loss.
inline PointEstimate point_estimate_partition(const Eigen::MatrixXd& psm, std::span<const std::vector<int>> candidates,
                                              PartitionLoss loss, std::size_t exhaustive_limit = kExhaustivePartitionLimit) {
  if (candidates.empty()) throw InputError("point_estimate_partition: no candidate partitions");
  const std::size_t n = static_cast<std::size_t>(psm.rows());
  PointEstimate best{Partition(candidates.front()).canonical(), std::numeric_limits<double>::infinity()};

  if (n <= exhaustive_limit) {
    detail::for_each_set_partition(n, [&](const std::vector<int>& rgs) {
      Partition c(rgs);
      const double v = expected_loss(c, psm, loss);
      if (v < best.expected_loss - 1e-12) best = {c, v};
    });
    return best;
  }

  std::set<std::vector<int>> seen;
  for (const auto& cand : candidates) {
    if (cand.size() != n) throw InputError("point_estimate_partition: candidate length differs from psm");
    Partition c = Partition(cand).canonical();
    if (!seen.insert(c.labels).second) continue;
    const double v = expected_loss(c, psm, loss);
    if (v < best.expected_loss) best = {std::move(c), v};
  }

  detail::LocalSearch search(psm, best.partition, loss);
  for (bool improved = true; improved;) {
    improved = search.move_units();
    Partition merged = best_merge(search.partition(), psm, loss);
    if (!merged.equivalent(search.partition())) {
      search = detail::LocalSearch(psm, merged, loss);
      improved = true;
    }
  }
  best.partition = search.partition().canonical();
  best.expected_loss = expected_loss(best.partition, psm, loss);
  return best;
}

/// Hubert-Arabie adjusted Rand index from the contingency table. When the expected and
/// maximum index coincide (both partitions trivial), returns 1 for equivalent partitions
/// and 0 otherwise. The raw value can be negative.
inline double adjusted_rand_index(const Partition& a, const Partition& b) {
  if (a.n() != b.n()) throw InputError("adjusted_rand_index: partitions have different lengths");
  const std::size_t n = a.n();
  const Partition ca = a.canonical(), cb = b.canonical();
  const std::size_t ka = ca.num_clusters(), kb = cb.num_clusters();
  std::vector<double> table(ka * kb, 0.0), rows(ka, 0.0), cols(kb, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(ca.labels[i]), c = static_cast<std::size_t>(cb.labels[i]);
    table[r * kb + c] += 1.0;
    rows[r] += 1.0;
    cols[c] += 1.0;
  }
  auto choose2 = [](double m) { return 0.5 * m * (m - 1.0); };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (double v : table) index += choose2(v);
  for (double v : rows) sum_rows += choose2(v);
  for (double v : cols) sum_cols += choose2(v);
  const double total = choose2(static_cast<double>(n));
  const double expected = total > 0.0 ? sum_rows * sum_cols / total : 0.0;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum - expected == 0.0) return ca.labels == cb.labels ? 1.0 : 0.0;
  return (index - expected) / (maximum - expected);
}

}  // namespace cdbmm
