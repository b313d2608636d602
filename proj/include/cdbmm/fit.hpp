#pragma once

// Fit pipeline: chain -> per-arm point-estimate partitions -> groups -> estimands.

#include <array>
#include <vector>

#include "cdbmm/estimands.hpp"
#include "cdbmm/gibbs.hpp"
#include "cdbmm/partition.hpp"

namespace cdbmm {

struct FitOptions {
  Hyperparams hyper;
  ChainConfig chain;
  PartitionLoss loss = PartitionLoss::vi;
  int min_reliable_group_size = 5;
};

struct FitResult {
  PosteriorDraws draws;
  std::array<Eigen::MatrixXd, 2> psm;
  std::array<PointEstimate, 2> partitions;
  std::vector<int> groups;
  std::vector<int> sizes;
  GroupSamples gate;
  GroupSamples garr;
  AteSamples ate;
  GroupProfiles profiles;

  std::size_t occupied_clusters(int arm) const { return partitions[static_cast<std::size_t>(arm)].partition.num_clusters(); }
  bool low_reliability(int g, int min_size) const { return sizes[static_cast<std::size_t>(g)] < min_size; }
};

inline std::vector<std::vector<int>> allocation_draws(const PosteriorDraws& draws, int arm) {
  std::vector<std::vector<int>> s;
  s.reserve(draws.draws.size());
  for (const Draw& d : draws.draws) s.push_back(d.S[static_cast<std::size_t>(arm)]);
  return s;
}

/// Summarize existing draws into groups and estimands.
inline FitResult summarize_fit(PosteriorDraws draws, const Dataset& data, PartitionLoss loss) {
  if (draws.draws.empty()) throw InputError("summarize_fit: no stored draws");
  FitResult res;
  for (int t = 0; t < 2; ++t) {
    const auto s = allocation_draws(draws, t);
    const auto ut = static_cast<std::size_t>(t);
    res.psm[ut] = build_psm(s);
    res.partitions[ut] = point_estimate_partition(res.psm[ut], s, loss);
  }
  res.groups = form_groups(res.partitions[0].partition, res.partitions[1].partition);
  res.sizes = group_sizes(res.groups);
  res.gate = gate_posterior(draws, res.groups);
  res.garr = garr_posterior(draws, res.groups);
  res.ate = ate_posterior(draws);
  res.profiles = group_profiles(res.groups, data);
  res.draws = std::move(draws);
  return res;
}

inline FitResult fit_model(const Dataset& data, const FitOptions& opt) {
  return summarize_fit(run_chain(data, opt.hyper, opt.chain), data, opt.loss);
}

}  // namespace cdbmm
