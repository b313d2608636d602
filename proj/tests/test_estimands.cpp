#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cdbmm/errors.hpp"
#include "cdbmm/estimands.hpp"
#include "cdbmm/rng.hpp"

namespace {

using cdbmm::Partition;
using cdbmm::PosteriorDraws;

// Draws with random potential outcomes; `treated` maps each control imputation to the treated one.
template <class F>
PosteriorDraws synthetic_draws(std::size_t n, int draws, F treated, std::uint64_t seed = 1) {
  PosteriorDraws pd;
  pd.n = n;
  cdbmm::RngHandle rng(seed);
  for (int r = 0; r < draws; ++r) {
    cdbmm::Draw d;
    d.iteration = r;
    d.y_imputed[0].resize(static_cast<Eigen::Index>(n));
    d.y_imputed[1].resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      d.y_imputed[0][k] = 2.0 + rng.normal();
      d.y_imputed[1][k] = treated(d.y_imputed[0][k], i, rng);
    }
    pd.draws.push_back(d);
  }
  return pd;
}

TEST(FormGroups, CartesianProduct) {
  EXPECT_EQ(cdbmm::form_groups(Partition({0, 0, 0}), Partition({3, 3, 3})), (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(cdbmm::form_groups(Partition({0, 1, 1, 0}), Partition({5, 5, 5, 5})), (std::vector<int>{0, 1, 1, 0}));
  EXPECT_EQ(cdbmm::form_groups(Partition({1, 1, 2, 2}), Partition({1, 2, 1, 2})), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_THROW(cdbmm::form_groups(Partition({0, 1}), Partition({0})), cdbmm::InputError);
}

TEST(FormGroups, RefinesBothPartitions) {
  cdbmm::RngHandle rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 40);
    std::vector<int> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<int>(rng.uniform() * 4);
      b[i] = static_cast<int>(rng.uniform() * 3);
    }
    const auto g = cdbmm::form_groups(Partition(a), Partition(b));
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_LE(g[i], next);  // contiguous, first-appearance order
      next = std::max(next, g[i] + 1);
      for (std::size_t j = 0; j < n; ++j) ASSERT_EQ(g[i] == g[j], a[i] == a[j] && b[i] == b[j]);
    }
    const auto sizes = cdbmm::group_sizes(g);
    int total = 0;
    for (int s : sizes) total += s;
    ASSERT_EQ(static_cast<std::size_t>(total), n);
  }
}

TEST(Gate, NullEffectIsExactlyZero) {
  const auto pd = synthetic_draws(30, 50, [](double y0, std::size_t, cdbmm::RngHandle&) { return y0; });
  std::vector<int> groups(30);
  for (std::size_t i = 0; i < 30; ++i) groups[i] = static_cast<int>(i % 3);
  const auto gate = cdbmm::gate_posterior(pd, groups);
  EXPECT_TRUE((gate.samples.array() == 0.0).all());
  for (double a : cdbmm::ate_posterior(pd).samples) EXPECT_EQ(a, 0.0);
}

TEST(Gate, MatchesGroupMeanDifferences) {
  const auto pd = synthetic_draws(12, 20, [](double y0, std::size_t i, cdbmm::RngHandle& r) { return y0 - static_cast<double>(i % 2) + r.normal(); });
  std::vector<int> groups{0, 1, 0, 1, 0, 1, 2, 2, 2, 2, 0, 0};
  const auto gate = cdbmm::gate_posterior(pd, groups);
  ASSERT_EQ(gate.samples.cols(), 3);
  for (std::size_t r = 0; r < pd.draws.size(); ++r)
    for (int g = 0; g < 3; ++g) {
      double s = 0.0;
      int c = 0;
      for (std::size_t i = 0; i < 12; ++i)
        if (groups[i] == g) {
          s += pd.draws[r].y_imputed[1][static_cast<Eigen::Index>(i)] - pd.draws[r].y_imputed[0][static_cast<Eigen::Index>(i)];
          ++c;
        }
      EXPECT_NEAR(gate.samples(static_cast<Eigen::Index>(r), g), s / c, 1e-12);
    }
}

TEST(Gate, LocationShiftAndWholePopulation) {
  const auto pd = synthetic_draws(20, 30, [](double y0, std::size_t, cdbmm::RngHandle& r) { return y0 + r.normal(); });
  PosteriorDraws shifted = pd;
  for (auto& d : shifted.draws) d.y_imputed[1].array() += 0.75;
  std::vector<int> groups(20);
  for (std::size_t i = 0; i < 20; ++i) groups[i] = static_cast<int>(i % 4);
  const auto a = cdbmm::gate_posterior(pd, groups), b = cdbmm::gate_posterior(shifted, groups);
  EXPECT_LT(((b.samples.array() - a.samples.array()) - 0.75).abs().maxCoeff(), 1e-12);

  const auto whole = cdbmm::gate_posterior(pd, std::vector<int>(20, 0));
  const auto ate = cdbmm::ate_posterior(pd);
  for (std::size_t r = 0; r < pd.draws.size(); ++r) EXPECT_NEAR(whole.samples(static_cast<Eigen::Index>(r), 0), ate.samples[r], 1e-12);
}

TEST(Garr, NullEffectAndHandRatio) {
  const auto same = synthetic_draws(10, 25, [](double y0, std::size_t, cdbmm::RngHandle&) { return y0; });
  const std::vector<int> groups{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  EXPECT_TRUE((cdbmm::garr_posterior(same, groups).samples.array() == 1.0).all());

  PosteriorDraws fixed;
  fixed.n = 4;
  for (int r = 0; r < 5; ++r) {
    cdbmm::Draw d;
    d.y_imputed[0] = Eigen::Vector4d(1.0, 3.0, 2.0, 2.0);
    d.y_imputed[1] = Eigen::Vector4d(2.5, 3.5, 3.0, 3.0);
    fixed.draws.push_back(d);
  }
  const auto garr = cdbmm::garr_posterior(fixed, {0, 0, 1, 1});
  EXPECT_TRUE((garr.samples.array() == 1.5).all());
  EXPECT_DOUBLE_EQ(garr.summary[0].mean, 1.5);
}

TEST(Garr, ScaleInvariance) {
  const auto pd = synthetic_draws(16, 30, [](double y0, std::size_t, cdbmm::RngHandle& r) { return y0 + 1.0 + 0.1 * r.normal(); });
  PosteriorDraws scaled = pd;
  for (auto& d : scaled.draws) {
    d.y_imputed[0] *= 3.7;
    d.y_imputed[1] *= 3.7;
  }
  std::vector<int> groups(16);
  for (std::size_t i = 0; i < 16; ++i) groups[i] = static_cast<int>(i / 8);
  const auto a = cdbmm::garr_posterior(pd, groups), b = cdbmm::garr_posterior(scaled, groups);
  EXPECT_LT((a.samples - b.samples).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Garr, ZeroDenominatorIsFlagged) {
  PosteriorDraws pd;
  pd.n = 2;
  for (int r = 0; r < 4; ++r) {
    cdbmm::Draw d;
    d.y_imputed[0] = Eigen::Vector2d(r == 2 ? 0.0 : 1.0, 2.0);
    d.y_imputed[1] = Eigen::Vector2d(1.0, 1.0);
    pd.draws.push_back(d);
  }
  const auto garr = cdbmm::garr_posterior(pd, {0, 1});
  EXPECT_EQ(garr.undefined_draws[0], 1);
  EXPECT_EQ(garr.undefined_draws[1], 0);
  EXPECT_TRUE(std::isnan(garr.summary[0].mean));
  EXPECT_DOUBLE_EQ(garr.summary[1].mean, 0.5);
}

TEST(Estimands, GroupsMustCoverTheDrawnUnits) {
  const auto pd = synthetic_draws(5, 3, [](double y0, std::size_t, cdbmm::RngHandle&) { return y0; });
  EXPECT_THROW(cdbmm::gate_posterior(pd, {0, 0, 1}), cdbmm::InputError);
}

TEST(Summaries, QuantilesAndErrors) {
  std::vector<double> v;
  for (int i = 0; i <= 1000; ++i) v.push_back(i);
  const auto s = cdbmm::summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 500.0);
  EXPECT_DOUBLE_EQ(s.median, 500.0);
  EXPECT_DOUBLE_EQ(s.lower, 25.0);
  EXPECT_DOUBLE_EQ(s.upper, 975.0);
  EXPECT_DOUBLE_EQ(cdbmm::bias(1.2, 1.0), 1.2 - 1.0);
  EXPECT_DOUBLE_EQ(cdbmm::squared_error(0.5, 1.0), 0.25);
}

TEST(Profiles, MeansAndModes) {
  cdbmm::Dataset d;
  d.x.resize(6, 2);
  d.x << 1, 0,
         1, 2,
         0, 2,
         0, 0,
         0, 0,
         0, 1;
  d.y = Eigen::VectorXd::Zero(6);
  d.t = {0, 1, 0, 1, 0, 1};
  d.categorical = {false, true};
  const auto single = cdbmm::group_profiles(std::vector<int>(6, 0), d);
  EXPECT_NEAR(single.means(0, 0), 2.0 / 6.0, 1e-15);
  EXPECT_NEAR(single.means(0, 1), 5.0 / 6.0, 1e-15);
  EXPECT_EQ(single.modes(0, 1), 0.0);

  const auto split = cdbmm::group_profiles({0, 0, 1, 1, 1, 1}, d);
  EXPECT_EQ(split.means(0, 0), 1.0);
  EXPECT_EQ(split.means(1, 0), 0.0);
  EXPECT_EQ(split.modes(1, 1), 0.0);
  EXPECT_EQ(split.modes(0, 1), 0.0);  // tie between 0 and 2 goes to the smaller level
  EXPECT_TRUE(std::isnan(split.modes(0, 0)));
}

}  // namespace
