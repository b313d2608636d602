#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "cdbmm/errors.hpp"
#include "cdbmm/scenarios.hpp"

namespace {

using cdbmm::ScenarioSpec;

TEST(ScenarioDefinitions, TrueGroupEffects) {
  EXPECT_EQ(cdbmm::scenario_definition(1).gate(), (std::vector<double>{-2, -1, 0}));
  const auto g2 = cdbmm::scenario_definition(2).gate();
  ASSERT_EQ(g2.size(), 3u);
  EXPECT_NEAR(g2[1], -2.2, 1e-12);
  EXPECT_NEAR(g2[2], -4.4, 1e-12);
  EXPECT_EQ(cdbmm::scenario_definition(5).gate(), (std::vector<double>{-2, -1, -0.5, 0.5, 1}));
  EXPECT_EQ(cdbmm::scenario_definition(7).gate(), (std::vector<double>{1}));
  EXPECT_EQ(cdbmm::scenario_definition(4).groups(), 4);
  EXPECT_THROW(cdbmm::scenario_definition(8), cdbmm::InputError);
  EXPECT_THROW(cdbmm::scenario_definition(0), cdbmm::InputError);
}

TEST(ScenarioDefinitions, ScenarioOneGroupRule) {
  const auto d = cdbmm::scenario_definition(1);
  EXPECT_EQ(d.rule({0, 0, 1, 1, 1}), 0);
  EXPECT_EQ(d.rule({1, 0, 0, 0, 0}), 1);
  EXPECT_EQ(d.rule({1, 1, 0, 0, 0}), 1);
  EXPECT_EQ(d.rule({0, 1, 0, 0, 0}), 2);
}

TEST(ScenarioDefinitions, TreatmentLawIsInverseLogit) {
  const auto d1 = cdbmm::scenario_definition(1);
  EXPECT_NEAR(d1.treatment_probability({1, 1, 0, 0, 0}), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(d1.treatment_probability({0, 0, 1, 1, 1}), 0.5, 1e-15);
  const auto d5 = cdbmm::scenario_definition(5);
  EXPECT_NEAR(d5.treatment_probability({0, 0, 1, 1, 1}), 1.0 / (1.0 + std::exp(0.1)), 1e-15);
}

TEST(SimulateScenario, ConsistencyAndShapes) {
  for (int id = 1; id <= 7; ++id) {
    const auto s = cdbmm::simulate_scenario({.id = id, .n = 400, .seed = static_cast<std::uint64_t>(id)});
    ASSERT_EQ(s.data.n(), 400u);
    ASSERT_EQ(s.data.p(), id == 5 ? 5u : 2u);
    for (std::size_t i = 0; i < 400; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      ASSERT_EQ(s.data.y[k], s.data.t[i] ? s.y1[k] : s.y0[k]);
      ASSERT_GE(s.true_groups[i], 0);
      ASSERT_LT(s.true_groups[i], static_cast<int>(s.true_gate.size()));
    }
    EXPECT_NO_THROW(s.data.validate());
  }
}

TEST(SimulateScenario, HomogeneousCase) {
  const auto s = cdbmm::simulate_scenario({.id = 7, .n = 300, .seed = 3});
  EXPECT_EQ(std::set<int>(s.true_groups.begin(), s.true_groups.end()).size(), 1u);
  EXPECT_DOUBLE_EQ(s.true_ate, 1.0);
}

TEST(SimulateScenario, Deterministic) {
  const auto a = cdbmm::simulate_scenario({.id = 4, .n = 100, .seed = 11});
  const auto b = cdbmm::simulate_scenario({.id = 4, .n = 100, .seed = 11});
  EXPECT_TRUE(a.data.y == b.data.y);
  EXPECT_EQ(a.data.t, b.data.t);
  EXPECT_TRUE(a.data.x == b.data.x);
}

TEST(SimulateScenario, GroupProportionsMatchCovariateLaw) {
  const std::size_t n = 100000;
  const auto s = cdbmm::simulate_scenario({.id = 1, .n = n, .seed = 5});
  const double p2 = std::count(s.true_groups.begin(), s.true_groups.end(), 1) / double(n);
  EXPECT_NEAR(p2, 0.4, 3.0 * std::sqrt(0.4 * 0.6 / n));
  const auto prob = cdbmm::group_probabilities(cdbmm::scenario_definition(1));
  EXPECT_NEAR(prob[1], 0.4, 1e-15);
  EXPECT_NEAR(prob[0], 0.6 * 0.4, 1e-15);
  EXPECT_NEAR(prob[2], 0.6 * 0.6, 1e-15);

  const auto s5 = cdbmm::simulate_scenario({.id = 5, .n = n, .seed = 6});
  const auto prob5 = cdbmm::group_probabilities(cdbmm::scenario_definition(5));
  for (int g = 0; g < 5; ++g) {
    const double f = std::count(s5.true_groups.begin(), s5.true_groups.end(), g) / double(n);
    EXPECT_NEAR(f, prob5[static_cast<std::size_t>(g)], 3.0 * std::sqrt(prob5[static_cast<std::size_t>(g)] * (1 - prob5[static_cast<std::size_t>(g)]) / n) + 1e-12)
        << "group " << g;
  }
}

TEST(SimulateScenario, GroupEffectsByLawOfLargeNumbers) {
  for (int id = 1; id <= 7; ++id) {
    const auto s = cdbmm::simulate_scenario({.id = id, .n = 100000, .seed = 100 + static_cast<std::uint64_t>(id)});
    const auto k = s.true_gate.size();
    std::vector<double> sum(k, 0.0), cnt(k, 0.0);
    for (std::size_t i = 0; i < s.data.n(); ++i) {
      const auto g = static_cast<std::size_t>(s.true_groups[i]);
      sum[g] += s.y1[static_cast<Eigen::Index>(i)] - s.y0[static_cast<Eigen::Index>(i)];
      cnt[g] += 1.0;
    }
    for (std::size_t g = 0; g < k; ++g) EXPECT_NEAR(sum[g] / cnt[g], s.true_gate[g], 0.02) << "scenario " << id << " group " << g;
    EXPECT_NEAR(s.sample_ate, s.true_ate, 0.02) << "scenario " << id;
  }
}

TEST(SimulateScenario, OverridesAndValidation) {
  ScenarioSpec spec{.id = 1, .n = 50, .seed = 1};
  spec.overrides.eta1 = std::vector<double>{1, 1, 1};
  EXPECT_EQ(spec.definition().gate(), (std::vector<double>{-1, -3, -5}));
  spec.overrides.sd0 = std::vector<double>{0.1, 0.2};
  EXPECT_THROW(cdbmm::simulate_scenario(spec), cdbmm::InputError);
  ScenarioSpec bad{.id = 9};
  EXPECT_THROW(cdbmm::simulate_scenario(bad), cdbmm::InputError);
  ScenarioSpec tiny{.id = 1, .n = 1};
  EXPECT_THROW(cdbmm::simulate_scenario(tiny), cdbmm::InputError);
}

TEST(MaxWeightAssignment, MatchesPermutationSearch) {
  cdbmm::RngHandle rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const int rows = 1 + static_cast<int>(rng.uniform() * 5);
    const int cols = 1 + static_cast<int>(rng.uniform() * 5);
    Eigen::MatrixXd w(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = std::floor(rng.uniform() * 20);
    const auto a = cdbmm::max_weight_assignment(w);
    ASSERT_EQ(a.size(), static_cast<std::size_t>(rows));
    double got = 0.0;
    std::set<int> used;
    for (int i = 0; i < rows; ++i)
      if (a[static_cast<std::size_t>(i)] >= 0) {
        ASSERT_TRUE(used.insert(a[static_cast<std::size_t>(i)]).second);
        got += w(i, a[static_cast<std::size_t>(i)]);
      }
    // Brute force over injective maps via permutations of the padded column set.
    const int m = std::max(rows, cols);
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
      double v = 0.0;
      for (int i = 0; i < rows; ++i)
        if (perm[static_cast<std::size_t>(i)] < cols) v += w(i, perm[static_cast<std::size_t>(i)]);
      best = std::max(best, v);
    } while (std::next_permutation(perm.begin(), perm.end()));
    ASSERT_EQ(got, best) << "rep " << rep;
  }
}

cdbmm::StudyConfig quick_study(int reps, int workers) {
  cdbmm::StudyConfig c;
  c.n_reps = reps;
  c.workers = workers;
  c.fit.hyper.L = 8;
  c.fit.chain = {.n_iter = 120, .burn_in = 60, .thin = 2};
  return c;
}

TEST(ReplicateStudy, IndependentOfWorkerCount) {
  const ScenarioSpec spec{.id = 3, .n = 80, .seed = 17};
  const auto a = cdbmm::replicate_study(spec, quick_study(3, 1));
  const auto b = cdbmm::replicate_study(spec, quick_study(3, 3));
  ASSERT_EQ(a.replicates.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(a.replicates[r].seed, b.replicates[r].seed);
    EXPECT_EQ(a.replicates[r].ari, b.replicates[r].ari);
    EXPECT_EQ(a.replicates[r].ate_estimate, b.replicates[r].ate_estimate);
  }
  EXPECT_NE(a.replicates[0].seed, a.replicates[1].seed);
}

TEST(ReplicateStudy, SingleValueGridEqualsPlainStudy) {
  const ScenarioSpec spec{.id = 1, .n = 60, .seed = 4};
  auto cfg = quick_study(2, 1);
  cfg.fit.hyper.sigma2_beta = 5.0;
  const auto plain = cdbmm::replicate_study(spec, cfg);
  const auto grid = cdbmm::sensitivity_grid(spec, {5.0}, cfg);
  ASSERT_EQ(grid.size(), 1u);
  for (std::size_t r = 0; r < 2; ++r) EXPECT_EQ(plain.replicates[r].ate_estimate, grid[0].replicates[r].ate_estimate);
  EXPECT_THROW(cdbmm::sensitivity_grid(spec, {0.0}, cfg), cdbmm::InputError);
}

TEST(ReplicateStudy, ScoringAgainstTruth) {
  const auto sim = cdbmm::simulate_scenario({.id = 7, .n = 500, .seed = 31});
  cdbmm::FitOptions opt;
  opt.chain.seed = 32;
  const auto fit = cdbmm::fit_model(sim.data, opt);
  const auto m = cdbmm::score_replicate(sim, fit);
  EXPECT_EQ(m.clusters_control, 1u);
  EXPECT_EQ(m.clusters_treated, 1u);
  EXPECT_EQ(m.ari, 1.0);
  EXPECT_NEAR(m.ate_estimate, 1.0, 0.1);
  ASSERT_EQ(m.matched_gate.size(), 1u);
  EXPECT_NEAR(m.matched_gate[0], 1.0, 0.1);
}

}  // namespace
