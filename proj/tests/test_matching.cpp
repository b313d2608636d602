#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "cdbmm/errors.hpp"
#include "cdbmm/matching.hpp"
#include "cdbmm/rng.hpp"
#include "oracles.hpp"

namespace {

TEST(Propensity, NullModel) {
  const std::size_t n = 100000;
  cdbmm::RngHandle rng(1);
  Eigen::MatrixXd X(n, 2);
  std::vector<int> t(n);
  int treated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    X(static_cast<Eigen::Index>(i), 0) = rng.normal();
    X(static_cast<Eigen::Index>(i), 1) = rng.uniform() < 0.5 ? 1.0 : 0.0;
    t[i] = rng.uniform() < 0.3 ? 1 : 0;
    treated += t[i];
  }
  const auto fit = cdbmm::fit_propensity(X, t);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.coef[1], 0.0, 0.03);
  EXPECT_NEAR(fit.coef[2], 0.0, 0.03);
  const double frac = treated / double(n);
  EXPECT_NEAR(fit.coef[0], std::log(frac / (1 - frac)), 0.03);
}

TEST(Propensity, RecoversSlope) {
  const std::size_t n = 100000;
  cdbmm::RngHandle rng(2);
  Eigen::MatrixXd X(n, 1);
  std::vector<int> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal();
    X(static_cast<Eigen::Index>(i), 0) = x;
    t[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-x)) ? 1 : 0;
  }
  const auto fit = cdbmm::fit_propensity(X, t);
  EXPECT_NEAR(fit.coef[0], 0.0, 0.05);
  EXPECT_NEAR(fit.coef[1], 1.0, 0.05);
  EXPECT_TRUE((fit.scores.array() > 0.0).all() && (fit.scores.array() < 1.0).all());
}

TEST(Propensity, DuplicateColumnIsNamed) {
  auto d = oracle::confounded_instance(3, 200);
  Eigen::MatrixXd X(d.x.rows(), 4);
  X << d.x, d.x.col(1);
  try {
    cdbmm::fit_propensity(X, d.t, {}, {"age", "income", "urban", "income_copy"});
    FAIL() << "expected a rank-deficiency error";
  } catch (const cdbmm::NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("income_copy"), std::string::npos) << e.what();
  }
}

TEST(Propensity, SeparationAdvisesRidge) {
  const std::size_t n = 200;
  Eigen::MatrixXd X(n, 1);
  std::vector<int> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    X(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i) / n - 0.5;
    t[i] = X(static_cast<Eigen::Index>(i), 0) > 0 ? 1 : 0;
  }
  try {
    cdbmm::fit_propensity(X, t);
    FAIL() << "expected a separation error";
  } catch (const cdbmm::NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("ridge"), std::string::npos);
  }
  cdbmm::PropensityOptions ridge;
  ridge.ridge = 1.0;
  EXPECT_NO_THROW(cdbmm::fit_propensity(X, t, ridge));
}

TEST(Propensity, Deterministic) {
  const auto d = oracle::confounded_instance(4, 500);
  const auto a = cdbmm::fit_propensity(d.x, d.t), b = cdbmm::fit_propensity(d.x, d.t);
  EXPECT_TRUE(a.coef == b.coef);
  EXPECT_TRUE(a.scores == b.scores);
}

TEST(NearestNeighbor, HandTrace) {
  Eigen::VectorXd s(4);
  s << 0.6, 0.61, 0.8, 0.79;
  const auto m = cdbmm::nearest_neighbor_match(s, {1, 0, 1, 0});
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[0], std::make_pair(2, 3));
  EXPECT_EQ(m.pairs[1], std::make_pair(0, 1));
}

TEST(NearestNeighbor, SingleTreatedGivesOnePair) {
  Eigen::VectorXd s(4);
  s << 0.3, 0.5, 0.2, 0.9;
  const auto m = cdbmm::nearest_neighbor_match(s, {0, 1, 0, 0});
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0], std::make_pair(1, 0));
}

TEST(NearestNeighbor, IdenticalScoresUseProcessingOrder) {
  const Eigen::VectorXd s = Eigen::VectorXd::Constant(7, 0.4);
  const std::vector<int> t{1, 0, 1, 0, 1, 1, 0};
  const auto m = cdbmm::nearest_neighbor_match(s, t);
  ASSERT_EQ(m.pairs.size(), 3u);
  EXPECT_EQ(m.pairs[0], std::make_pair(0, 1));
  EXPECT_EQ(m.pairs[1], std::make_pair(2, 3));
  EXPECT_EQ(m.pairs[2], std::make_pair(4, 6));
  EXPECT_FALSE(m.retained[5]);
}

TEST(NearestNeighbor, CaliperAndErrors) {
  Eigen::VectorXd s(3);
  s << 0.9, 0.1, 0.85;
  const auto m = cdbmm::nearest_neighbor_match(s, {1, 0, 0}, 0.01);
  EXPECT_TRUE(m.pairs.empty());
  EXPECT_THROW(cdbmm::nearest_neighbor_match(s, {1, 1, 1}), cdbmm::InputError);
  s[1] = 1.0;
  EXPECT_THROW(cdbmm::nearest_neighbor_match(s, {1, 0, 0}), cdbmm::InputError);
}

TEST(NearestNeighbor, ValidSemiMatching) {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const auto d = oracle::confounded_instance(seed, 400);
    const auto fit = cdbmm::fit_propensity(d.x, d.t);
    const auto m = cdbmm::nearest_neighbor_match(fit.scores, d.t);
    std::set<int> used;
    for (auto [tr, co] : m.pairs) {
      ASSERT_EQ(d.t[static_cast<std::size_t>(tr)], 1);
      ASSERT_EQ(d.t[static_cast<std::size_t>(co)], 0);
      ASSERT_TRUE(used.insert(tr).second);
      ASSERT_TRUE(used.insert(co).second);
    }
    const auto treated = static_cast<std::size_t>(std::count(d.t.begin(), d.t.end(), 1));
    EXPECT_EQ(m.pairs.size(), std::min(treated, d.n() - treated));
  }
}

TEST(Balance, IdenticalArmsGiveZero) {
  Eigen::MatrixXd X(6, 1);
  X << 1, 1, 2, 2, 3, 3;
  const std::vector<int> t{0, 1, 0, 1, 0, 1};
  Eigen::VectorXd s = Eigen::VectorXd::Constant(6, 0.5);
  const auto m = cdbmm::nearest_neighbor_match(s, t);
  const auto rows = cdbmm::balance_table(X, t, m, {"x"});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(rows[0].smd_before, 0.0, 1e-15);
  EXPECT_EQ(rows[1].name, "propensity_score");
}

TEST(Balance, HandComputedSmd) {
  Eigen::MatrixXd X(4, 1);
  X << 0, 2, 1, 5;
  const std::vector<int> t{0, 0, 1, 1};
  cdbmm::MatchResult m;
  m.retained = {true, true, true, true};
  const auto rows = cdbmm::balance_table(X, t, m);
  // means 1 and 3; variances 2 and 8; pooled sd sqrt(5)
  EXPECT_NEAR(rows[0].smd_before, 2.0 / std::sqrt(5.0), 1e-15);
  EXPECT_EQ(rows[0].name, "x1");
}

TEST(Balance, ConstantColumnIsDegenerateOnlyWhenMeansDiffer) {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0,
       1, 0,
       1, 1,
       1, 1;
  const std::vector<int> t{0, 0, 1, 1};
  cdbmm::MatchResult m;
  m.retained = {true, true, true, true};
  const auto rows = cdbmm::balance_table(X, t, m);
  EXPECT_EQ(rows[0].smd_before, 0.0);
  EXPECT_FALSE(rows[0].degenerate);
  EXPECT_TRUE(rows[1].degenerate);
  EXPECT_TRUE(std::isnan(rows[1].smd_before));
}

TEST(Balance, MatchingImprovesPropensityBalance) {
  const auto d = oracle::confounded_instance(77);
  const auto r = cdbmm::match_dataset(d);
  const auto& ps = r.balance.back();
  ASSERT_EQ(ps.name, "propensity_score");
  EXPECT_GT(std::abs(ps.smd_before), 0.25);
  EXPECT_LT(std::abs(ps.smd_after), 0.1);
  EXPECT_EQ(r.matched.n(), 2 * r.match.pairs.size());
  EXPECT_EQ(r.matched.arm_count(0), r.matched.arm_count(1));
}

}  // namespace
