#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "cdbmm/errors.hpp"
#include "cdbmm/rng.hpp"
#include "cdbmm/sampling.hpp"

namespace {

using cdbmm::RngHandle;
constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

TEST(TruncatedNormal, UntruncatedIsStandardNormal) {
  RngHandle rng(11);
  std::vector<double> v(200000);
  for (double& x : v) x = cdbmm::draw_truncated_normal(rng, 0.0, 1.0, -kInf, kInf);
  EXPECT_NEAR(mean_of(v), 0.0, 0.01);
  EXPECT_NEAR(var_of(v), 1.0, 0.01);
}

TEST(TruncatedNormal, HalfNormalMean) {
  RngHandle rng(12);
  std::vector<double> v(1000000);
  for (double& x : v) {
    x = cdbmm::draw_truncated_normal(rng, 0.0, 1.0, 0.0, kInf);
    ASSERT_GT(x, 0.0);
  }
  EXPECT_NEAR(mean_of(v), std::sqrt(2.0 / std::numbers::pi), 0.01);
}

TEST(TruncatedNormal, FarTailStaysInSupport) {
  RngHandle rng(13);
  for (int i = 0; i < 100000; ++i) ASSERT_LT(cdbmm::draw_truncated_normal(rng, 5.0, 1.0, -kInf, 0.0), 0.0);
  double s = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = cdbmm::draw_truncated_normal(rng, 0.0, 1.0, 8.0, kInf);
    ASSERT_GE(x, 8.0);
    s += x;
  }
  // Mills ratio: E[Z | Z > 8] = phi(8) / (1 - Phi(8)) ~ 8.1208
  EXPECT_NEAR(s / 100000, 8.1208, 0.005);
}

TEST(TruncatedNormal, TwoSidedIntervals) {
  RngHandle rng(14);
  for (auto [lo, hi] : std::vector<std::pair<double, double>>{{-0.1, 0.1}, {3.0, 3.5}, {-12.0, -11.0}, {-1.0, 40.0}}) {
    for (int i = 0; i < 20000; ++i) {
      const double x = cdbmm::draw_truncated_normal(rng, 0.0, 1.0, lo, hi);
      ASSERT_GE(x, lo);
      ASSERT_LE(x, hi);
    }
  }
}

TEST(TruncatedNormal, RejectsBadInput) {
  RngHandle rng(15);
  EXPECT_THROW(cdbmm::draw_truncated_normal(rng, 0.0, 1.0, 1.0, 1.0), cdbmm::DomainError);
  EXPECT_THROW(cdbmm::draw_truncated_normal(rng, 0.0, 0.0, -1.0, 1.0), cdbmm::InputError);
}

TEST(InverseGamma, Moments) {
  RngHandle rng(21);
  std::vector<double> v(400000);
  for (double& x : v) x = cdbmm::draw_inverse_gamma(rng, 5.0, 1.0);
  EXPECT_NEAR(mean_of(v), 0.25, 0.005);
  EXPECT_NEAR(var_of(v), 1.0 / 48.0, 0.002);
}

TEST(InverseGamma, HeavyTailStaysPositive) {
  RngHandle rng(22);
  for (int i = 0; i < 100000; ++i) {
    const double x = cdbmm::draw_inverse_gamma(rng, 0.5, 1.0);
    ASSERT_GT(x, 0.0);
    ASSERT_TRUE(std::isfinite(x));
  }
}

TEST(Gamma, ShapeRateMoments) {
  RngHandle rng(23);
  std::vector<double> v(200000);
  for (double& x : v) x = cdbmm::draw_gamma(rng, 3.0, 2.0);
  EXPECT_NEAR(mean_of(v), 1.5, 0.01);
  EXPECT_NEAR(var_of(v), 0.75, 0.02);
}

TEST(Categorical, DegenerateWeight) {
  RngHandle rng(31);
  const std::vector<double> w{0.0, 1.0, 0.0};
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(cdbmm::draw_categorical(rng, w), 1u);
}

TEST(Categorical, Frequencies) {
  RngHandle rng(32);
  const std::vector<double> even{1.0, 1.0}, skew{2.0, 6.0};
  const int n = 1000000;
  int hits_even = 0, hits_skew = 0;
  for (int i = 0; i < n; ++i) {
    hits_even += cdbmm::draw_categorical(rng, even) == 1u;
    hits_skew += cdbmm::draw_categorical(rng, skew) == 1u;
  }
  EXPECT_NEAR(hits_even / double(n), 0.5, 0.002);
  EXPECT_NEAR(hits_skew / double(n), 0.75, 0.002);
}

TEST(Categorical, LogSpaceMatchesLinear) {
  RngHandle rng(33);
  const std::vector<double> lw{-1000.0, -1000.0 + std::log(3.0)};
  std::vector<double> scratch(2);
  int hits = 0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) hits += cdbmm::draw_categorical_log(rng, lw, scratch) == 1u;
  EXPECT_NEAR(hits / double(n), 0.75, 0.003);
}

TEST(Categorical, RejectsInvalidWeights) {
  RngHandle rng(34);
  EXPECT_THROW(cdbmm::draw_categorical(rng, std::vector<double>{0.0, 0.0}), cdbmm::DomainError);
  EXPECT_THROW(cdbmm::draw_categorical(rng, std::vector<double>{1.0, -1.0}), cdbmm::DomainError);
  EXPECT_THROW(cdbmm::draw_categorical(rng, std::vector<double>{1.0, std::nan("")}), cdbmm::InputError);
}

TEST(MultivariateNormal, IdentityCovariance) {
  RngHandle rng(41);
  const int n = 1000000;
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  Eigen::Matrix3d ss = Eigen::Matrix3d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = cdbmm::draw_mv_normal(rng, Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
    s += x;
    ss += x * x.transpose();
  }
  const Eigen::Matrix3d cov = ss / n - (s / n) * (s / n).transpose();
  EXPECT_LT((s / n).cwiseAbs().maxCoeff(), 0.01);
  EXPECT_LT((cov - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 0.01);
}

TEST(MultivariateNormal, DiagonalAndCorrelated) {
  RngHandle rng(42);
  const int n = 1000000;
  Eigen::Vector2d mean(1.0, 2.0);
  Eigen::Matrix2d diag;
  diag << 4.0, 0.0, 0.0, 9.0;
  Eigen::Matrix2d corr;
  corr << 1.0, 0.5, 0.5, 1.0;
  Eigen::Vector2d s = Eigen::Vector2d::Zero(), sc = Eigen::Vector2d::Zero();
  Eigen::Matrix2d ss = Eigen::Matrix2d::Zero(), ssc = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd a = cdbmm::draw_mv_normal(rng, mean, diag);
    const Eigen::VectorXd b = cdbmm::draw_mv_normal(rng, Eigen::VectorXd::Zero(2), corr);
    s += a;
    ss += a * a.transpose();
    sc += b;
    ssc += b * b.transpose();
  }
  const Eigen::Vector2d m = s / n;
  const Eigen::Matrix2d cov = ss / n - m * m.transpose();
  EXPECT_NEAR(m[0], 1.0, 0.01);
  EXPECT_NEAR(m[1], 2.0, 0.01);
  EXPECT_NEAR(cov(0, 0), 4.0, 0.05);
  EXPECT_NEAR(cov(1, 1), 9.0, 0.05);
  const Eigen::Matrix2d c = ssc / n - (sc / n) * (sc / n).transpose();
  EXPECT_NEAR(c(0, 1) / std::sqrt(c(0, 0) * c(1, 1)), 0.5, 0.01);
}

TEST(MultivariateNormal, CanonicalFormMatchesMoments) {
  RngHandle rng(43);
  Eigen::MatrixXd prec(2, 2);
  prec << 2.0, 0.5, 0.5, 1.0;
  Eigen::VectorXd shift(2);
  shift << 1.0, -1.0;
  const Eigen::VectorXd mean = prec.inverse() * shift;
  const int n = 200000;
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) s += cdbmm::draw_mv_normal_canonical(rng, prec, shift);
  EXPECT_LT((s / n - mean).cwiseAbs().maxCoeff(), 0.01);
}

TEST(MultivariateNormal, RejectsIndefiniteCovariance) {
  RngHandle rng(44);
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(cdbmm::draw_mv_normal(rng, Eigen::VectorXd::Zero(2), bad), cdbmm::NumericError);
}

TEST(Rng, SameSeedSameStream) {
  RngHandle a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform();
    ASSERT_EQ(x, b.uniform());
    differs |= x != c.uniform();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, SplitStreamsAreDistinctAndReproducible) {
  EXPECT_EQ(RngHandle::split_seed(5, 1), RngHandle::split_seed(5, 1));
  EXPECT_NE(RngHandle::split_seed(5, 1), RngHandle::split_seed(5, 2));
  RngHandle base(5);
  RngHandle s1 = base.split(3), s2 = base.split(3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(s1.uniform(), s2.uniform());
}

}  // namespace
