#pragma once

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace cdbmm {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// Standard normal CDF. erfc keeps full relative precision in both tails.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

/// 1 - normal_cdf(x), computed without cancellation.
inline double normal_ccdf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

/// Standard normal quantile.
inline double normal_quantile(double p) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p); }

inline double normal_logpdf(double y, double mean, double variance) {
  const double d = y - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(variance) - 0.5 * d * d / variance;
}

inline double normal_pdf(double y, double mean, double variance) {
  return std::exp(normal_logpdf(y, mean, variance));
}

}  // namespace cdbmm
