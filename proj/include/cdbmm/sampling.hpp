#pragma once

// Random draws used by the Gibbs sweep. Every function takes the stream by
// reference and is deterministic given the stream state.

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "cdbmm/errors.hpp"
#include "cdbmm/normal_math.hpp"
#include "cdbmm/rng.hpp"

namespace cdbmm {

namespace detail {

// Standardized bound beyond which the exponential-proposal sampler takes over.
inline constexpr double kTailThreshold = 3.0;

// Standard normal restricted to [a, b) with a >= kTailThreshold > 0, b possibly +inf.
// Robert (1995) translated-exponential proposal, itself truncated at b so that narrow
// intervals far in the tail never loop.
inline double std_trunc_normal_tail(RngHandle& rng, double a, double b) {
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  const double width = b - a;
  const double mass = std::isinf(width) ? 1.0 : -std::expm1(-lambda * width);
  for (;;) {
    const double z = a - std::log1p(-rng.uniform() * mass) / lambda;
    if (!(z > a && z < b)) continue;
    const double d = z - lambda;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
  }
}

// Uniform proposal on (a, b) accepted against the normal density; efficient for narrow intervals.
inline double std_trunc_normal_uniform(RngHandle& rng, double a, double b) {
  const double peak = (a > 0.0) ? a : (b < 0.0 ? b : 0.0);
  for (;;) {
    const double z = a + (b - a) * rng.uniform();
    if (!(z > a && z < b)) continue;
    if (rng.uniform() <= std::exp(0.5 * (peak * peak - z * z))) return z;
  }
}

// Inverse CDF on the side of zero that keeps precision.
inline double std_trunc_normal_inverse(RngHandle& rng, double a, double b) {
  for (;;) {
    double z;
    if (a >= 0.0) {
      const double qa = normal_ccdf(a), qb = normal_ccdf(b);
      z = -normal_quantile(qb + (qa - qb) * rng.uniform());
    } else {
      const double pa = normal_cdf(a), pb = normal_cdf(b);
      z = normal_quantile(pa + (pb - pa) * rng.uniform());
    }
    if (z > a && z < b) return z;
  }
}

inline double std_trunc_normal(RngHandle& rng, double a, double b) {
  if (a >= kTailThreshold) return std_trunc_normal_tail(rng, a, b);
  if (b <= -kTailThreshold) return -std_trunc_normal_tail(rng, -b, -a);
  if (b - a < 0.5) return std_trunc_normal_uniform(rng, a, b);
  return std_trunc_normal_inverse(rng, a, b);
}

}  // namespace detail

/// Normal(mean, variance) restricted to the open interval (lower, upper); either bound may be infinite.
inline double draw_truncated_normal(RngHandle& rng, double mean, double variance, double lower, double upper) {
  if (!std::isfinite(mean) || !std::isfinite(variance) || std::isnan(lower) || std::isnan(upper))
    throw InputError("draw_truncated_normal: non-finite mean/variance or NaN bound");
  if (!(variance > 0.0)) throw InputError("draw_truncated_normal: variance must be positive");
  if (!(lower < upper)) throw DomainError("draw_truncated_normal: lower bound must be below upper bound");
  const double sd = std::sqrt(variance);
  const double a = (lower - mean) / sd;
  const double b = (upper - mean) / sd;
  if (!(a < b)) throw DomainError("draw_truncated_normal: interval collapses after standardization");
  if (std::isinf(a) && std::isinf(b)) return mean + sd * rng.normal();
  for (;;) {
    const double x = mean + sd * detail::std_trunc_normal(rng, a, b);
    // Rescaling can round onto a bound when the interval is extremely narrow.
    if (x > lower && x < upper) return x;
  }
}

/// Gamma with shape/rate convention: mean = shape / rate.
inline double draw_gamma(RngHandle& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate))
    throw InputError("draw_gamma: shape and rate must be positive and finite");
  std::gamma_distribution<double> gamma(shape, 1.0 / rate);
  return gamma(rng.engine());
}

/// Inverse-gamma with shape/scale convention: mean = scale / (shape - 1) for shape > 1.
/// Drawn as 1 / Gamma(shape, rate = scale).
inline double draw_inverse_gamma(RngHandle& rng, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
    throw InputError("draw_inverse_gamma: shape and scale must be positive and finite");
  std::gamma_distribution<double> gamma(shape, 1.0 / scale);
  for (;;) {
    const double g = gamma(rng.engine());
    if (g > 0.0 && std::isfinite(1.0 / g)) return 1.0 / g;
  }
}

/// Zero-based index drawn with probability proportional to `weights` (need not be normalized).
inline std::size_t draw_categorical(RngHandle& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw InputError("draw_categorical: non-finite weight");
    if (w < 0.0) throw DomainError("draw_categorical: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("draw_categorical: all weights are zero");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] <= 0.0) continue;
    last_positive = l;
    acc += weights[l];
    if (u < acc) return l;
  }
  return last_positive;
}

/// Categorical draw from unnormalized log-weights (max-subtracted before exponentiation).
/// `scratch` must have the same length as `log_weights`.
inline std::size_t draw_categorical_log(RngHandle& rng, std::span<const double> log_weights, std::span<double> scratch) {
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) top = std::max(top, lw);
  if (!std::isfinite(top)) throw NumericError("draw_categorical_log: no finite log-weight");
  for (std::size_t l = 0; l < log_weights.size(); ++l) scratch[l] = std::exp(log_weights[l] - top);
  return draw_categorical(rng, scratch);
}

/// Lower Cholesky factor; throws NumericError naming the first non-positive pivot.
inline Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw InputError("cholesky_lower: matrix is not square");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d))
      throw NumericError("cholesky_lower: matrix is not positive definite (pivot " + std::to_string(j) +
                         " = " + std::to_string(d) + ")");
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  return l;
}

inline Eigen::VectorXd draw_mv_normal(RngHandle& rng, const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
    throw InputError("draw_mv_normal: covariance shape does not match mean");
  if (!covariance.isApprox(covariance.transpose(), 1e-10))
    throw InputError("draw_mv_normal: covariance is not symmetric");
  const Eigen::MatrixXd l = cholesky_lower(covariance);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + l * z;
}

/// Draw from N(precision^{-1} * shift, precision^{-1}) without forming the inverse.
inline Eigen::VectorXd draw_mv_normal_canonical(RngHandle& rng, const Eigen::MatrixXd& precision,
                                                const Eigen::VectorXd& shift) {
  const Eigen::MatrixXd l = cholesky_lower(precision);
  const auto tri = l.triangularView<Eigen::Lower>();
  const Eigen::VectorXd mean = tri.transpose().solve(tri.solve(shift));
  Eigen::VectorXd z(shift.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + tri.transpose().solve(z);
}

}  // namespace cdbmm
