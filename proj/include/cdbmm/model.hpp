#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdbmm/errors.hpp"
#include "cdbmm/normal_math.hpp"

namespace cdbmm {

/// Observed (y, t, X) tuples. Categorical covariates arrive already numerically encoded.
struct Dataset {
  Eigen::VectorXd y;
  std::vector<int> t;
  Eigen::MatrixXd x;  // n x p
  std::vector<std::string> column_names;
  std::vector<bool> categorical;  // per covariate column; empty means none flagged

  std::size_t n() const { return static_cast<std::size_t>(y.size()); }
  std::size_t p() const { return static_cast<std::size_t>(x.cols()); }

  std::size_t arm_count(int arm) const { return static_cast<std::size_t>(std::count(t.begin(), t.end(), arm)); }

  void validate() const {
    const auto n_rows = static_cast<Eigen::Index>(t.size());
    if (y.size() != n_rows || x.rows() != n_rows)
      throw InputError("Dataset: y, t and X must have the same number of rows");
    if (!column_names.empty() && column_names.size() != p())
      throw InputError("Dataset: column_names length does not match X columns");
    if (!categorical.empty() && categorical.size() != p())
      throw InputError("Dataset: categorical flags length does not match X columns");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] != 0 && t[i] != 1) throw InputError("Dataset: treatment must be 0 or 1 (row " + std::to_string(i + 1) + ")");
      if (!std::isfinite(y[static_cast<Eigen::Index>(i)]))
        throw InputError("Dataset: non-finite outcome at row " + std::to_string(i + 1));
    }
    if (!x.allFinite()) throw InputError("Dataset: non-finite covariate value");
    if (arm_count(0) == 0 || arm_count(1) == 0) throw InputError("Dataset: both treatment arms must be non-empty");
  }
};

/// Prior constants and truncation level. Defaults are the non-informative settings
/// used across all simulated scenarios.
struct Hyperparams {
  double mu_beta = 0.0;
  double sigma2_beta = 20.0;
  double mu_eta = 0.0;
  double sigma2_eta = 10.0;
  double gamma1 = 5.0;  // inverse-gamma shape
  double gamma2 = 1.0;  // inverse-gamma scale
  int L = 20;

  void validate() const {
    if (!(sigma2_beta > 0.0) || !(sigma2_eta > 0.0) || !(gamma1 > 0.0) || !(gamma2 > 0.0))
      throw InputError("Hyperparams: variances and inverse-gamma parameters must be positive");
    if (!std::isfinite(mu_beta) || !std::isfinite(mu_eta)) throw InputError("Hyperparams: prior means must be finite");
    if (L < 2) throw InputError("Hyperparams: truncation level L must be at least 2");
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Per-arm mixture parameters at truncation L.
struct ArmParams {
  Eigen::VectorXd eta;     // L cluster means, strictly increasing
  Eigen::VectorXd sigma2;  // L cluster variances
  Eigen::VectorXd beta0;   // L-1 stick intercepts
  Eigen::MatrixXd beta;    // (L-1) x p stick slopes

  int L() const { return static_cast<int>(eta.size()); }
  std::size_t p() const { return static_cast<std::size_t>(beta.cols()); }

  static ArmParams zeros(int L, std::size_t p) {
    ArmParams a;
    a.eta = Eigen::VectorXd::LinSpaced(L, 0.0, static_cast<double>(L - 1));
    a.sigma2 = Eigen::VectorXd::Ones(L);
    a.beta0 = Eigen::VectorXd::Zero(L - 1);
    a.beta = Eigen::MatrixXd::Zero(L - 1, static_cast<Eigen::Index>(p));
    return a;
  }

  bool eta_strictly_increasing() const {
    for (Eigen::Index l = 1; l < eta.size(); ++l)
      if (!(eta[l] > eta[l - 1])) return false;
    return true;
  }

  void validate() const {
    const Eigen::Index L = eta.size();
    if (L < 2 || sigma2.size() != L || beta0.size() != L - 1 || beta.rows() != L - 1)
      throw InputError("ArmParams: inconsistent truncation sizes");
    if (!eta_strictly_increasing()) throw InputError("ArmParams: eta must be strictly increasing");
    if ((sigma2.array() <= 0.0).any()) throw InputError("ArmParams: sigma2 must be positive");
  }
};

/// Linear predictor beta0 + x'beta of one stick.
template <class XVec, class BVec>
double compute_alpha(const XVec& x, double beta0, const BVec& beta) {
  if (x.size() != beta.size()) throw InputError("compute_alpha: covariate and coefficient sizes differ");
  const double a = beta0 + x.dot(beta);
  if (!std::isfinite(a)) throw InputError("compute_alpha: non-finite linear predictor");
  return a;
}

/// Probit stick-breaking weights from L-1 stick predictors; the last cluster takes the remaining stick.
inline std::vector<double> compute_stick_weights(std::span<const double> alphas) {
  std::vector<double> w(alphas.size() + 1);
  double remaining = 1.0;
  for (std::size_t l = 0; l < alphas.size(); ++l) {
    if (!std::isfinite(alphas[l])) throw InputError("compute_stick_weights: non-finite predictor");
    w[l] = remaining * normal_cdf(alphas[l]);
    remaining *= normal_ccdf(alphas[l]);
  }
  w.back() = remaining;
  return w;
}

inline constexpr double kProbFloor = 1e-300;
inline constexpr double kProbCeil = 1.0 - 1e-16;

/// Log stick weights written into `out` (length L). Probit probabilities are clamped to
/// [1e-300, 1 - 1e-16] so no weight is exactly zero in log space.
inline void log_stick_weights(std::span<const double> alphas, std::span<double> out) {
  double log_remaining = 0.0;
  for (std::size_t l = 0; l < alphas.size(); ++l) {
    const double v = std::clamp(normal_cdf(alphas[l]), kProbFloor, kProbCeil);
    const double one_minus_v = std::clamp(normal_ccdf(alphas[l]), kProbFloor, kProbCeil);
    out[l] = log_remaining + std::log(v);
    log_remaining += std::log(one_minus_v);
  }
  out[alphas.size()] = log_remaining;
}

/// Stick predictors alpha_l(x) for l = 1..L-1.
template <class XVec>
std::vector<double> arm_alphas(const XVec& x, const ArmParams& arm) {
  std::vector<double> a(static_cast<std::size_t>(arm.L() - 1));
  for (int l = 0; l < arm.L() - 1; ++l) a[static_cast<std::size_t>(l)] = compute_alpha(x, arm.beta0[l], arm.beta.row(l).transpose());
  return a;
}

/// Conditional outcome density f(y | x) under the truncated Gaussian mixture.
template <class XVec>
double conditional_outcome_density(double y, const XVec& x, const ArmParams& arm) {
  const auto w = compute_stick_weights(arm_alphas(x, arm));
  double f = 0.0;
  for (int l = 0; l < arm.L(); ++l) f += w[static_cast<std::size_t>(l)] * normal_pdf(y, arm.eta[l], arm.sigma2[l]);
  return f;
}

}  // namespace cdbmm
