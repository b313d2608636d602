#pragma once

// Blocked Gibbs sampler for the confounder-dependent probit stick-breaking mixture.
//
// Cluster labels are zero-based here (0..L-1); the persistence layer writes them one-based.
// Per iteration the scan order is: arm 0 (weights, allocations, atoms, augmentation, Z
// rescaling, stick regressions), then arm 1 in the same order, then imputation of the missing
// potential outcomes. Off-arm units enter each arm's updates through their current imputation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdbmm/errors.hpp"
#include "cdbmm/model.hpp"
#include "cdbmm/rng.hpp"
#include "cdbmm/sampling.hpp"

namespace cdbmm {

struct ChainConfig {
  int n_iter = 3000;
  int burn_in = 1000;
  int thin = 2;
  std::uint64_t seed = 1;
  // Leading burn-in iterations in which stick regressions keep only their intercepts;
  // -1 means burn_in / 2.
  int warmup = -1;

  void validate() const {
    if (!(n_iter > burn_in) || burn_in < 0) throw InputError("ChainConfig: require n_iter > burn_in >= 0");
    if (thin < 1) throw InputError("ChainConfig: thin must be at least 1");
    if (warmup < -1 || warmup > burn_in) throw InputError("ChainConfig: warmup must lie in [0, burn_in] (or -1 for burn_in / 2)");
  }
  int stored_draws() const { return (n_iter - burn_in) / thin; }
  int warmup_iterations() const { return warmup < 0 ? burn_in / 2 : warmup; }

  friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

/// Augmented probit variables for one arm: for each stick level l, the units that
/// contribute a Z_l (those allocated to cluster l or beyond) and their values.
struct AugmentedLevel {
  std::vector<int> units;
  std::vector<double> z;
};

/// Distinct covariate rows of a dataset. Stick weights depend on x only, so they are
/// evaluated once per distinct row rather than once per unit.
struct CovariatePatterns {
  Eigen::MatrixXd rows;          // k x p
  std::vector<int> of_unit;      // length n, index into rows
  std::vector<int> multiplicity; // length k

  static CovariatePatterns build(const Eigen::MatrixXd& x) {
    CovariatePatterns cp;
    std::map<std::vector<double>, int> seen;
    cp.of_unit.resize(static_cast<std::size_t>(x.rows()));
    std::vector<std::vector<double>> uniq;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      std::vector<double> key;
      key.reserve(static_cast<std::size_t>(x.cols()));
      for (Eigen::Index j = 0; j < x.cols(); ++j) key.push_back(x(i, j));
      auto [it, inserted] = seen.try_emplace(key, static_cast<int>(uniq.size()));
      if (inserted) {
        uniq.push_back(key);
        cp.multiplicity.push_back(0);
      }
      cp.of_unit[static_cast<std::size_t>(i)] = it->second;
      ++cp.multiplicity[static_cast<std::size_t>(it->second)];
    }
    cp.rows.resize(static_cast<Eigen::Index>(uniq.size()), x.cols());
    for (std::size_t k = 0; k < uniq.size(); ++k)
      for (Eigen::Index j = 0; j < x.cols(); ++j) cp.rows(static_cast<Eigen::Index>(k), j) = uniq[k][static_cast<std::size_t>(j)];
    return cp;
  }

  std::size_t size() const { return multiplicity.size(); }
};

struct ChainState {
  std::array<ArmParams, 2> arms;
  std::array<std::vector<int>, 2> S;              // cluster allocation per arm, all n units
  std::array<Eigen::VectorXd, 2> y_imputed;       // potential outcomes; observed arm holds the datum
  std::array<std::vector<AugmentedLevel>, 2> Z;   // L-1 levels per arm
};

/// One stored iteration.
struct Draw {
  int iteration = 0;
  std::array<ArmParams, 2> arms;
  std::array<std::vector<int>, 2> S;
  std::array<Eigen::VectorXd, 2> y_imputed;
};

struct PosteriorDraws {
  std::vector<Draw> draws;
  ChainConfig config;
  Hyperparams hyper;
  std::size_t n = 0;
};

/// Dataset plus derived quantities the sweep reuses.
class GibbsContext {
 public:
  GibbsContext(const Dataset& data, const Hyperparams& hyper) : data_(&data), hyper_(hyper) {
    data.validate();
    hyper.validate();
    patterns_ = CovariatePatterns::build(data.x);
  }

  const Dataset& data() const { return *data_; }
  const Hyperparams& hyper() const { return hyper_; }
  const CovariatePatterns& patterns() const { return patterns_; }
  int L() const { return hyper_.L; }

  /// log stick weights per covariate pattern: k x L.
  Eigen::MatrixXd pattern_log_weights(const ArmParams& arm) const {
    const int L = arm.L();
    Eigen::MatrixXd alpha = patterns_.rows * arm.beta.transpose();
    alpha.rowwise() += arm.beta0.transpose();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(patterns_.size()), L);
    std::vector<double> a(static_cast<std::size_t>(L - 1)), lw(static_cast<std::size_t>(L));
    for (Eigen::Index k = 0; k < alpha.rows(); ++k) {
      for (int l = 0; l < L - 1; ++l) {
        a[static_cast<std::size_t>(l)] = alpha(k, l);
        if (!std::isfinite(alpha(k, l))) throw NumericError("non-finite stick predictor");
      }
      log_stick_weights(a, lw);
      for (int l = 0; l < L; ++l) out(k, l) = lw[static_cast<std::size_t>(l)];
    }
    return out;
  }

  /// Stick predictors per covariate pattern: k x (L-1).
  Eigen::MatrixXd pattern_alphas(const ArmParams& arm) const {
    Eigen::MatrixXd alpha = patterns_.rows * arm.beta.transpose();
    alpha.rowwise() += arm.beta0.transpose();
    return alpha;
  }

 private:
  const Dataset* data_;
  Hyperparams hyper_;
  CovariatePatterns patterns_;
};

/// Redraw S^(t) for every unit from P(S_i = l) ∝ ω_l(x_i) N(y_i(t); η_l, σ²_l), in log space.
inline void step_cluster_allocations(ChainState& state, const GibbsContext& ctx, int t, RngHandle& rng) {
  const ArmParams& arm = state.arms[static_cast<std::size_t>(t)];
  const int L = arm.L();
  const Eigen::MatrixXd log_w = ctx.pattern_log_weights(arm);
  std::vector<double> log_norm(static_cast<std::size_t>(L)), inv_var(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    log_norm[static_cast<std::size_t>(l)] = -kLogSqrt2Pi - 0.5 * std::log(arm.sigma2[l]);
    inv_var[static_cast<std::size_t>(l)] = 1.0 / arm.sigma2[l];
  }
  std::vector<double> lp(static_cast<std::size_t>(L)), scratch(static_cast<std::size_t>(L));
  const auto& y = state.y_imputed[static_cast<std::size_t>(t)];
  auto& S = state.S[static_cast<std::size_t>(t)];
  const auto& pat = ctx.patterns().of_unit;
  for (std::size_t i = 0; i < S.size(); ++i) {
    const Eigen::Index k = pat[i];
    const double yi = y[static_cast<Eigen::Index>(i)];
    for (int l = 0; l < L; ++l) {
      const double d = yi - arm.eta[l];
      const auto ul = static_cast<std::size_t>(l);
      lp[ul] = log_w(k, l) + log_norm[ul] - 0.5 * d * d * inv_var[ul];
    }
    S[i] = static_cast<int>(draw_categorical_log(rng, lp, scratch));
  }
}

/// Sufficient statistics of one arm's clusters.
struct ClusterStats {
  std::vector<int> count;
  std::vector<double> sum;

  static ClusterStats of(const std::vector<int>& S, const Eigen::VectorXd& y, int L) {
    ClusterStats cs{std::vector<int>(static_cast<std::size_t>(L), 0), std::vector<double>(static_cast<std::size_t>(L), 0.0)};
    for (std::size_t i = 0; i < S.size(); ++i) {
      ++cs.count[static_cast<std::size_t>(S[i])];
      cs.sum[static_cast<std::size_t>(S[i])] += y[static_cast<Eigen::Index>(i)];
    }
    return cs;
  }
};

/// Redraw η_l for l = 1..L in order from the conjugate normal truncated to (η_{l-1}, η_{l+1}):
/// the freshly drawn lower neighbour and the current upper one. Bounding above keeps an empty
/// cluster's prior draw from pushing occupied clusters off their data. Empty clusters reduce
/// to the ordered prior.
inline void step_cluster_means(ChainState& state, const GibbsContext& ctx, int t, RngHandle& rng) {
  const Hyperparams& h = ctx.hyper();
  ArmParams& arm = state.arms[static_cast<std::size_t>(t)];
  const int L = arm.L();
  const ClusterStats cs = ClusterStats::of(state.S[static_cast<std::size_t>(t)], state.y_imputed[static_cast<std::size_t>(t)], L);
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (int l = 0; l < L; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const double precision = cs.count[ul] / arm.sigma2[l] + 1.0 / h.sigma2_eta;
    const double mean = (cs.sum[ul] / arm.sigma2[l] + h.mu_eta / h.sigma2_eta) / precision;
    const double lower = (l == 0) ? -inf : arm.eta[l - 1];
    const double upper = (l + 1 < L) ? arm.eta[l + 1] : inf;
    arm.eta[l] = draw_truncated_normal(rng, mean, 1.0 / precision, lower, upper);
  }
}

/// Redraw σ²_l ~ InvGamma(γ1 + n_l/2, γ2 + SS_l/2), SS_l taken around the current η_l.
inline void step_cluster_variances(ChainState& state, const GibbsContext& ctx, int t, RngHandle& rng) {
  const Hyperparams& h = ctx.hyper();
  ArmParams& arm = state.arms[static_cast<std::size_t>(t)];
  const int L = arm.L();
  const auto& y = state.y_imputed[static_cast<std::size_t>(t)];
  const auto& S = state.S[static_cast<std::size_t>(t)];
  std::vector<double> ss(static_cast<std::size_t>(L), 0.0), count(static_cast<std::size_t>(L), 0.0);
  for (std::size_t i = 0; i < S.size(); ++i) {
    const double d = y[static_cast<Eigen::Index>(i)] - arm.eta[S[i]];
    ss[static_cast<std::size_t>(S[i])] += d * d;
    count[static_cast<std::size_t>(S[i])] += 1.0;
  }
  for (int l = 0; l < L; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    arm.sigma2[l] = draw_inverse_gamma(rng, h.gamma1 + 0.5 * count[ul], h.gamma2 + 0.5 * ss[ul]);
  }
}

/// Atoms: means first, then variances around the new means.
inline void step_cluster_params(ChainState& state, const GibbsContext& ctx, int t, RngHandle& rng) {
  step_cluster_means(state, ctx, t, rng);
  step_cluster_variances(state, ctx, t, rng);
}

/// Redraw the probit augmentation: for each unit and each level l <= min(S_i, L-2),
/// Z_l ~ N(α_l(x_i), 1) truncated to (0, ∞) if S_i = l and to (-∞, 0) if S_i > l.
inline void step_augmentation(ChainState& state, const GibbsContext& ctx, int t, RngHandle& rng) {
  const ArmParams& arm = state.arms[static_cast<std::size_t>(t)];
  const int L = arm.L();
  const Eigen::MatrixXd alpha = ctx.pattern_alphas(arm);
  const auto& S = state.S[static_cast<std::size_t>(t)];
  auto& Z = state.Z[static_cast<std::size_t>(t)];
  Z.assign(static_cast<std::size_t>(L - 1), AugmentedLevel{});
  const auto& pat = ctx.patterns().of_unit;
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < S.size(); ++i) {
    const int top = std::min(S[i], L - 2);
    for (int l = 0; l <= top; ++l) {
      const double a = alpha(pat[i], l);
      const double z = (S[i] == l) ? draw_truncated_normal(rng, a, 1.0, 0.0, inf)
                                   : draw_truncated_normal(rng, a, 1.0, -inf, 0.0);
      Z[static_cast<std::size_t>(l)].units.push_back(static_cast<int>(i));
      Z[static_cast<std::size_t>(l)].z.push_back(z);
    }
  }
}

namespace detail {

// Scale move (Z_l, beta_l) -> (g Z_l, g beta_l), g drawn from its conditional along the orbit:
// density g^(m-1) exp(-A g^2 / 2 + B g), m = #Z + #coefficients. Sign constraints on Z are
// preserved, so the joint posterior is invariant. For B = 0 the draw is exact (g^2 is Gamma);
// otherwise the Gamma draw is an independence proposal (current state g = 1) accepted
// with probability min(1, exp(B (g' - 1))). Slopes are left out when `with_slopes` is false.
inline void rescale_level(AugmentedLevel& level, const ArmParams& arm, int l, const GibbsContext& ctx, RngHandle& rng, bool with_slopes) {
  const Hyperparams& h = ctx.hyper();
  const Eigen::MatrixXd& rows = ctx.patterns().rows;
  const auto& of_unit = ctx.patterns().of_unit;
  double rss = 0.0;
  for (std::size_t k = 0; k < level.units.size(); ++k) {
    const auto pk = static_cast<Eigen::Index>(of_unit[static_cast<std::size_t>(level.units[k])]);
    double a = arm.beta0[l];
    if (with_slopes) a += rows.row(pk).dot(arm.beta.row(l));
    const double r = level.z[k] - a;
    rss += r * r;
  }
  double bsq = arm.beta0[l] * arm.beta0[l];
  double bsum = arm.beta0[l];
  Eigen::Index coef = 1;
  if (with_slopes) {
    bsq += arm.beta.row(l).squaredNorm();
    bsum += arm.beta.row(l).sum();
    coef += arm.beta.cols();
  }
  const double A = rss + bsq / h.sigma2_beta;
  const double B = h.mu_beta * bsum / h.sigma2_beta;
  const double m = static_cast<double>(level.units.size() + static_cast<std::size_t>(coef));
  if (!(A > 0.0) || !std::isfinite(A)) return;
  double g = std::sqrt(draw_gamma(rng, 0.5 * m, 0.5 * A));
  if (B != 0.0 && std::log(rng.uniform()) > B * (g - 1.0)) return;
  for (double& z : level.z) z *= g;
}

}  // namespace detail

/// Parameter-expansion move on every non-empty stick level: rescales that level's Z.
/// Leaves the joint posterior invariant and lets β travel along the flat directions that
/// appear when a covariate cell sits entirely above or below a level.
inline void step_rescale_augmentation(ChainState& state, const GibbsContext& ctx, int t, RngHandle& rng, bool intercept_only = false) {
  const ArmParams& arm = state.arms[static_cast<std::size_t>(t)];
  auto& Z = state.Z[static_cast<std::size_t>(t)];
  for (int l = 0; l < arm.L() - 1; ++l) {
    AugmentedLevel& level = Z[static_cast<std::size_t>(l)];
    if (!level.units.empty()) detail::rescale_level(level, arm, l, ctx, rng, !intercept_only);
  }
}

/// Redraw the stick-regression coefficients of every level from their conjugate
/// multivariate normal; an empty level draws from the prior. With `intercept_only` the
/// slopes are pinned at zero and only β0 is drawn.
inline void step_beta(ChainState& state, const GibbsContext& ctx, int t, RngHandle& rng, bool intercept_only = false) {
  ArmParams& arm = state.arms[static_cast<std::size_t>(t)];
  const auto& Z = state.Z[static_cast<std::size_t>(t)];
  const Eigen::MatrixXd& x = ctx.data().x;
  const Eigen::Index q = intercept_only ? 1 : x.cols() + 1;
  const auto& pat = ctx.patterns();
  for (int l = 0; l < arm.L() - 1; ++l) {
    const AugmentedLevel& level = Z[static_cast<std::size_t>(l)];
    // Aggregate by covariate pattern: X'X = sum_k c_k x_k x_k', X'z = sum_k (sum z) x_k.
    std::vector<double> cnt(pat.size(), 0.0), zsum(pat.size(), 0.0);
    for (std::size_t k = 0; k < level.units.size(); ++k) {
      const auto idx = static_cast<std::size_t>(pat.of_unit[static_cast<std::size_t>(level.units[k])]);
      cnt[idx] += 1.0;
      zsum[idx] += level.z[k];
    }
    Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(q, q) / ctx.hyper().sigma2_beta;
    Eigen::VectorXd shift = Eigen::VectorXd::Constant(q, ctx.hyper().mu_beta / ctx.hyper().sigma2_beta);
    Eigen::VectorXd row(q);
    row[0] = 1.0;
    for (std::size_t k = 0; k < pat.size(); ++k) {
      if (cnt[k] == 0.0) continue;
      if (q > 1) row.tail(q - 1) = pat.rows.row(static_cast<Eigen::Index>(k)).transpose();
      precision.noalias() += cnt[k] * row * row.transpose();
      shift += zsum[k] * row;
    }
    const Eigen::VectorXd b = draw_mv_normal_canonical(rng, precision, shift);
    arm.beta0[l] = b[0];
    if (q > 1) arm.beta.row(l) = b.tail(q - 1).transpose();
    else arm.beta.row(l).setZero();
  }
}

/// Redraw the unobserved potential outcome of every unit from the other arm's mixture
/// at its covariates. Observed entries are never written.
inline void step_impute_missing(ChainState& state, const GibbsContext& ctx, RngHandle& rng) {
  const Dataset& data = ctx.data();
  std::array<Eigen::MatrixXd, 2> weights;
  for (int t = 0; t < 2; ++t) {
    Eigen::MatrixXd lw = ctx.pattern_log_weights(state.arms[static_cast<std::size_t>(t)]);
    for (Eigen::Index k = 0; k < lw.rows(); ++k) {
      const double top = lw.row(k).maxCoeff();
      lw.row(k) = (lw.row(k).array() - top).exp();
    }
    weights[static_cast<std::size_t>(t)] = std::move(lw);
  }
  const auto& pat = ctx.patterns().of_unit;
  const int L = state.arms[0].L();
  std::vector<double> w(static_cast<std::size_t>(L));
  for (std::size_t i = 0; i < data.n(); ++i) {
    const int other = 1 - data.t[i];
    const ArmParams& arm = state.arms[static_cast<std::size_t>(other)];
    const auto& wk = weights[static_cast<std::size_t>(other)];
    for (int l = 0; l < L; ++l) w[static_cast<std::size_t>(l)] = wk(pat[i], l);
    const auto l = static_cast<Eigen::Index>(draw_categorical(rng, w));
    state.y_imputed[static_cast<std::size_t>(other)][static_cast<Eigen::Index>(i)] =
        arm.eta[l] + std::sqrt(arm.sigma2[l]) * rng.normal();
  }
}

/// Starting state: allocations by quantile-binning the observed outcomes of each arm into
/// min(5, L) bins, atoms at the bin means (padded with ordered prior draws), variances at
/// the within-bin variances floored at 1e-3, stick coefficients at zero, and imputations
/// set to the unit's observed outcome.
inline ChainState initialize_chain(const GibbsContext& ctx, RngHandle& rng) {
  const Dataset& data = ctx.data();
  const Hyperparams& h = ctx.hyper();
  const int L = h.L;
  const int bins = std::min(5, L);
  const std::size_t n = data.n();
  ChainState st;
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 2; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    st.y_imputed[ut] = data.y;
    std::vector<double> obs;
    for (std::size_t i = 0; i < n; ++i)
      if (data.t[i] == t) obs.push_back(data.y[static_cast<Eigen::Index>(i)]);
    std::sort(obs.begin(), obs.end());
    std::vector<double> edges;  // bins-1 interior cut points
    for (int b = 1; b < bins; ++b) {
      const auto pos = static_cast<std::size_t>(std::floor(static_cast<double>(b) * static_cast<double>(obs.size()) / bins));
      edges.push_back(obs[std::min(pos, obs.size() - 1)]);
    }
    auto bin_of = [&](double v) { return static_cast<int>(std::lower_bound(edges.begin(), edges.end(), v) - edges.begin()); };

    ArmParams arm = ArmParams::zeros(L, data.p());
    std::vector<double> sum(static_cast<std::size_t>(bins), 0.0), sum2(static_cast<std::size_t>(bins), 0.0);
    std::vector<int> cnt(static_cast<std::size_t>(bins), 0);
    st.S[ut].assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int b = std::clamp(bin_of(data.y[static_cast<Eigen::Index>(i)]), 0, bins - 1);
      st.S[ut][i] = b;
      if (data.t[i] != t) continue;
      const double v = data.y[static_cast<Eigen::Index>(i)];
      sum[static_cast<std::size_t>(b)] += v;
      sum2[static_cast<std::size_t>(b)] += v * v;
      ++cnt[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < bins; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      double mean = cnt[ub] > 0 ? sum[ub] / cnt[ub] : (b > 0 ? arm.eta[b - 1] : obs.front());
      if (b > 0 && !(mean > arm.eta[b - 1])) mean = arm.eta[b - 1] + 1e-6 * std::max(1.0, std::abs(arm.eta[b - 1]));
      arm.eta[b] = mean;
      const double var = cnt[ub] > 1 ? (sum2[ub] - sum[ub] * sum[ub] / cnt[ub]) / (cnt[ub] - 1) : 0.0;
      arm.sigma2[b] = std::max(var, 1e-3);
    }
    for (int l = bins; l < L; ++l) {
      arm.eta[l] = draw_truncated_normal(rng, h.mu_eta, h.sigma2_eta, arm.eta[l - 1], inf);
      arm.sigma2[l] = draw_inverse_gamma(rng, h.gamma1, h.gamma2);
    }
    st.arms[ut] = std::move(arm);
    st.Z[ut].assign(static_cast<std::size_t>(L - 1), AugmentedLevel{});
  }
  return st;
}

namespace detail {

template <class F>
void with_context(int iteration, int arm, const char* block, F&& f) {
  auto where = [&](const char* what) {
    std::string s = "iteration " + std::to_string(iteration);
    if (arm >= 0) s += ", arm " + std::to_string(arm);
    return s + ", " + block + ": " + what;
  };
  try {
    f();
  } catch (const NumericError& e) {
    throw NumericError(where(e.what()));
  } catch (const DomainError& e) {
    throw DomainError(where(e.what()));
  } catch (const InputError& e) {
    throw InputError(where(e.what()));
  }
}

}  // namespace detail

/// One full sweep over both arms followed by imputation. In `warmup` sweeps the stick
/// regressions drop their slopes, so early clusters cannot lock onto covariate cells.
inline void gibbs_sweep(ChainState& st, const GibbsContext& ctx, RngHandle& rng, int iteration = 0, bool warmup = false) {
  for (int t = 0; t < 2; ++t) {
    detail::with_context(iteration, t, "allocation", [&] { step_cluster_allocations(st, ctx, t, rng); });
    detail::with_context(iteration, t, "atoms", [&] { step_cluster_params(st, ctx, t, rng); });
    detail::with_context(iteration, t, "augmentation", [&] { step_augmentation(st, ctx, t, rng); });
    detail::with_context(iteration, t, "rescaling", [&] { step_rescale_augmentation(st, ctx, t, rng, warmup); });
    detail::with_context(iteration, t, "stick regression", [&] { step_beta(st, ctx, t, rng, warmup); });
  }
  detail::with_context(iteration, -1, "imputation", [&] { step_impute_missing(st, ctx, rng); });
}

inline Draw snapshot(const ChainState& st, int iteration) {
  return Draw{iteration, st.arms, st.S, st.y_imputed};
}

/// Run the sampler and keep every `thin`-th iteration after burn-in.
inline PosteriorDraws run_chain(const Dataset& data, const Hyperparams& hyper, const ChainConfig& config) {
  config.validate();
  const GibbsContext ctx(data, hyper);
  RngHandle rng(config.seed);
  ChainState st = initialize_chain(ctx, rng);
  PosteriorDraws out;
  out.config = config;
  out.hyper = hyper;
  out.n = data.n();
  out.draws.reserve(static_cast<std::size_t>(config.stored_draws()));
  for (int r = 1; r <= config.n_iter; ++r) {
    gibbs_sweep(st, ctx, rng, r, r <= config.warmup_iterations());
    if (r > config.burn_in && (r - config.burn_in) % config.thin == 0) out.draws.push_back(snapshot(st, r));
  }
  return out;
}

}  // namespace cdbmm
