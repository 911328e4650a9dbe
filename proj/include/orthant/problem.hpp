// Copyright 2026 The Orthant SMC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ORTHANT_PROBLEM_HPP
#define ORTHANT_PROBLEM_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "orthant/gauss.hpp"
#include "orthant/linalg.hpp"
#include "orthant/rng.hpp"

namespace orthant {

/// Box-constrained Gaussian integral: P(lower <= Y <= upper) for
/// Y ~ N(mean, sigma). The Cholesky factor is cached at construction; all
/// samplers work in the whitened coordinates eta = chol^{-1} (y - mean).
struct OrthantProblem {
  int d = 0;
  std::vector<double> lower;  // entries may be -inf
  std::vector<double> upper;  // entries may be +inf
  SymMatrix sigma;
  LowerTriangular chol;
  std::vector<double> mean;
  std::map<std::string, std::string> meta;

  static OrthantProblem from_covariance(std::vector<double> lower,
                                        std::vector<double> upper,
                                        SymMatrix sigma,
                                        std::vector<double> mean = {}) {
    OrthantProblem p;
    p.d = sigma.dim();
    p.lower = std::move(lower);
    p.upper = std::move(upper);
    p.chol = cholesky(sigma);
    p.sigma = std::move(sigma);
    p.mean = mean.empty() ? std::vector<double>(p.d, 0.0) : std::move(mean);
    p.validate();
    return p;
  }

  static OrthantProblem from_cholesky(std::vector<double> lower,
                                      std::vector<double> upper,
                                      LowerTriangular chol,
                                      std::vector<double> mean = {}) {
    OrthantProblem p;
    p.d = chol.dim();
    p.lower = std::move(lower);
    p.upper = std::move(upper);
    p.sigma = chol.gram();
    p.chol = std::move(chol);
    p.mean = mean.empty() ? std::vector<double>(p.d, 0.0) : std::move(mean);
    p.validate();
    return p;
  }

  void validate() const {
    if (static_cast<int>(lower.size()) != d ||
        static_cast<int>(upper.size()) != d ||
        static_cast<int>(mean.size()) != d)
      throw std::invalid_argument("OrthantProblem: length mismatch");
    for (int i = 0; i < d; ++i)
      if (!(lower[i] < upper[i]))
        throw std::invalid_argument(
            "OrthantProblem: requires lower < upper at coordinate " +
            std::to_string(i + 1));
  }

  bool zero_mean() const {
    for (double m : mean)
      if (m != 0.0) return false;
    return true;
  }
};

/// Folds a nonzero mean into the bounds; the orthant probability is
/// unchanged.
inline OrthantProblem standardize(const OrthantProblem& p) {
  if (p.zero_mean()) return p;
  OrthantProblem out = p;
  for (int i = 0; i < p.d; ++i) {
    out.lower[i] = p.lower[i] - p.mean[i];
    out.upper[i] = p.upper[i] - p.mean[i];
    out.mean[i] = 0.0;
  }
  return out;
}

/// Truncation interval for whitened coordinate i given the previous
/// coordinates:
///   [(a_i - sum_{j<i} g_ij eta_j) / g_ii, (b_i - sum_{j<i} g_ij eta_j) / g_ii]
/// `bound_scale` multiplies both bounds (used by the Student extension).
inline Interval bound_interval_scaled(const OrthantProblem& p,
                                      double bound_scale, int i,
                                      std::span<const double> prefix) {
  if (i < 0 || i >= p.d)
    throw std::out_of_range("bound_interval: coordinate index out of range");
  if (static_cast<int>(prefix.size()) < i)
    throw std::invalid_argument("bound_interval: prefix too short");
  const auto row = p.chol.row(i);
  double shift = 0.0;
  for (int j = 0; j < i; ++j) shift += row[j] * prefix[j];
  const double diag = row[i];
  return {(p.lower[i] * bound_scale - shift) / diag,
          (p.upper[i] * bound_scale - shift) / diag};
}

inline Interval bound_interval(const OrthantProblem& p, int i,
                               std::span<const double> prefix) {
  return bound_interval_scaled(p, 1.0, i, prefix);
}

/// Reorders the problem coordinates; the orthant probability is invariant.
inline OrthantProblem apply_permutation(const OrthantProblem& p,
                                        const Permutation& perm) {
  auto [sigma, lo, hi] = permute_problem(p.sigma, p.lower, p.upper, perm);
  std::vector<double> mean(p.d);
  for (int j = 0; j < p.d; ++j) mean[j] = p.mean[perm.order[j]];
  auto out = OrthantProblem::from_covariance(std::move(lo), std::move(hi),
                                             std::move(sigma), std::move(mean));
  out.meta = p.meta;
  return out;
}

namespace detail {

inline double cauchy_draw(std::uint64_t seed, std::uint64_t i, std::uint64_t j,
                          double scale) {
  SplitMix64 rng = derive_stream(seed, i, j);
  return scale * std::tan(M_PI * (rng.uniform() - 0.5));
}

}  // namespace detail

/// Heavy-tailed benchmark covariance: Sigma = X^t X with X a d x d matrix of
/// iid Cauchy(0, 0.01) entries, lower bounds iid Cauchy(0, 0.01), upper
/// bounds +inf. Every draw is derived from the seed and its grid position,
/// so the dimension-d' problem reuses exactly the leading d' x d' block of
/// draws of the dimension-d problem (the covariances themselves differ by
/// the extra rows entering the Gram products).
inline OrthantProblem gen_cauchy_problem(int d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("gen_cauchy_problem: d must be >= 1");
  constexpr double kScale = 0.01;
  std::vector<std::vector<double>> x(d);
  for (int i = 0; i < d; ++i) {
    x[i].resize(d, 0.0);
    for (int j = 0; j < d; ++j)
      x[i][j] = detail::cauchy_draw(seed, static_cast<std::uint64_t>(i) + 1,
                                    static_cast<std::uint64_t>(j) + 1, kScale);
  }
  SymMatrix sigma(d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k <= j; ++k) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) acc += x[i][j] * x[i][k];
      sigma(j, k) = acc;
      sigma(k, j) = acc;
    }
  std::vector<double> lo(d), hi(d, kInf);
  for (int i = 0; i < d; ++i)
    lo[i] = detail::cauchy_draw(seed, 0, static_cast<std::uint64_t>(i) + 1,
                                kScale);

  // Heavy tails occasionally produce a numerically semidefinite product;
  // nudge the diagonal until the factorization goes through. The probe also
  // covers the greedily reordered factorization, so generated problems stay
  // usable with variable ordering switched on.
  double trace = 0.0;
  for (int i = 0; i < d; ++i) trace += sigma(i, i);
  double jitter = 1e-10 * trace / d;
  int boosts = 0;
  for (;;) {
    try {
      auto p = OrthantProblem::from_covariance(lo, hi, sigma);
      Permutation perm = gibson_ordering(p.sigma, p.lower, p.upper);
      (void)apply_permutation(p, perm);
      if (boosts > 0) p.meta["regularized"] = std::to_string(boosts);
      return p;
    } catch (const NotPositiveDefinite&) {
      if (boosts >= 60) throw;
      for (int i = 0; i < d; ++i) sigma(i, i) += jitter;
      jitter *= 2.0;
      ++boosts;
    }
  }
}

/// AR(1) box problem: x_1 ~ N(0, s^2) (or the stationary law when requested),
/// x_t | x_{t-1} ~ N(rho x_{t-1}, s^2), all coordinates confined to
/// [lower, upper].
struct Ar1Spec {
  int horizon = 1;           // T
  double rho = 0.0;
  double upper = kInf;       // b
  double lower = 0.0;        // a
  double sigma = 1.0;
  bool stationary_start = false;
};

inline OrthantProblem gen_ar1_problem(const Ar1Spec& spec) {
  if (spec.horizon < 1)
    throw std::invalid_argument("gen_ar1_problem: horizon must be >= 1");
  if (spec.stationary_start && !(std::abs(spec.rho) < 1.0))
    throw std::invalid_argument(
        "gen_ar1_problem: stationary start needs |rho| < 1");
  const int T = spec.horizon;
  LowerTriangular L(T);
  const double first_sd =
      spec.stationary_start ? spec.sigma / std::sqrt(1.0 - spec.rho * spec.rho)
                            : spec.sigma;
  for (int t = 0; t < T; ++t) {
    L(t, 0) = std::pow(spec.rho, t) * first_sd;
    for (int j = 1; j <= t; ++j)
      L(t, j) = spec.sigma * std::pow(spec.rho, t - j);
  }
  std::vector<double> lo(T, spec.lower), hi(T, spec.upper);
  return OrthantProblem::from_cholesky(std::move(lo), std::move(hi),
                                       std::move(L));
}

/// Ranking probability P(X_p > ... > X_1) for independent X_i ~
/// N(beta_i, sigma^2), expressed through the consecutive differences
/// D_i = X_{i+1} - X_i (dimension p-1, tridiagonal covariance). The chain of
/// p correlated coordinates itself would be singular; differencing is not.
inline OrthantProblem gen_thurstonian(std::span<const double> beta,
                                      double sigma) {
  const int p = static_cast<int>(beta.size());
  if (p < 2) throw std::invalid_argument("gen_thurstonian: need p >= 2");
  if (!(sigma > 0.0)) throw std::invalid_argument("gen_thurstonian: sigma <= 0");
  const int d = p - 1;
  SymMatrix sig(d);
  for (int i = 0; i < d; ++i) {
    sig(i, i) = 2.0 * sigma * sigma;
    if (i + 1 < d) {
      sig(i, i + 1) = -sigma * sigma;
      sig(i + 1, i) = -sigma * sigma;
    }
  }
  std::vector<double> mean(d), lo(d, 0.0), hi(d, kInf);
  for (int i = 0; i < d; ++i) mean[i] = beta[i + 1] - beta[i];
  return OrthantProblem::from_covariance(std::move(lo), std::move(hi),
                                         std::move(sig), std::move(mean));
}

/// Panel multinomial probit likelihood (one individual): J alternatives over
/// T periods, utility noise u_{kt} = alpha_k + eta_{kt} with alpha correlated
/// across choices and eta_{kt} = rho eta_{k,t-1} + nu_{kt}, nu correlated
/// across choices. The observed choice sequence turns the likelihood into a
/// T(J-1)-dimensional orthant probability over utility differences.
struct ProbitPanelSpec {
  int alternatives = 2;        // J
  int periods = 1;             // T
  std::vector<int> choices;    // observed j_t (0-based); empty -> seeded draw
  double alpha_sd = 0.5;
  double alpha_corr = 0.5;
  double nu_sd = 1.0;
  double nu_corr = 0.3;
  double ar_coeff = 0.5;       // rho
  int n_regressors = 2;
};

inline OrthantProblem gen_probit_panel(const ProbitPanelSpec& spec,
                                       std::uint64_t seed) {
  const int J = spec.alternatives;
  const int T = spec.periods;
  if (J < 2 || T < 1)
    throw std::invalid_argument("gen_probit_panel: need J >= 2 and T >= 1");
  std::vector<int> choices = spec.choices;
  if (choices.empty()) {
    SplitMix64 rng = derive_stream(seed, 0xC4, 0);
    choices.resize(T);
    for (int t = 0; t < T; ++t)
      choices[t] = static_cast<int>(rng.uniform() * J) % J;
  }
  if (static_cast<int>(choices.size()) != T)
    throw std::invalid_argument("gen_probit_panel: choice sequence length");
  for (int c : choices)
    if (c < 0 || c >= J)
      throw std::invalid_argument("gen_probit_panel: invalid choice index");

  // Exchangeable covariances for the choice random effects and innovations.
  auto pair_cov = [](double sd, double corr, int k, int l) {
    return (k == l) ? sd * sd : corr * sd * sd;
  };
  const double rho = spec.ar_coeff;
  // Time factor of the AR(1) noise started at eta_1 = nu_1:
  // sum_{s<=min(t,t')} rho^{(t-s)+(t'-s)} (t, t' are 1-based here).
  auto time_factor = [rho](int t, int tp) {
    double acc = 0.0;
    int m = std::min(t, tp);
    for (int s = 1; s <= m; ++s) acc += std::pow(rho, (t - s) + (tp - s));
    return acc;
  };

  const int d = T * (J - 1);
  // Index map: position (t, r) holds the r-th alternative != choices[t].
  std::vector<std::pair<int, int>> coord;  // (t, k)
  coord.reserve(d);
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < J; ++k)
      if (k != choices[t]) coord.emplace_back(t, k);

  SymMatrix sigma(d);
  for (int r = 0; r < d; ++r) {
    auto [t, k] = coord[r];
    for (int c = 0; c <= r; ++c) {
      auto [tp, kp] = coord[c];
      int jt = choices[t], jtp = choices[tp];
      double alpha = pair_cov(spec.alpha_sd, spec.alpha_corr, k, kp) -
                     pair_cov(spec.alpha_sd, spec.alpha_corr, k, jtp) -
                     pair_cov(spec.alpha_sd, spec.alpha_corr, jt, kp) +
                     pair_cov(spec.alpha_sd, spec.alpha_corr, jt, jtp);
      double nu = pair_cov(spec.nu_sd, spec.nu_corr, k, kp) -
                  pair_cov(spec.nu_sd, spec.nu_corr, k, jtp) -
                  pair_cov(spec.nu_sd, spec.nu_corr, jt, kp) +
                  pair_cov(spec.nu_sd, spec.nu_corr, jt, jtp);
      double v = alpha + time_factor(t + 1, tp + 1) * nu;
      sigma(r, c) = v;
      sigma(c, r) = v;
    }
  }

  // Regressors and coefficients are simulated standard normal, seeded.
  const int p = spec.n_regressors;
  std::vector<double> beta(p);
  {
    SplitMix64 rng = derive_stream(seed, 0xB0, 0);
    for (int i = 0; i < p; ++i) beta[i] = inverse_std_normal_cdf(rng.uniform());
  }
  auto regressor_effect = [&](int k, int t) {
    double acc = 0.0;
    SplitMix64 rng = derive_stream(seed, 0xA0 + static_cast<std::uint64_t>(k),
                                   static_cast<std::uint64_t>(t));
    for (int i = 0; i < p; ++i)
      acc += beta[i] * inverse_std_normal_cdf(rng.uniform());
    return acc;
  };

  std::vector<double> lo(d, kNegInf), hi(d);
  for (int r = 0; r < d; ++r) {
    auto [t, k] = coord[r];
    hi[r] = regressor_effect(choices[t], t) - regressor_effect(k, t);
  }
  auto problem = OrthantProblem::from_covariance(std::move(lo), std::move(hi),
                                                 std::move(sigma));
  problem.meta["generator"] = "probit-panel";
  return problem;
}

}  // namespace orthant

#endif  // ORTHANT_PROBLEM_HPP
