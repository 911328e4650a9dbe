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

#ifndef ORTHANT_EXPECTATIONS_HPP
#define ORTHANT_EXPECTATIONS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "orthant/estimators.hpp"

namespace orthant {

/// Terminal weighted population viewed as a sample from the truncated law.
using WeightedSample = ParticleSystem;

using PathFunction = std::function<std::vector<double>(std::span<const double>)>;

/// Self-normalized estimator of E[h(eta)] under the truncated distribution:
/// sum_m W_m h(eta^m) with W the normalized weights. Exact 1 for h == 1.
inline std::vector<double> weighted_expectation(const WeightedSample& sample,
                                                const PathFunction& h) {
  if (sample.particles < 1 || sample.t < 1)
    throw std::invalid_argument("weighted_expectation: empty sample");
  double lse = log_sum_exp(sample.log_weights);
  if (lse == kNegInf)
    throw std::runtime_error("weighted_expectation: dead sample");
  std::vector<double> acc;
  double wsum = 0.0;
  for (int m = 0; m < sample.particles; ++m) {
    double w = std::exp(sample.log_weights[m] - lse);
    wsum += w;
    auto hv = h(sample.path(m).first(sample.t));
    if (acc.empty()) acc.assign(hv.size(), 0.0);
    if (hv.size() != acc.size())
      throw std::invalid_argument("weighted_expectation: h size changed");
    for (std::size_t i = 0; i < hv.size(); ++i) acc[i] += w * hv[i];
  }
  // Dividing by the realized weight sum makes h == 1 exactly one.
  for (double& v : acc) v /= wsum;
  return acc;
}

/// Wraps a function of the original variable y into one of the whitened
/// path, via y = Gamma eta (plus the problem mean).
inline PathFunction in_original_coordinates(const OrthantProblem& p,
                                            PathFunction h_of_y) {
  return [&p, h = std::move(h_of_y)](std::span<const double> eta) {
    std::vector<double> y(eta.size());
    for (std::size_t j = 0; j < eta.size(); ++j) {
      const auto row = p.chol.row(static_cast<int>(j));
      double acc = 0.0;
      for (std::size_t k = 0; k <= j; ++k) acc += row[k] * eta[k];
      y[j] = acc + p.mean[j];
    }
    return h(y);
  };
}

inline PathFunction identity_path_function() {
  return [](std::span<const double> eta) {
    return std::vector<double>(eta.begin(), eta.end());
  };
}

struct ChainDiagnostics {
  std::vector<std::vector<double>> autocorr;  // per coordinate, lags 1..K
  std::vector<double> mean;
  std::vector<double> sd;
};

struct GibbsSample {
  int d = 0;                      // coordinates per draw (without u)
  bool has_mixing = false;
  std::vector<std::vector<double>> draws;  // thinned; u appended when present
  ChainDiagnostics diagnostics;
};

namespace detail {

inline std::vector<double> autocorrelations(std::span<const double> xs,
                                            int max_lag) {
  const int n = static_cast<int>(xs.size());
  std::vector<double> out;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= std::max(n, 1);
  double denom = 0.0;
  for (double x : xs) denom += (x - mean) * (x - mean);
  for (int lag = 1; lag <= max_lag && lag < n; ++lag) {
    double num = 0.0;
    for (int t = 0; t + lag < n; ++t)
      num += (xs[t] - mean) * (xs[t + lag] - mean);
    out.push_back(denom > 0.0 ? num / denom : 0.0);
  }
  return out;
}

}  // namespace detail

/// Benchmark MCMC sampler for the truncated (Gaussian or Student) law in the
/// whitened parameterization: systematic-scan Gibbs, plus a Metropolis step
/// on the mixing variable for Student targets. The chain starts from one
/// sequential-proposal pass, which is feasible by construction.
inline GibbsSample gibbs_truncated_sampler(const OrthantProblem& problem,
                                           std::optional<double> nu,
                                           int n_iter, int thin,
                                           std::uint64_t seed,
                                           int max_lag = 20,
                                           double u_step = 0.5) {
  if (n_iter < 1 || thin < 1)
    throw std::invalid_argument("gibbs_truncated_sampler: bad iteration spec");
  const OrthantProblem p = standardize(problem);
  const int d = p.d;
  SplitMix64 rng = derive_stream(seed, rngtag::kChain, 0);

  std::vector<double> eta(d, 0.0);
  double u = nu ? sample_chi_squared(*nu, rng) : 0.0;
  double scale = nu ? student_bound_scale(u, *nu) : 1.0;
  ConstraintSystem cs(p, d, scale);
  bool started = false;
  for (int attempt = 0; attempt < 100 && !started; ++attempt) {
    for (int i = 0; i < d; ++i) {
      Interval iv = bound_interval_scaled(p, scale, i, eta);
      eta[i] = sample_truncated_std_normal(iv, rng);
    }
    cs.set_bound_scale(scale);
    cs.sync(eta);
    started = cs.feasible();
  }
  if (!started)
    throw std::runtime_error("gibbs_truncated_sampler: no feasible start");

  GibbsSample out;
  out.d = d;
  out.has_mixing = nu.has_value();
  const int kept = n_iter / thin;
  out.draws.reserve(kept);
  for (int it = 1; it <= n_iter; ++it) {
    if (nu) mh_update_u(cs, u, *nu, u_step, rng);
    gibbs_sweep(cs, eta, rng);
    if (it % thin == 0) {
      std::vector<double> row(eta.begin(), eta.end());
      if (nu) row.push_back(u);
      out.draws.push_back(std::move(row));
    }
  }

  const int n = static_cast<int>(out.draws.size());
  std::vector<double> column(n);
  const int cols = d + (nu ? 1 : 0);
  for (int j = 0; j < cols; ++j) {
    for (int t = 0; t < n; ++t) column[t] = out.draws[t][j];
    out.diagnostics.autocorr.push_back(
        detail::autocorrelations(column, max_lag));
    double mean = 0.0;
    for (double x : column) mean += x;
    mean /= std::max(n, 1);
    double var = 0.0;
    for (double x : column) var += (x - mean) * (x - mean);
    var /= std::max(n - 1, 1);
    out.diagnostics.mean.push_back(mean);
    out.diagnostics.sd.push_back(std::sqrt(var));
  }
  return out;
}

}  // namespace orthant

#endif  // ORTHANT_EXPECTATIONS_HPP
