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

#ifndef ORTHANT_ESTIMATORS_HPP
#define ORTHANT_ESTIMATORS_HPP

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "orthant/gauss.hpp"
#include "orthant/moves.hpp"
#include "orthant/problem.hpp"
#include "orthant/rng.hpp"
#include "orthant/student.hpp"

namespace orthant {

/// A particle whose accumulated weight falls below this level is zero as a
/// probability-domain double. A run whose whole population sinks below it is
/// reported as a dead system: the log-scale analogue of the non-numeric
/// output a probability-domain implementation would produce.
inline const double kDeadLogWeight =
    std::log(std::numeric_limits<double>::denorm_min());

/// Resampling-enabled runs fold their weights into log Z once the largest
/// one sinks below this level, long before the probability-domain floor.
inline constexpr double kRenormLogWeight = -600.0;

namespace rngtag {
inline constexpr std::uint64_t kParticle = 1;
inline constexpr std::uint64_t kResample = 2;
inline constexpr std::uint64_t kReplicate = 3;
inline constexpr std::uint64_t kChain = 4;
}  // namespace rngtag

struct MoveStats {
  std::string kernel;
  int sweeps = 0;
  double acceptance = 1.0;
  std::optional<double> u_acceptance;  // Student runs only
};

struct EstimateReport {
  double log_prob = kNegInf;
  bool failed = false;
  std::vector<std::pair<int, double>> ess_trace;  // (t, ess)
  std::vector<int> resample_events;               // t values, 1-based
  std::vector<MoveStats> move_stats;
  int particles = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

struct RunConfig {
  int particles = 1000;
  double ess_threshold = 0.5;          // alpha*: fraction of M; 0 disables
  std::optional<MoveConfig> move;      // none: plain particle filter
  bool ordering = false;
  std::uint64_t seed = 0;
  double u_step = 0.5;                 // Student mixing proposal scale
  bool refresh_u_each_step = false;

  void validate() const {
    if (particles < 2)
      throw std::invalid_argument("RunConfig: need at least 2 particles");
    if (!(ess_threshold >= 0.0 && ess_threshold <= 1.0))
      throw std::invalid_argument("RunConfig: ess threshold outside [0, 1]");
    if (move) move->validate();
  }
};

/// Terminal (or intermediate) weighted particle population.
struct ParticleSystem {
  int t = 0;
  int particles = 0;
  int stride = 0;
  std::vector<double> paths;        // row-major, particles x stride
  std::vector<double> log_weights;
  double log_z = 0.0;
  std::vector<double> mixing;       // u per particle; empty for Gaussian runs

  std::span<double> path(int m) {
    return {paths.data() + static_cast<std::size_t>(m) * stride,
            static_cast<std::size_t>(stride)};
  }
  std::span<const double> path(int m) const {
    return {paths.data() + static_cast<std::size_t>(m) * stride,
            static_cast<std::size_t>(stride)};
  }
};

/// Effective sample size (sum w)^2 / sum w^2 of a log-weight vector,
/// computed in log domain. All-(-inf) input is a dead system.
inline double ess(std::span<const double> log_weights) {
  double l1 = log_sum_exp(log_weights);
  if (l1 == kNegInf) throw std::runtime_error("ess: particle system died");
  double l2 = kNegInf;
  for (double w : log_weights)
    l2 = log_add_exp(l2, 2.0 * w);
  double value = std::exp(2.0 * l1 - l2);
  return std::clamp(value, 1.0, static_cast<double>(log_weights.size()));
}

/// Systematic resampling driven by one uniform draw: strata U, U+1, ...,
/// U+n-1 walked against the cumulated scaled weights. Every index i receives
/// either floor or ceil of n W_i copies.
inline std::vector<int> systematic_resample_at(
    std::span<const double> log_weights, int n, double uniform_draw) {
  const int m = static_cast<int>(log_weights.size());
  double lse = log_sum_exp(log_weights);
  if (lse == kNegInf)
    throw std::runtime_error("systematic_resample: particle system died");
  std::vector<int> ancestors(n);
  double u = uniform_draw;
  int j = 0;
  double c = n * std::exp(log_weights[0] - lse);
  for (int k = 0; k < n; ++k) {
    while (c < u && j < m - 1) {
      ++j;
      c += n * std::exp(log_weights[j] - lse);
    }
    ancestors[k] = j;
    u += 1.0;
  }
  return ancestors;
}

template <class Rng>
std::vector<int> systematic_resample(std::span<const double> log_weights,
                                     int n, Rng& rng) {
  return systematic_resample_at(log_weights, n, rng.uniform());
}

namespace detail {

inline OrthantProblem prepare_problem(const OrthantProblem& problem,
                                      bool ordering) {
  OrthantProblem p = standardize(problem);
  if (ordering) {
    Permutation perm = gibson_ordering(p.sigma, p.lower, p.upper);
    p = apply_permutation(p, perm);
  }
  return p;
}

inline double particle_scale(const std::optional<double>& nu,
                             const ParticleSystem& sys, int m) {
  return nu ? student_bound_scale(sys.mixing[m], *nu) : 1.0;
}

/// One move block: repeated invariant kernel rounds over the population,
/// preceded (for Student targets) by a Metropolis update of each particle's
/// mixing variable. Repetition count follows the configured policy.
inline void apply_move_step(const OrthantProblem& p, const RunConfig& cfg,
                            std::optional<double> nu, ParticleSystem& sys,
                            std::vector<SplitMix64>& rngs,
                            EstimateReport& rep) {
  const MoveConfig& mc = *cfg.move;
  const int t = sys.t;
  const int m_count = sys.particles;
  long long proposals = 0, accepts = 0;
  long long u_proposals = 0, u_accepts = 0;
  std::vector<double> before(t);
  std::vector<double> scratch(t);

  auto round = [&]() {
    double displacement = 0.0;
    for (int m = 0; m < m_count; ++m) {
      auto path = sys.path(m);
      ConstraintSystem cs(p, t, particle_scale(nu, sys, m));
      cs.sync(path);
      if (nu) {
        ++u_proposals;
        if (mh_update_u(cs, sys.mixing[m], *nu, cfg.u_step, rngs[m]))
          ++u_accepts;
      }
      std::copy(path.begin(), path.begin() + t, before.begin());
      switch (mc.kind) {
        case MoveKind::gibbs:
          gibbs_sweep(cs, path, rngs[m]);
          ++proposals;
          ++accepts;
          break;
        case MoveKind::block_gibbs:
          block_gibbs_sweep(cs, path, mc.block_window, rngs[m]);
          ++proposals;
          ++accepts;
          break;
        case MoveKind::overrelax: {
          double alpha = mc.alpha ? *mc.alpha : default_overrelax_alpha(t);
          ++proposals;
          if (overrelax_step(cs, path, alpha, rngs[m], scratch)) ++accepts;
          break;
        }
        case MoveKind::hmc: {
          double horizon =
              mc.hmc_horizon ? *mc.hmc_horizon : M_PI * rngs[m].uniform();
          hmc_step(cs, path, horizon, rngs[m], mc.bounce_cap);
          ++proposals;
          ++accepts;
          break;
        }
      }
      assert(cs.feasible() && "move kernel left the constraint region");
      for (int i = 0; i < t; ++i) displacement += std::abs(path[i] - before[i]);
    }
    return displacement;
  };

  int sweeps;
  if (mc.fixed_sweeps > 0) {
    for (int k = 0; k < mc.fixed_sweeps; ++k) round();
    sweeps = mc.fixed_sweeps;
  } else {
    sweeps = move_until_stable(round, mc.adapt_tol, mc.sweep_cap);
  }

  MoveStats stats;
  stats.kernel = move_kind_name(mc.kind);
  if (mc.kind == MoveKind::block_gibbs)
    stats.kernel += ":" + std::to_string(mc.block_window);
  stats.sweeps = sweeps;
  stats.acceptance =
      proposals > 0 ? static_cast<double>(accepts) / proposals : 1.0;
  if (nu)
    stats.u_acceptance =
        u_proposals > 0 ? static_cast<double>(u_accepts) / u_proposals : 1.0;
  rep.move_stats.push_back(std::move(stats));
}

struct EngineResult {
  EstimateReport report;
  ParticleSystem system;
};

/// Unified sequential engine behind Algorithms GHK / PF / SMC: coordinates
/// are added one at a time with the truncated-Gaussian proposal, weights
/// accumulate the truncation masses, and when the ESS drops below
/// alpha* M the mean weight is folded into log Z, the population is
/// resampled systematically and (optionally) rejuvenated with an invariant
/// kernel. With the threshold at zero this is exactly sequential importance
/// sampling; the estimate matches ghk() bit for bit under the same seed.
inline EngineResult run_engine(const OrthantProblem& problem,
                               const RunConfig& cfg, std::optional<double> nu) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const OrthantProblem p = prepare_problem(problem, cfg.ordering);
  const int d = p.d;
  const int m_count = cfg.particles;

  EngineResult out;
  EstimateReport& rep = out.report;
  rep.particles = m_count;
  rep.seed = cfg.seed;

  ParticleSystem& sys = out.system;
  sys.particles = m_count;
  sys.stride = d;
  sys.paths.assign(static_cast<std::size_t>(m_count) * d, 0.0);
  sys.log_weights.assign(m_count, 0.0);

  std::vector<SplitMix64> rngs;
  rngs.reserve(m_count);
  for (int m = 0; m < m_count; ++m)
    rngs.push_back(derive_stream(cfg.seed, rngtag::kParticle, m));
  SplitMix64 resample_rng = derive_stream(cfg.seed, rngtag::kResample, 0);

  if (nu) {
    sys.mixing.resize(m_count);
    for (int m = 0; m < m_count; ++m)
      sys.mixing[m] = sample_chi_squared(*nu, rngs[m]);
  }

  std::vector<double> resample_scratch;
  std::vector<double> mixing_scratch;

  auto finish = [&](double log_prob, bool failed) {
    rep.log_prob = log_prob;
    rep.failed = failed;
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  };

  for (int t = 0; t < d; ++t) {
    for (int m = 0; m < m_count; ++m) {
      auto path = sys.path(m);
      if (nu && cfg.refresh_u_each_step && t > 0) {
        ConstraintSystem cs(p, t, particle_scale(nu, sys, m));
        cs.sync(path);
        mh_update_u(cs, sys.mixing[m], *nu, cfg.u_step, rngs[m]);
      }
      Interval iv =
          bound_interval_scaled(p, particle_scale(nu, sys, m), t, path);
      sys.log_weights[m] += log_interval_mass(iv);
      path[t] = sample_truncated_std_normal(iv, rngs[m]);
    }
    sys.t = t + 1;

    double max_lw = *std::max_element(sys.log_weights.begin(),
                                      sys.log_weights.end());
    // Resampling-enabled runs renormalize small weights into log Z (the
    // estimator is unchanged: the mean weight moves into the constant and
    // the relative weights keep their spread). Without resampling this
    // bookkeeping is not available, which is exactly why plain sequential
    // importance sampling dies where the adaptive algorithm survives.
    if (cfg.ess_threshold > 0.0 && max_lw != kNegInf &&
        max_lw < kRenormLogWeight) {
      double shift = log_sum_exp(sys.log_weights) - std::log(m_count);
      for (auto& w : sys.log_weights) w -= shift;
      sys.log_z += shift;
      max_lw -= shift;
    }
    if (max_lw < kDeadLogWeight) {
      rep.ess_trace.emplace_back(t + 1, 1.0);
      finish(kNegInf, true);
      return out;
    }
    double e = ess(sys.log_weights);
    rep.ess_trace.emplace_back(t + 1, e);

    if (t < d - 1 && cfg.ess_threshold > 0.0 &&
        e < cfg.ess_threshold * m_count) {
      sys.log_z += log_sum_exp(sys.log_weights) - std::log(m_count);
      auto ancestors =
          systematic_resample(sys.log_weights, m_count, resample_rng);
      resample_scratch.resize(sys.paths.size());
      for (int m = 0; m < m_count; ++m) {
        const double* src =
            sys.paths.data() + static_cast<std::size_t>(ancestors[m]) * d;
        std::copy(src, src + (t + 1),
                  resample_scratch.begin() + static_cast<std::size_t>(m) * d);
      }
      sys.paths.swap(resample_scratch);
      if (nu) {
        mixing_scratch.resize(m_count);
        for (int m = 0; m < m_count; ++m)
          mixing_scratch[m] = sys.mixing[ancestors[m]];
        sys.mixing.swap(mixing_scratch);
      }
      std::fill(sys.log_weights.begin(), sys.log_weights.end(), 0.0);
      rep.resample_events.push_back(t + 1);
      if (cfg.move) apply_move_step(p, cfg, nu, sys, rngs, rep);
    }
  }

  // Terminal fold, accumulated strictly in particle order so that the
  // no-resampling configuration reproduces the streaming GHK bit for bit.
  OnlineLogSumExp acc;
  for (int m = 0; m < m_count; ++m) acc.add(sys.log_weights[m]);
  finish(sys.log_z + acc.value_minus_log(m_count), false);
  return out;
}

}  // namespace detail

/// Sequential importance sampling with the truncated-normal proposal
/// (no resampling). Processes particles one at a time, so memory stays O(d)
/// for any particle count; the per-coordinate ESS trace is accumulated
/// online.
inline EstimateReport ghk(const OrthantProblem& problem, int particle_count,
                          std::uint64_t seed) {
  if (particle_count < 1)
    throw std::invalid_argument("ghk: need at least one particle");
  const auto t0 = std::chrono::steady_clock::now();
  const OrthantProblem p = standardize(problem);
  const int d = p.d;

  std::vector<OnlineLogSumExp> lse_w(d);    // per-coordinate log sum w
  std::vector<OnlineLogSumExp> lse_w2(d);   // per-coordinate log sum w^2
  std::vector<double> max_w(d, kNegInf);
  std::vector<double> path(d);
  OnlineLogSumExp final_acc;

  for (int m = 0; m < particle_count; ++m) {
    SplitMix64 rng = derive_stream(seed, rngtag::kParticle, m);
    double logw = 0.0;
    for (int i = 0; i < d; ++i) {
      Interval iv = bound_interval(p, i, path);
      logw += log_interval_mass(iv);
      path[i] = sample_truncated_std_normal(iv, rng);
      lse_w[i].add(logw);
      lse_w2[i].add(2.0 * logw);
      max_w[i] = std::max(max_w[i], logw);
    }
    final_acc.add(logw);
  }

  EstimateReport rep;
  rep.particles = particle_count;
  rep.seed = seed;
  int died_at = -1;
  for (int i = 0; i < d; ++i) {
    if (died_at < 0 && max_w[i] < kDeadLogWeight) died_at = i;
    double e = std::exp(2.0 * lse_w[i].value() - lse_w2[i].value());
    rep.ess_trace.emplace_back(
        i + 1, std::clamp(e, 1.0, static_cast<double>(particle_count)));
  }
  if (died_at >= 0) {
    rep.ess_trace.resize(died_at + 1);
    rep.ess_trace.back().second = 1.0;
    rep.failed = true;
    rep.log_prob = kNegInf;
  } else {
    rep.log_prob = final_acc.value_minus_log(particle_count);
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

inline EstimateReport ghk_ordered(const OrthantProblem& problem,
                                  int particle_count, std::uint64_t seed) {
  return ghk(detail::prepare_problem(problem, true), particle_count, seed);
}

/// Adaptive SMC for Gaussian orthants (particle filter when no move kernel
/// is configured). If the ESS never crosses the threshold this reduces to
/// plain GHK with the same draws.
inline EstimateReport smc(const OrthantProblem& problem,
                          const RunConfig& config) {
  return detail::run_engine(problem, config, std::nullopt).report;
}

/// SMC over the extended target (eta, u) whose normalizing constant is the
/// Student orthant probability.
inline EstimateReport smc_student(const StudentOrthantProblem& problem,
                                  const RunConfig& config) {
  problem.validate();
  return detail::run_engine(problem.base, config, problem.nu).report;
}

/// Runs an estimate and keeps the terminal weighted population.
inline detail::EngineResult smc_with_sample(const OrthantProblem& problem,
                                            const RunConfig& config) {
  return detail::run_engine(problem, config, std::nullopt);
}

inline detail::EngineResult smc_student_with_sample(
    const StudentOrthantProblem& problem, const RunConfig& config) {
  problem.validate();
  return detail::run_engine(problem.base, config, problem.nu);
}

/// Single-run front end: dispatches GHK-shaped configurations (no move, no
/// resampling) to the streaming implementation so huge equal-compute
/// particle counts do not hold the whole population in memory.
inline EstimateReport estimate(const OrthantProblem& problem,
                               const RunConfig& config,
                               std::optional<double> nu = std::nullopt) {
  if (nu) {
    StudentOrthantProblem sp{problem, *nu};
    return smc_student(sp, config);
  }
  if (!config.move && config.ess_threshold == 0.0) {
    config.validate();
    return ghk(detail::prepare_problem(problem, config.ordering),
               config.particles, config.seed);
  }
  return smc(problem, config);
}

struct ReplicationSummary {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  int failures = 0;
  int count = 0;  // successful replications
};

inline ReplicationSummary summarize_log_estimates(
    std::span<const EstimateReport> reports) {
  ReplicationSummary s;
  std::vector<double> xs;
  for (const auto& r : reports) {
    if (r.failed)
      ++s.failures;
    else
      xs.push_back(r.log_prob);
  }
  s.count = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  s.mean = mean;
  if (xs.size() >= 2) {
    double m2 = 0.0, m3 = 0.0;
    for (double x : xs) {
      double dx = x - mean;
      m2 += dx * dx;
      m3 += dx * dx * dx;
    }
    s.variance = m2 / (xs.size() - 1);
    double sd = std::sqrt(m2 / xs.size());
    s.skewness = sd > 0.0 ? (m3 / xs.size()) / (sd * sd * sd) : 0.0;
  }
  return s;
}

/// Independent replications with seeds derived from the master seed.
inline std::pair<std::vector<EstimateReport>, ReplicationSummary>
repeat_estimate(const OrthantProblem& problem, const RunConfig& config,
                int replications, std::optional<double> nu = std::nullopt) {
  if (replications < 1)
    throw std::invalid_argument("repeat_estimate: need at least 1 replication");
  std::vector<EstimateReport> reports;
  reports.reserve(replications);
  for (int r = 0; r < replications; ++r) {
    RunConfig c = config;
    c.seed = derive_seed(config.seed, rngtag::kReplicate, r);
    reports.push_back(estimate(problem, c, nu));
  }
  auto summary = summarize_log_estimates(reports);
  return {std::move(reports), summary};
}

}  // namespace orthant

#endif  // ORTHANT_ESTIMATORS_HPP
