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

#ifndef ORTHANT_MOVES_HPP
#define ORTHANT_MOVES_HPP

#include <cmath>
#include <cstdlib>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "orthant/gauss.hpp"
#include "orthant/problem.hpp"

namespace orthant {

enum class MoveKind { gibbs, overrelax, hmc, block_gibbs };

inline std::string move_kind_name(MoveKind k) {
  switch (k) {
    case MoveKind::gibbs: return "gibbs";
    case MoveKind::overrelax: return "overrelax";
    case MoveKind::hmc: return "hmc";
    case MoveKind::block_gibbs: return "block";
  }
  return "?";
}

/// Selection and tuning of the MCMC kernel applied after each resampling.
struct MoveConfig {
  MoveKind kind = MoveKind::gibbs;
  int block_window = 2;                 // L, block_gibbs only
  std::optional<double> alpha;          // overrelax; default 1 - 0.5 t^(-1/3)
  int fixed_sweeps = 0;                 // > 0: repeat exactly this many times
  double adapt_tol = 0.01;              // adaptive repeat tolerance
  int sweep_cap = 50;
  std::optional<double> hmc_horizon;    // default: uniform draw on [0, pi]
  int bounce_cap = 10000;

  void validate() const {
    if (block_window < 1)
      throw std::invalid_argument("MoveConfig: block window must be >= 1");
    if (alpha && !(*alpha >= 0.0 && *alpha < 1.0))
      throw std::invalid_argument("MoveConfig: alpha must lie in [0, 1)");
    if (!(adapt_tol > 0.0))
      throw std::invalid_argument("MoveConfig: tolerance must be positive");
  }
};

inline double default_overrelax_alpha(int t) {
  return 1.0 - 0.5 * std::pow(static_cast<double>(std::max(t, 1)), -1.0 / 3.0);
}

/// Constraint view over the first t coordinates of a problem: the rows of the
/// Cholesky factor, the (possibly scaled) bounds and the cached row residuals
/// r_j = (Gamma eta)_j. All kernels below keep the residuals in sync.
class ConstraintSystem {
 public:
  ConstraintSystem(const OrthantProblem& p, int t, double bound_scale = 1.0)
      : p_(&p), t_(t), scale_(bound_scale), residual_(t, 0.0) {
    if (t < 1 || t > p.d)
      throw std::invalid_argument("ConstraintSystem: bad coordinate count");
  }

  const OrthantProblem& problem() const { return *p_; }
  int coords() const { return t_; }
  double bound_scale() const { return scale_; }
  void set_bound_scale(double s) { scale_ = s; }
  double scaled_lower(int j) const { return p_->lower[j] * scale_; }
  double scaled_upper(int j) const { return p_->upper[j] * scale_; }
  double residual(int j) const { return residual_[j]; }

  void sync(std::span<const double> eta) {
    for (int j = 0; j < t_; ++j) {
      const auto row = p_->chol.row(j);
      double acc = 0.0;
      for (int k = 0; k <= j; ++k) acc += row[k] * eta[k];
      residual_[j] = acc;
    }
  }

  /// Records the change eta_i -> eta_i + delta in the row residuals.
  void shift_coordinate(int i, double delta) {
    for (int j = i; j < t_; ++j) residual_[j] += p_->chol(j, i) * delta;
  }

  bool feasible(double tol = 1e-9) const { return feasible_for_scale(scale_, tol); }

  /// Checks all rows against bounds scaled by `scale` (residuals unchanged);
  /// used both for plain feasibility and for the Student mixing update.
  bool feasible_for_scale(double scale, double tol = 1e-9) const {
    for (int j = 0; j < t_; ++j) {
      double slack = tol * (1.0 + std::abs(residual_[j]));
      if (p_->lower[j] != kNegInf && residual_[j] < p_->lower[j] * scale - slack)
        return false;
      if (p_->upper[j] != kInf && residual_[j] > p_->upper[j] * scale + slack)
        return false;
    }
    return true;
  }

  /// Full conditional support of coordinate i: the intersection over rows
  /// j >= i of the half-lines the row constraint induces on eta_i, with the
  /// inequality flipped when gamma_ji < 0 and dropped when gamma_ji = 0.
  /// The current point must be feasible, so the interval contains eta_i.
  Interval conditional_interval(int i, std::span<const double> eta) const {
    double lo = kNegInf, hi = kInf;
    for (int j = i; j < t_; ++j) {
      const double g = p_->chol(j, i);
      const double rest = residual_[j] - g * eta[i];
      const double a = scaled_lower(j);
      const double b = scaled_upper(j);
      if (g > 0.0) {
        if (a != kNegInf) lo = std::max(lo, (a - rest) / g);
        if (b != kInf) hi = std::min(hi, (b - rest) / g);
      } else if (g < 0.0) {
        if (a != kNegInf) hi = std::min(hi, (a - rest) / g);
        if (b != kInf) lo = std::max(lo, (b - rest) / g);
      }
      // g == 0: coordinate i does not enter row j.
    }
    const double slack = 1e-9 * (1.0 + std::abs(eta[i]));
    if (eta[i] < lo - slack || eta[i] > hi + slack)
      throw std::logic_error(
          "conditional_interval: current point violates constraints");
    lo = std::min(lo, eta[i]);
    hi = std::max(hi, eta[i]);
    return {lo, hi};
  }

 private:
  const OrthantProblem* p_;
  int t_;
  double scale_;
  std::vector<double> residual_;
};

namespace detail {

template <class Rng>
void gibbs_range(ConstraintSystem& cs, std::span<double> eta, int first,
                 Rng& rng) {
  for (int i = first; i < cs.coords(); ++i) {
    Interval iv = cs.conditional_interval(i, eta);
    double x = sample_truncated_std_normal(iv, rng);
    cs.shift_coordinate(i, x - eta[i]);
    eta[i] = x;
  }
}

}  // namespace detail

/// One full-conditional update of every coordinate (systematic scan).
/// Leaves the truncated target invariant; O(t^2) per sweep.
template <class Rng>
void gibbs_sweep(ConstraintSystem& cs, std::span<double> eta, Rng& rng) {
  detail::gibbs_range(cs, eta, 0, rng);
}

/// Gibbs restricted to the trailing window of L coordinates. The full
/// conditionals still see every row, so the target is left invariant.
template <class Rng>
void block_gibbs_sweep(ConstraintSystem& cs, std::span<double> eta, int window,
                       Rng& rng) {
  if (window < 1)
    throw std::invalid_argument("block_gibbs_sweep: window must be >= 1");
  detail::gibbs_range(cs, eta, std::max(0, cs.coords() - window), rng);
}

/// All-coordinate overrelaxed proposal eta' = alpha eta + sqrt(1-alpha^2) z,
/// accepted iff it satisfies every constraint. The unconstrained proposal
/// preserves N(0, I), so the accept step makes the truncated law invariant.
template <class Rng>
bool overrelax_step(ConstraintSystem& cs, std::span<double> eta, double alpha,
                    Rng& rng, std::span<double> scratch) {
  const int t = cs.coords();
  const double spread = std::sqrt(1.0 - alpha * alpha);
  for (int i = 0; i < t; ++i)
    scratch[i] = alpha * eta[i] + spread * sample_std_normal(rng);
  for (int j = 0; j < t; ++j) {
    const auto row = cs.problem().chol.row(j);
    double acc = 0.0;
    for (int k = 0; k <= j; ++k) acc += row[k] * scratch[k];
    if (acc < cs.scaled_lower(j) || acc > cs.scaled_upper(j)) return false;
  }
  std::copy(scratch.begin(), scratch.begin() + t, eta.begin());
  cs.sync(eta.first(t));
  return true;
}

struct HmcResult {
  int bounces = 0;
  double energy_error = 0.0;  // max |E - E0| over bounce points and the end
};

/// Exact Hamiltonian move for the truncated standard normal: the free flow is
/// the rotation eta(s) = eta cos s + p sin s, and every constraint row acts
/// as a reflecting wall. Hit times solve amp cos(s - phase) = bound in closed
/// form; the smallest positive root beyond a 1e-12 guard wins, which avoids
/// re-detecting the wall we are currently sitting on.
template <class Rng>
HmcResult hmc_step(ConstraintSystem& cs, std::span<double> eta, double horizon,
                   Rng& rng, int bounce_cap = 10000) {
  const int t = cs.coords();
  const auto& chol = cs.problem().chol;
  constexpr double kGuard = 1e-12;
  constexpr double kTwoPi = 2.0 * M_PI;

  std::vector<double> x(eta.begin(), eta.begin() + t), p(t), r(t), q(t);
  for (int i = 0; i < t; ++i) p[i] = sample_std_normal(rng);
  auto recompute = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (int j = 0; j < t; ++j) {
      const auto row = chol.row(j);
      double acc = 0.0;
      for (int k = 0; k <= j; ++k) acc += row[k] * v[k];
      out[j] = acc;
    }
  };
  recompute(x, r);
  recompute(p, q);

  auto energy = [&]() {
    double e = 0.0;
    for (int i = 0; i < t; ++i) e += x[i] * x[i] + p[i] * p[i];
    return e;
  };
  const double e0 = energy();

  double remaining = horizon;
  HmcResult result;
  for (;;) {
    double best_s = kInf;
    int best_j = -1;
    bool best_upper = false;
    for (int j = 0; j < t; ++j) {
      const double amp = std::hypot(r[j], q[j]);
      if (amp == 0.0) continue;
      const double phase = std::atan2(q[j], r[j]);
      for (int side = 0; side < 2; ++side) {
        const double c = side == 0 ? cs.scaled_lower(j) : cs.scaled_upper(j);
        if (std::isinf(c) || amp < std::abs(c)) continue;
        const double base = std::acos(std::clamp(c / amp, -1.0, 1.0));
        for (double s : {phase - base, phase + base}) {
          while (s <= kGuard) s += kTwoPi;
          while (s > kTwoPi + kGuard) s -= kTwoPi;
          if (s < best_s) {
            best_s = s;
            best_j = j;
            best_upper = side == 1;
          }
        }
      }
    }
    if (best_s >= remaining) {
      const double cs_ = std::cos(remaining), sn = std::sin(remaining);
      for (int i = 0; i < t; ++i) {
        const double xi = x[i];
        x[i] = xi * cs_ + p[i] * sn;
        p[i] = p[i] * cs_ - xi * sn;
      }
      break;
    }
    const double cs_ = std::cos(best_s), sn = std::sin(best_s);
    for (int i = 0; i < t; ++i) {
      const double xi = x[i];
      x[i] = xi * cs_ + p[i] * sn;
      p[i] = p[i] * cs_ - xi * sn;
    }
    for (int j = 0; j < t; ++j) {
      const double rj = r[j];
      r[j] = rj * cs_ + q[j] * sn;
      q[j] = q[j] * cs_ - rj * sn;
    }
    remaining -= best_s;
    result.energy_error =
        std::max(result.energy_error, std::abs(energy() - e0));
    // Reflect only when the wall-normal velocity points outward; a grazing
    // contact passes through untouched.
    const bool outward = best_upper ? q[best_j] > 0.0 : q[best_j] < 0.0;
    if (outward) {
      double g2 = 0.0;
      const auto row = chol.row(best_j);
      for (int k = 0; k <= best_j; ++k) g2 += row[k] * row[k];
      const double coef = 2.0 * q[best_j] / g2;
      for (int k = 0; k <= best_j; ++k) p[k] -= coef * row[k];
      recompute(p, q);
      result.energy_error =
          std::max(result.energy_error, std::abs(energy() - e0));
    }
    if (++result.bounces > bounce_cap)
      throw std::runtime_error("hmc_step: bounce cap exceeded");
  }
  result.energy_error = std::max(result.energy_error, std::abs(energy() - e0));
  std::copy(x.begin(), x.end(), eta.begin());
  cs.sync(eta.first(t));
  return result;
}

/// Repeats a kernel round over the whole particle population until the total
/// absolute displacement stabilizes: stop at round k >= 2 once
/// |D_k - D_{k-1}| <= tol * D_{k-1}, or at the cap. `round` applies the
/// kernel to every particle and returns D_k.
template <class Round>
int move_until_stable(Round&& round, double tol, int cap = 50) {
  double prev = 0.0;
  for (int k = 1;; ++k) {
    const double d = round();
    if (k >= 2 && (std::abs(d - prev) <= tol * prev || k >= cap)) return k;
    prev = d;
  }
}

}  // namespace orthant

#endif  // ORTHANT_MOVES_HPP
