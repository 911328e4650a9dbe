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

#ifndef ORTHANT_STUDENT_HPP
#define ORTHANT_STUDENT_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "orthant/gauss.hpp"
#include "orthant/moves.hpp"
#include "orthant/problem.hpp"

namespace orthant {

/// Student orthant probability as a chi-square scale mixture: conditionally
/// on u ~ chi2_nu the problem is Gaussian with both bounds multiplied by
/// sqrt(u/nu), since X = Z sqrt(nu/u) maps {a <= X <= b} to
/// {a sqrt(u/nu) <= Z <= b sqrt(u/nu)}.
struct StudentOrthantProblem {
  OrthantProblem base;
  double nu = 1.0;

  void validate() const {
    if (!(nu > 0.0))
      throw std::invalid_argument("StudentOrthantProblem: nu must be > 0");
    base.validate();
  }
};

/// Whitened path plus the mixing variable it is conditioned on.
struct ExtendedParticle {
  std::vector<double> path;
  double u = 1.0;
};

inline double student_bound_scale(double u, double nu) {
  return std::sqrt(u / nu);
}

/// Truncation interval of coordinate i under mixing value u; reduces to the
/// Gaussian interval at u = nu.
inline Interval student_bounds(const StudentOrthantProblem& p, double u, int i,
                               std::span<const double> prefix) {
  return bound_interval_scaled(p.base, student_bound_scale(u, p.nu), i, prefix);
}

template <class Rng>
double sample_gamma(double shape, Rng& rng) {
  if (!(shape > 0.0)) throw std::invalid_argument("sample_gamma: shape <= 0");
  if (shape < 1.0) {
    // Boost a sub-unit shape and thin with a uniform power.
    double u = rng.uniform();
    return sample_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z = sample_std_normal(rng);
    double v = 1.0 + c * z;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = rng.uniform();
    if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
    if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
  }
}

template <class Rng>
double sample_chi_squared(double nu, Rng& rng) {
  return 2.0 * sample_gamma(0.5 * nu, rng);
}

inline double log_chi_squared_pdf(double u, double nu) {
  if (!(u > 0.0)) return kNegInf;
  return (0.5 * nu - 1.0) * std::log(u) - 0.5 * u - std::lgamma(0.5 * nu) -
         0.5 * nu * std::log(2.0);
}

/// Metropolis update of the mixing variable targeting p(u | eta): a random
/// walk on log u (scale `step`), accepted with the chi-square density ratio
/// (including the log-scale Jacobian) provided the path stays feasible under
/// the proposed bounds. The constraint system's bound scale is updated on
/// acceptance.
template <class Rng>
bool mh_update_u(ConstraintSystem& cs, double& u, double nu, double step,
                 Rng& rng) {
  const double proposal = u * std::exp(step * sample_std_normal(rng));
  const double log_ratio = log_chi_squared_pdf(proposal, nu) +
                           std::log(proposal) - log_chi_squared_pdf(u, nu) -
                           std::log(u);
  if (std::log(rng.uniform()) >= log_ratio) return false;
  if (!cs.feasible_for_scale(student_bound_scale(proposal, nu), 0.0))
    return false;
  u = proposal;
  cs.set_bound_scale(student_bound_scale(u, nu));
  return true;
}

/// Value-typed convenience wrapper over the in-place update.
template <class Rng>
ExtendedParticle mh_update_u(const ExtendedParticle& particle,
                             ConstraintSystem& cs, double nu, double step,
                             Rng& rng) {
  ExtendedParticle out = particle;
  cs.sync(out.path);
  mh_update_u(cs, out.u, nu, step, rng);
  return out;
}

}  // namespace orthant

#endif  // ORTHANT_STUDENT_HPP
