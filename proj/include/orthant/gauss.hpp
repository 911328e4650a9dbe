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

#ifndef ORTHANT_GAUSS_HPP
#define ORTHANT_GAUSS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace orthant {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;
inline constexpr double kSqrtTwo = 1.4142135623730950488016887242096981;

/// Interval of the real line; either endpoint may be infinite.
/// lower > upper marks the empty interval (mass zero).
struct Interval {
  double lower = kNegInf;
  double upper = kInf;

  bool empty() const { return !(lower <= upper); }
  double width() const { return upper - lower; }
  bool contains(double x) const { return lower <= x && x <= upper; }
};

/// Regime switch for tail-safe mass computation and sampling. Below the
/// switch, plain cdf differences and inverse-cdf sampling keep full accuracy;
/// beyond it they collapse and we go through complementary-cdf asymptotics
/// and rejection sampling instead.
inline constexpr double kTailSwitch = 8.0;

inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x - 0.5 * kLogTwoPi);
}

inline double log_std_normal_pdf(double x) {
  if (std::isinf(x)) return kNegInf;
  return -0.5 * x * x - 0.5 * kLogTwoPi;
}

inline double std_normal_cdf(double x) {
  if (x == kInf) return 1.0;
  if (x == kNegInf) return 0.0;
  return 0.5 * std::erfc(-x / kSqrtTwo);
}

/// log(1 - exp(x)) for x <= 0, accurate for both tiny and large |x|.
inline double log1m_exp(double x) {
  if (x >= 0.0) return x == 0.0 ? kNegInf : std::numeric_limits<double>::quiet_NaN();
  static const double kLogHalf = std::log(0.5);
  if (x > kLogHalf) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b);
  double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

/// Streaming log-sum-exp with a running maximum. Adding M equal values
/// yields exactly value + log(M), which the zero-variance contracts rely on.
class OnlineLogSumExp {
 public:
  void add(double x) {
    if (x == kNegInf) return;
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }
  double value() const {
    if (max_ == kNegInf) return kNegInf;
    return max_ + std::log(sum_);
  }

  /// log((sum of exp) / n) in one rounding: with n equal inputs this returns
  /// the input exactly, since sum_/n == 1.
  double value_minus_log(double n) const {
    if (max_ == kNegInf) return kNegInf;
    return max_ + std::log(sum_ / n);
  }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

/// log sum over a sequence of log-domain values. All-(-inf) input yields
/// -inf; empty input is an error.
inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  double hi = kNegInf;
  for (double x : xs) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  if (std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

namespace detail {

/// log of the upper tail mass Q(z) = P(X > z) for z >= kTailSwitch, through
/// the asymptotic Mills series Q(z) = phi(z)/z * (1 - 1/z^2 + 3/z^4 - ...).
/// The series is truncated at its smallest term; at z >= 8 the truncation
/// error is far below 1e-12 relative.
inline double log_tail_mass_asymptotic(double z) {
  const double z2 = z * z;
  double term = 1.0;
  double sum = 1.0;
  double coeff = 1.0;
  for (int k = 1; k < 30; ++k) {
    coeff *= -(2.0 * k - 1.0);
    double next = coeff / std::pow(z2, k);
    if (std::abs(next) >= std::abs(term)) break;  // series turned divergent
    sum += next;
    if (std::abs(next) < 1e-18 * sum) break;
    term = next;
  }
  return -0.5 * z2 - std::log(z) - 0.5 * kLogTwoPi + std::log(sum);
}

}  // namespace detail

/// log P(X > z) for a standard normal, finite and accurate for any z
/// (including z far beyond the reach of erfc).
inline double log_std_normal_tail(double z) {
  if (z == kInf) return kNegInf;
  if (z == kNegInf) return 0.0;
  if (z < kTailSwitch) {
    return std::log(0.5 * std::erfc(z / kSqrtTwo));
  }
  return detail::log_tail_mass_asymptotic(z);
}

inline double log_std_normal_cdf(double x) { return log_std_normal_tail(-x); }

/// log(Phi(upper) - Phi(lower)) without catastrophic cancellation.
/// Empty interval -> -inf. Deep-tail intervals stay finite and keep at least
/// six significant digits in log space.
inline double log_interval_mass(Interval iv) {
  if (iv.empty()) return kNegInf;
  double l = iv.lower;
  double u = iv.upper;
  if (l == kNegInf && u == kInf) return 0.0;
  if (l == kNegInf) return log_std_normal_cdf(u);
  if (u == kInf) return log_std_normal_tail(l);
  if (l == u) return kNegInf;
  if (u <= 0.0) {  // reflect into the right half line
    std::swap(l, u);
    l = -l;
    u = -u;
  }
  if (l >= kTailSwitch) {
    // Difference of two upper tails, entirely in log domain.
    double la = log_std_normal_tail(l);
    double lb = log_std_normal_tail(u);
    return la + log1m_exp(lb - la);
  }
  double w = u - l;
  if (w < 1e-7) {
    // Narrow interval: local expansion around the midpoint. The quadratic
    // correction bounds the relative error by ~(w*m)^4/1920.
    double m = 0.5 * (l + u);
    return std::log(w) + log_std_normal_pdf(m) +
           std::log1p(w * w * (m * m - 1.0) / 24.0);
  }
  double mass = 0.5 * (std::erfc(l / kSqrtTwo) - std::erfc(u / kSqrtTwo));
  if (mass <= 0.0) {  // fully cancelled; fall back to the local expansion
    double m = 0.5 * (l + u);
    return std::log(w) + log_std_normal_pdf(m);
  }
  return std::log(mass);
}

/// Mean of a standard normal truncated to iv:
/// (phi(lower) - phi(upper)) / (Phi(upper) - Phi(lower)), with phi(+-inf)=0.
inline double truncated_mean(Interval iv) {
  if (iv.empty()) throw std::invalid_argument("truncated_mean: empty interval");
  double l = iv.lower;
  double u = iv.upper;
  if (l == kNegInf && u == kInf) return 0.0;
  // Canonical orientation (midpoint >= 0) makes antisymmetry exact:
  // the mirrored interval reduces to the same computation, negated.
  if (l + u < 0.0) return -truncated_mean(Interval{-u, -l});
  if (l >= kTailSwitch) {
    // Ratio computed fully in log domain; the probability-domain mass would
    // underflow long before the mean stops being well defined.
    double lpl = log_std_normal_pdf(l);
    double lpu = log_std_normal_pdf(u);
    double log_num = lpl + log1m_exp(lpu - lpl);
    return std::exp(log_num - log_interval_mass(iv));
  }
  if (l != kNegInf && u != kInf) {
    double w = u - l;
    if (w < 1e-7) {
      double m = 0.5 * (l + u);
      return m * (1.0 - w * w / 12.0);
    }
  }
  double num = (l == kNegInf ? 0.0 : std_normal_pdf(l)) -
               (u == kInf ? 0.0 : std_normal_pdf(u));
  return num / std::exp(log_interval_mass(iv));
}

/// Inverse standard normal cdf. Acklam's rational approximation polished by
/// two Halley steps; full double accuracy wherever erfc is representable and
/// graceful (~1e-9 relative) beyond.
inline double inverse_std_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return kNegInf;
    if (p == 1.0) return kInf;
    throw std::invalid_argument("inverse_std_normal_cdf: p outside [0,1]");
  }
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    double cdf = std_normal_cdf(x);
    if (cdf <= 0.0 || cdf >= 1.0) break;  // outside erfc resolution
    double e = cdf - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

namespace detail {

/// Tail rejection sampler: standard normal conditioned on [l, u] with l > 0,
/// via an exponential proposal in x = z^2/2 (Rayleigh tilt). Exact for any
/// 0 < l < u, efficient once l is a few units out.
template <class Rng>
double sample_tail_rejection(double l, double u, Rng& rng) {
  const double c = 0.5 * l * l;
  const double f = (u == kInf) ? -1.0 : std::expm1(c - 0.5 * u * u);
  for (;;) {
    double x = c - std::log1p(f * rng.uniform());
    double v = rng.uniform();
    if (x * v * v <= c) return std::sqrt(2.0 * x);
  }
}

}  // namespace detail

template <class Rng>
double sample_std_normal(Rng& rng) {
  return inverse_std_normal_cdf(rng.uniform());
}

/// Exact draw from a standard normal conditioned on iv. Inverse cdf in the
/// bulk; rejection in the far tails so the law stays correct for intervals
/// arbitrarily deep out (e.g. beyond 38 sigma).
template <class Rng>
double sample_truncated_std_normal(Interval iv, Rng& rng) {
  if (iv.empty())
    throw std::invalid_argument("sample_truncated_std_normal: empty truncation");
  double l = iv.lower;
  double u = iv.upper;
  if (l == kNegInf && u == kInf) return sample_std_normal(rng);
  if (l >= kTailSwitch) return detail::sample_tail_rejection(l, u, rng);
  if (u <= -kTailSwitch) return -detail::sample_tail_rejection(-u, -l, rng);
  double x;
  if (l >= 0.0) {
    // Work with upper-tail probabilities to keep resolution near Phi = 1.
    double ql = 0.5 * std::erfc(l / kSqrtTwo);
    double qu = (u == kInf) ? 0.0 : 0.5 * std::erfc(u / kSqrtTwo);
    double p = qu + (ql - qu) * rng.uniform();
    x = -inverse_std_normal_cdf(p);
  } else if (u <= 0.0) {
    double ql = 0.5 * std::erfc(-u / kSqrtTwo);
    double qu = (l == kNegInf) ? 0.0 : 0.5 * std::erfc(-l / kSqrtTwo);
    double p = qu + (ql - qu) * rng.uniform();
    x = inverse_std_normal_cdf(p);
  } else {
    double pl = std_normal_cdf(l);
    double pu = std_normal_cdf(u);
    x = inverse_std_normal_cdf(pl + (pu - pl) * rng.uniform());
  }
  return std::clamp(x, l, u);
}

}  // namespace orthant

#endif  // ORTHANT_GAUSS_HPP
