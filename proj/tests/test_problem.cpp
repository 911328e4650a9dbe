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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "orthant/estimators.hpp"
#include "orthant/io.hpp"
#include "orthant/problem.hpp"
#include "oracles.hpp"

using namespace orthant;
using Catch::Approx;

namespace {

double estimate_prob(const OrthantProblem& p, int m, std::uint64_t seed) {
  return std::exp(ghk(p, m, seed).log_prob);
}

/// Replicated estimate with a standard error, in probability domain.
std::pair<double, double> replicated_prob(const OrthantProblem& p, int m,
                                          int reps, std::uint64_t seed) {
  std::vector<double> xs(reps);
  for (int r = 0; r < reps; ++r)
    xs[r] = estimate_prob(p, m, derive_seed(seed, 77, r));
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= reps;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= (reps - 1);
  return {mean, std::sqrt(var / reps)};
}

}  // namespace

TEST_CASE("standardize") {
  SymMatrix s1(1);
  s1(0, 0) = 1.0;

  SECTION("zero mean is the identity") {
    auto p = OrthantProblem::from_covariance({0.0}, {kInf}, s1);
    auto q = standardize(p);
    CHECK(q.lower == p.lower);
    CHECK(q.upper == p.upper);
  }

  SECTION("d = 1 shift") {
    auto p = OrthantProblem::from_covariance({1.0}, {kInf}, s1, {1.0});
    auto q = standardize(p);
    CHECK(q.lower[0] == 0.0);
    CHECK(q.mean[0] == 0.0);
    CHECK(estimate_prob(q, 4, 1) == Approx(0.5).margin(1e-15));
  }

  SECTION("d = 2 random mean leaves the oracle probability unchanged") {
    SplitMix64 rng(8);
    for (int trial = 0; trial < 4; ++trial) {
      double rho = 1.6 * rng.uniform() - 0.8;
      SymMatrix s(2);
      s(0, 0) = 1.0 + rng.uniform();
      s(1, 1) = 1.0 + rng.uniform();
      s(0, 1) = s(1, 0) = rho * std::sqrt(s(0, 0) * s(1, 1));
      std::vector<double> m{2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
      std::vector<double> lo{-1.0, -0.5}, hi{1.5, 2.0};
      auto p = OrthantProblem::from_covariance(lo, hi, s, m);
      auto q = standardize(p);
      double sig[2][2] = {{s(0, 0), s(0, 1)}, {s(1, 0), s(1, 1)}};
      std::vector<double> lo_shift{lo[0] - m[0], lo[1] - m[1]};
      std::vector<double> hi_shift{hi[0] - m[0], hi[1] - m[1]};
      double before = oracle::orthant_2d(lo_shift, hi_shift, sig);
      double after = oracle::orthant_2d(q.lower, q.upper, sig);
      CHECK(after == Approx(before).margin(1e-10));
    }
  }
}

TEST_CASE("bound_interval") {
  SECTION("first coordinate has the bare standardized bounds") {
    SymMatrix s(2);
    s(0, 0) = 4.0;
    s(0, 1) = s(1, 0) = 1.0;
    s(1, 1) = 2.0;
    auto p = OrthantProblem::from_covariance({-1.0, 0.0}, {3.0, kInf}, s);
    auto iv = bound_interval(p, 0, {});
    CHECK(iv.lower == Approx(-0.5));
    CHECK(iv.upper == Approx(1.5));
  }

  SECTION("diagonal factor ignores the prefix") {
    SymMatrix s = SymMatrix::identity(3);
    auto p = OrthantProblem::from_covariance({0.0, 0.0, 0.0},
                                             {1.0, 1.0, 1.0}, s);
    std::vector<double> prefix{0.3, -0.9, 0.0};
    auto iv0 = bound_interval(p, 2, prefix);
    prefix[0] = -5.0;
    prefix[1] = 5.0;
    auto iv1 = bound_interval(p, 2, prefix);
    CHECK(iv0.lower == iv1.lower);
    CHECK(iv0.upper == iv1.upper);
  }

  SECTION("d = 2 direct substitution") {
    LowerTriangular L(2);
    L(0, 0) = 1.0;
    L(1, 0) = 1.0;
    L(1, 1) = 1.0;
    auto p = OrthantProblem::from_cholesky({0.0, 0.0}, {kInf, kInf}, L);
    std::vector<double> prefix{2.0};
    auto iv = bound_interval(p, 1, prefix);
    CHECK(iv.lower == Approx(-2.0));
    CHECK(iv.upper == kInf);
  }

  SECTION("index out of range") {
    SymMatrix s = SymMatrix::identity(1);
    auto p = OrthantProblem::from_covariance({0.0}, {1.0}, s);
    CHECK_THROWS_AS(bound_interval(p, 1, std::vector<double>{0.0}),
                    std::out_of_range);
  }

  SECTION("width is (b-a)/gamma_ii independent of the prefix") {
    auto p = gen_cauchy_problem(6, 4);
    // Replace the infinite uppers with finite ones for this check.
    for (int i = 0; i < p.d; ++i) p.upper[i] = p.lower[i] + 2.5;
    p = OrthantProblem::from_covariance(p.lower, p.upper, p.sigma);
    SplitMix64 rng(12);
    for (int i = 0; i < p.d; ++i) {
      std::vector<double> prefix(i);
      for (auto& v : prefix) v = 2.0 * rng.uniform() - 1.0;
      auto iv = bound_interval(p, i, prefix);
      double expect = (p.upper[i] - p.lower[i]) / p.chol(i, i);
      CHECK(iv.width() == Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("gen_cauchy_problem") {
  SECTION("deterministic given the seed") {
    auto a = gen_cauchy_problem(5, 42);
    auto b = gen_cauchy_problem(5, 42);
    CHECK(a.lower == b.lower);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) CHECK(a.sigma(i, j) == b.sigma(i, j));
  }

  SECTION("d = 1 scalar case matches the one-dimensional formula") {
    auto p = gen_cauchy_problem(1, 9);
    double sd = std::sqrt(p.sigma(0, 0));
    double expect = oracle::log_interval_mass(p.lower[0] / sd, kInf);
    CHECK(ghk(p, 3, 0).log_prob == Approx(expect).epsilon(1e-9));
  }

  SECTION("smaller dimensions reuse the same draws") {
    // The underlying Cauchy draws are positional, so the d = 4 problem is
    // built from the leading block of the d = 7 problem's draws: the bounds
    // coincide entry-wise. The Gram products themselves pick up the extra
    // rows, so the covariances are related but not equal.
    auto big = gen_cauchy_problem(7, 11);
    auto small = gen_cauchy_problem(4, 11);
    for (int i = 0; i < 4; ++i) CHECK(big.lower[i] == small.lower[i]);
  }

  SECTION("generators emit factorizable covariances and ordered bounds") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 50ULL}) {
      auto p = gen_cauchy_problem(25, seed);
      CHECK_NOTHROW(cholesky(p.sigma));
      for (int i = 0; i < p.d; ++i) CHECK(p.lower[i] < p.upper[i]);
    }
  }
}

TEST_CASE("gen_ar1_problem") {
  SECTION("independent case: probability is exactly 1/8") {
    Ar1Spec spec;
    spec.horizon = 3;
    spec.rho = 0.0;
    spec.lower = 0.0;
    spec.upper = kInf;
    auto p = gen_ar1_problem(spec);
    CHECK(std::exp(ghk(p, 2, 5).log_prob) == Approx(0.125).margin(1e-12));
  }

  SECTION("T = 1 reduces to a single interval mass") {
    Ar1Spec spec;
    spec.horizon = 1;
    spec.rho = 0.9;
    spec.lower = -0.3;
    spec.upper = 0.7;
    spec.sigma = 2.0;
    auto p = gen_ar1_problem(spec);
    double expect = log_interval_mass({-0.15, 0.35});
    CHECK(ghk(p, 2, 5).log_prob == Approx(expect).margin(1e-12));
  }

  SECTION("T = 2 against the 2-D quadrature oracle") {
    Ar1Spec spec;
    spec.horizon = 2;
    spec.rho = 0.7;
    spec.lower = 0.0;
    spec.upper = 15.0;
    auto p = gen_ar1_problem(spec);
    double sig[2][2] = {{p.sigma(0, 0), p.sigma(0, 1)},
                        {p.sigma(1, 0), p.sigma(1, 1)}};
    double truth = oracle::orthant_2d(p.lower, p.upper, sig);
    auto [mean, se] = replicated_prob(p, 20000, 12, 3);
    CHECK(std::abs(mean - truth) <= 3.0 * se);
  }

  SECTION("bound intervals reproduce the transition form") {
    Ar1Spec spec;
    spec.horizon = 8;
    spec.rho = 0.7;
    spec.lower = 0.0;
    spec.upper = 15.0;
    auto p = gen_ar1_problem(spec);
    SplitMix64 rng(6);
    std::vector<double> eta(8);
    for (auto& v : eta) v = rng.uniform();
    for (int t = 1; t < 8; ++t) {
      // x_{t-1} from the whitened draws.
      double x_prev = 0.0;
      for (int j = 0; j < t; ++j) x_prev += p.chol(t - 1, j) * eta[j];
      auto iv = bound_interval(p, t, eta);
      CHECK(iv.lower == Approx((0.0 - spec.rho * x_prev) / spec.sigma)
                            .margin(1e-10));
      CHECK(iv.upper == Approx((15.0 - spec.rho * x_prev) / spec.sigma)
                            .margin(1e-10));
    }
  }

  SECTION("error paths") {
    Ar1Spec spec;
    spec.horizon = 0;
    CHECK_THROWS_AS(gen_ar1_problem(spec), std::invalid_argument);
    spec.horizon = 2;
    spec.rho = 1.0;
    spec.stationary_start = true;
    CHECK_THROWS_AS(gen_ar1_problem(spec), std::invalid_argument);
  }
}

TEST_CASE("gen_thurstonian") {
  SECTION("p = 2, equal means: one half") {
    std::vector<double> beta{0.0, 0.0};
    auto p = gen_thurstonian(beta, 1.0);
    CHECK(p.d == 1);
    CHECK(std::exp(ghk(standardize(p), 2, 1).log_prob) ==
          Approx(0.5).margin(1e-12));
  }

  SECTION("p = 3 against the quadrature oracle on the difference problem") {
    std::vector<double> beta{0.0, 1.0, 2.0};
    auto p = gen_thurstonian(beta, 1.0);
    auto q = standardize(p);
    double sig[2][2] = {{q.sigma(0, 0), q.sigma(0, 1)},
                        {q.sigma(1, 0), q.sigma(1, 1)}};
    double truth = oracle::orthant_2d(q.lower, q.upper, sig);
    auto [mean, se] = replicated_prob(q, 20000, 12, 14);
    CHECK(std::abs(mean - truth) <= 3.0 * se);
  }

  SECTION("p < 2 is an error") {
    std::vector<double> beta{0.0};
    CHECK_THROWS_AS(gen_thurstonian(beta, 1.0), std::invalid_argument);
  }
}

TEST_CASE("gen_probit_panel") {
  SECTION("binary probit, one period: a single Gaussian cdf") {
    ProbitPanelSpec spec;
    spec.alternatives = 2;
    spec.periods = 1;
    spec.choices = {0};
    auto p = gen_probit_panel(spec, 3);
    REQUIRE(p.d == 1);
    double sd = std::sqrt(p.sigma(0, 0));
    double expect = std_normal_cdf(p.upper[0] / sd);
    CHECK(std::exp(ghk(p, 4, 2).log_prob) == Approx(expect).margin(1e-12));
  }

  SECTION("independence factorization at J = 3, T = 2") {
    ProbitPanelSpec spec;
    spec.alternatives = 3;
    spec.periods = 2;
    spec.choices = {0, 2};
    spec.alpha_sd = 0.0;
    spec.ar_coeff = 0.0;
    spec.nu_corr = 0.0;
    auto p = gen_probit_panel(spec, 7);
    REQUIRE(p.d == 4);
    // Cross-period covariance must vanish.
    for (int r = 0; r < 2; ++r)
      for (int c = 2; c < 4; ++c) CHECK(p.sigma(r, c) == Approx(0.0).margin(1e-14));
    double truth = 1.0;
    for (int t = 0; t < 2; ++t) {
      double sig[2][2] = {{p.sigma(2 * t, 2 * t), p.sigma(2 * t, 2 * t + 1)},
                          {p.sigma(2 * t + 1, 2 * t), p.sigma(2 * t + 1, 2 * t + 1)}};
      std::vector<double> lo{p.lower[2 * t], p.lower[2 * t + 1]};
      std::vector<double> hi{p.upper[2 * t], p.upper[2 * t + 1]};
      truth *= oracle::orthant_2d(lo, hi, sig);
    }
    auto [mean, se] = replicated_prob(p, 20000, 12, 9);
    CHECK(std::abs(mean - truth) <= 3.0 * se);
  }

  SECTION("deterministic given the seed") {
    ProbitPanelSpec spec;
    spec.alternatives = 4;
    spec.periods = 3;
    auto a = gen_probit_panel(spec, 13);
    auto b = gen_probit_panel(spec, 13);
    CHECK(a.upper == b.upper);
    for (int i = 0; i < a.d; ++i)
      for (int j = 0; j < a.d; ++j) CHECK(a.sigma(i, j) == b.sigma(i, j));
  }

  SECTION("invalid choice index") {
    ProbitPanelSpec spec;
    spec.alternatives = 3;
    spec.periods = 2;
    spec.choices = {0, 3};
    CHECK_THROWS_AS(gen_probit_panel(spec, 1), std::invalid_argument);
  }

  SECTION("emitted covariances factorize; bounds ordered") {
    ProbitPanelSpec spec;
    spec.alternatives = 5;
    spec.periods = 4;
    auto p = gen_probit_panel(spec, 21);
    CHECK_NOTHROW(cholesky(p.sigma));
    for (int i = 0; i < p.d; ++i) CHECK(p.lower[i] < p.upper[i]);
  }
}

TEST_CASE("problem json round trip") {
  auto p = gen_cauchy_problem(4, 77);
  p.meta["note"] = "round-trip";
  json doc = problem_to_json(p);
  CHECK(doc["d"] == 4);
  CHECK(doc["b"][0] == "inf");
  auto q = problem_from_json(doc);
  CHECK(q.d == p.d);
  CHECK(q.lower == p.lower);
  CHECK(q.upper == p.upper);
  CHECK(q.meta.at("note") == "round-trip");
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(q.sigma(i, j) == p.sigma(i, j));

  std::optional<double> nu;
  json with_nu = problem_to_json(p, 3.5);
  problem_from_json(with_nu, &nu);
  REQUIRE(nu.has_value());
  CHECK(*nu == 3.5);

  json broken = doc;
  broken.erase("sigma");
  CHECK_THROWS_AS(problem_from_json(broken), std::invalid_argument);
}
