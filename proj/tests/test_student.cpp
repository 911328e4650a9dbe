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
#include "orthant/student.hpp"
#include "oracles.hpp"

using namespace orthant;
using Catch::Approx;

namespace {

StudentOrthantProblem one_dim(double lo, double hi, double nu) {
  SymMatrix s(1);
  s(0, 0) = 1.0;
  return {OrthantProblem::from_covariance({lo}, {hi}, s), nu};
}

struct MeanSe {
  double mean;
  double se;
};

MeanSe replicated(const StudentOrthantProblem& p, const RunConfig& base,
                  int reps, std::uint64_t seed) {
  std::vector<double> xs(reps);
  for (int r = 0; r < reps; ++r) {
    RunConfig cfg = base;
    cfg.seed = derive_seed(seed, 1, r);
    xs[r] = std::exp(smc_student(p, cfg).log_prob);
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= reps;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= (reps - 1);
  return {mean, std::sqrt(var / reps)};
}

}  // namespace

TEST_CASE("student_bounds") {
  SECTION("u = nu reduces to the Gaussian interval") {
    auto p = one_dim(0.3, 2.0, 5.0);
    auto a = student_bounds(p, 5.0, 0, {});
    auto b = bound_interval(p.base, 0, {});
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
  }

  SECTION("half line through the origin is scale invariant") {
    auto p = one_dim(0.0, kInf, 3.0);
    for (double u : {0.1, 1.0, 7.0, 100.0}) {
      auto iv = student_bounds(p, u, 0, {});
      CHECK(iv.lower == 0.0);
      CHECK(iv.upper == kInf);
    }
  }

  SECTION("direct substitution: sqrt(12/3) = 2") {
    auto p = one_dim(1.0, kInf, 3.0);
    auto iv = student_bounds(p, 12.0, 0, {});
    CHECK(iv.lower == Approx(2.0));
  }
}

TEST_CASE("chi-squared sampler matches the oracle cdf") {
  SplitMix64 rng(123);
  const int n = 50000;
  for (double nu : {1.0, 3.0, 10.0}) {
    std::vector<double> draws(n);
    for (auto& d : draws) d = sample_chi_squared(nu, rng);
    auto cdf = [nu](double x) { return oracle::chi2_cdf(x, nu); };
    CHECK(oracle::ks_statistic(draws, cdf) < oracle::ks_critical(1e-3, n));
  }
}

TEST_CASE("mh_update_u") {
  SECTION("unconstrained chain leaves chi-squared invariant") {
    SymMatrix s(1);
    s(0, 0) = 1.0;
    auto base = OrthantProblem::from_covariance({kNegInf}, {kInf}, s);
    const double nu = 3.0;
    ConstraintSystem cs(base, 1, 1.0);
    std::vector<double> eta{0.2};
    cs.sync(eta);
    SplitMix64 rng(9);
    double u = sample_chi_squared(nu, rng);
    const int steps = 100000, thin = 20;
    std::vector<double> thinned;
    for (int k = 0; k < steps; ++k) {
      mh_update_u(cs, u, nu, 0.5, rng);
      if (k % thin == 0) thinned.push_back(u);
    }
    auto cdf = [nu](double x) { return oracle::chi2_cdf(x, nu); };
    CHECK(oracle::ks_statistic(thinned, cdf) <
          oracle::ks_critical(1e-3, thinned.size()));
  }

  SECTION("proposal violating a bound is rejected") {
    // eta pinned right at the scaled bound: any u increase is infeasible.
    auto p = one_dim(1.0, kInf, 3.0);
    ConstraintSystem cs(p.base, 1, student_bound_scale(3.0, 3.0));
    std::vector<double> eta{1.0};
    cs.sync(eta);
    SplitMix64 rng(31);
    double u = 3.0;
    int rejected = 0;
    for (int k = 0; k < 200; ++k) {
      double before = u;
      bool accepted = mh_update_u(cs, u, 3.0, 0.5, rng);
      if (!accepted) {
        CHECK(u == before);
        ++rejected;
      } else {
        CHECK(u <= 3.0);  // the feasible region is u <= nu eta^2 = 3
      }
    }
    CHECK(rejected > 0);
  }

  SECTION("constrained stationary law matches 1-D quadrature") {
    // d = 1, bound [1, inf): p(u | eta) ~ chi2_nu(u) 1{eta >= sqrt(u/nu)}.
    const double nu = 3.0;
    auto p = one_dim(1.0, kInf, nu);
    const double eta_val = 1.8;
    ConstraintSystem cs(p.base, 1, 1.0);
    std::vector<double> eta{eta_val};
    // u feasible iff sqrt(u/nu) <= eta, i.e. u <= nu eta^2.
    const double u_max = nu * eta_val * eta_val;
    cs.set_bound_scale(student_bound_scale(1.0, nu));
    cs.sync(eta);
    SplitMix64 rng(7);
    double u = 1.0;
    const int steps = 200000, thin = 20;
    std::vector<double> thinned;
    for (int k = 0; k < steps; ++k) {
      mh_update_u(cs, u, nu, 0.5, rng);
      if (k % thin == 0) thinned.push_back(u);
    }
    auto cdf = [&](double x) {
      double num = oracle::chi2_cdf(std::min(x, u_max), nu);
      double den = oracle::chi2_cdf(u_max, nu);
      return num / den;
    };
    CHECK(oracle::ks_statistic(thinned, cdf) <
          oracle::ks_critical(1e-3, thinned.size()));
  }
}

TEST_CASE("smc_student: symmetric half line is one half") {
  for (double nu : {1.0, 4.0}) {
    auto p = one_dim(0.0, kInf, nu);
    RunConfig cfg;
    cfg.particles = 4000;
    cfg.move = MoveConfig{};
    auto [mean, se] = replicated(p, cfg, 10, 17);
    CHECK(std::abs(mean - 0.5) <= std::max(3.0 * se, 1e-3));
  }
}

TEST_CASE("smc_student: matches the Student cdf oracle at nu = 3") {
  auto p = one_dim(1.0, kInf, 3.0);
  double truth = 1.0 - oracle::student_cdf(1.0, 3.0);
  RunConfig cfg;
  cfg.particles = 5000;
  cfg.move = MoveConfig{};
  auto [mean, se] = replicated(p, cfg, 12, 41);
  CHECK(std::abs(mean - truth) <= 3.0 * se);
}

TEST_CASE("smc_student: large nu recovers the Gaussian quadrant") {
  SymMatrix s(2);
  s(0, 0) = s(1, 1) = 1.0;
  s(0, 1) = s(1, 0) = 0.5;
  StudentOrthantProblem p{
      OrthantProblem::from_covariance({0.0, 0.0}, {kInf, kInf}, s), 1e6};
  RunConfig cfg;
  cfg.particles = 5000;
  cfg.move = MoveConfig{};
  auto [mean, se] = replicated(p, cfg, 12, 29);
  CHECK(std::abs(mean - 1.0 / 3.0) <= 3.0 * se);
}

TEST_CASE("student scale equivariance: joint scaling is bit-identical") {
  // Scaling (a, b, sqrt(Sigma)) jointly leaves every truncation interval,
  // hence the whole run, unchanged.
  const double c = 3.7;
  SymMatrix s(2);
  s(0, 0) = 1.0;
  s(1, 1) = 2.0;
  s(0, 1) = s(1, 0) = 0.6;
  SymMatrix sc(2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) sc(i, j) = c * c * s(i, j);
  StudentOrthantProblem p{
      OrthantProblem::from_covariance({0.5, -0.2}, {2.0, kInf}, s), 3.0};
  StudentOrthantProblem q{
      OrthantProblem::from_covariance({0.5 * c, -0.2 * c}, {2.0 * c, kInf}, sc),
      3.0};
  RunConfig cfg;
  cfg.particles = 500;
  cfg.seed = 99;
  cfg.move = MoveConfig{};
  CHECK(smc_student(p, cfg).log_prob == smc_student(q, cfg).log_prob);
}

TEST_CASE("nu consistency: student and gaussian engines agree as nu -> inf") {
  auto base = gen_cauchy_problem(3, 6);
  StudentOrthantProblem sp{base, 1e6};
  RunConfig cfg;
  cfg.particles = 3000;
  cfg.move = MoveConfig{};
  auto [s_mean, s_se] = replicated(sp, cfg, 10, 5);
  std::vector<double> xs(10);
  for (int r = 0; r < 10; ++r) {
    RunConfig c2 = cfg;
    c2.seed = derive_seed(6, 2, r);
    xs[r] = std::exp(smc(base, c2).log_prob);
  }
  double g_mean = 0.0;
  for (double x : xs) g_mean += x;
  g_mean /= xs.size();
  double g_var = 0.0;
  for (double x : xs) g_var += (x - g_mean) * (x - g_mean);
  g_var /= (xs.size() - 1);
  double combined = std::sqrt(s_se * s_se + g_var / xs.size());
  CHECK(std::abs(s_mean - g_mean) <= 3.0 * combined);
}

TEST_CASE("extended particles stay feasible under their own mixing value") {
  auto base = gen_cauchy_problem(5, 12);
  StudentOrthantProblem sp{base, 3.0};
  RunConfig cfg;
  cfg.particles = 200;
  cfg.seed = 8;
  cfg.move = MoveConfig{};
  auto result = smc_student_with_sample(sp, cfg);
  REQUIRE_FALSE(result.report.failed);
  const auto& sys = result.system;
  const OrthantProblem prepared = standardize(base);
  for (int m = 0; m < sys.particles; ++m) {
    ConstraintSystem cs(prepared, sys.t,
                        student_bound_scale(sys.mixing[m], sp.nu));
    cs.sync(sys.path(m));
    CHECK(cs.feasible());
  }
}
