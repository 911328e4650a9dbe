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

#ifndef ORTHANT_EXPERIMENTS_HPP
#define ORTHANT_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "orthant/io.hpp"

namespace orthant {

/// Parses a move kernel name: none | gibbs | overrelax | hmc | block:L.
inline std::optional<MoveConfig> parse_move(const std::string& name) {
  if (name == "none" || name.empty()) return std::nullopt;
  MoveConfig mc;
  if (name == "gibbs") {
    mc.kind = MoveKind::gibbs;
  } else if (name == "overrelax") {
    mc.kind = MoveKind::overrelax;
  } else if (name == "hmc") {
    mc.kind = MoveKind::hmc;
  } else if (name.rfind("block", 0) == 0) {
    mc.kind = MoveKind::block_gibbs;
    auto colon = name.find(':');
    if (colon != std::string::npos)
      mc.block_window = std::stoi(name.substr(colon + 1));
  } else {
    throw std::invalid_argument("unknown move kernel '" + name + "'");
  }
  return mc;
}

/// One benchmarked method: a named RunConfig template.
struct MethodSpec {
  std::string label;
  std::string method = "smc";  // ghk | pf | smc
  int particles = 1000;
  double ess = 0.5;
  std::string move = "gibbs";
  bool ordering = true;

  RunConfig run_config(std::uint64_t seed) const {
    RunConfig c;
    c.particles = particles;
    c.seed = seed;
    c.ordering = ordering;
    if (method == "ghk") {
      c.ess_threshold = 0.0;
      c.move.reset();
    } else if (method == "pf") {
      c.ess_threshold = ess;
      c.move.reset();
    } else if (method == "smc") {
      c.ess_threshold = ess;
      c.move = parse_move(move);
    } else {
      throw std::invalid_argument("unknown method '" + method + "'");
    }
    return c;
  }

  std::string name() const {
    if (!label.empty()) return label;
    std::string n = method;
    if (method == "smc") n += "-" + move;
    if (!ordering) n += "-unordered";
    return n;
  }
};

struct ExperimentConfig {
  std::string experiment;
  std::vector<int> dimensions;
  int replications = 1;
  std::vector<MethodSpec> methods;
  bool equal_compute = false;
  std::uint64_t seed = 0;
  std::string out = "experiment.jsonl";
  bool record_timing = true;

  // Experiment-specific knobs (defaults follow the benchmark protocols).
  double rho = 0.7;
  double lower = 0.0;
  double upper = 15.0;
  int thurstone_p = 10;
  double thurstone_sigma = 1.0;
  std::optional<double> nu;
  int probit_alternatives = 10;
  int gibbs_budget_multiplier = 100;
  int thin = 1000;
};

inline ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig c;
  auto require = [&](const char* field) {
    if (!j.contains(field))
      throw std::invalid_argument(std::string("experiment config: missing field '") +
                                  field + "'");
  };
  require("experiment");
  c.experiment = j.at("experiment").get<std::string>();
  static const std::vector<std::string> known = {
      "ar1-toy",  "thurstone", "ordering",    "compare-moves",
      "highdim",  "student",   "probit",      "expectation"};
  if (std::find(known.begin(), known.end(), c.experiment) == known.end())
    throw std::invalid_argument("experiment config: unknown experiment '" +
                                c.experiment + "'");
  if (j.contains("dimensions"))
    c.dimensions = j.at("dimensions").get<std::vector<int>>();
  else if (j.contains("sizes"))
    c.dimensions = j.at("sizes").get<std::vector<int>>();
  if (j.contains("replications")) c.replications = j.at("replications").get<int>();
  if (c.replications < 1)
    throw std::invalid_argument("experiment config: field 'replications' must be >= 1");
  if (j.contains("equal_compute")) c.equal_compute = j.at("equal_compute").get<bool>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out")) c.out = j.at("out").get<std::string>();
  if (j.contains("record_timing")) c.record_timing = j.at("record_timing").get<bool>();
  if (j.contains("rho")) c.rho = j.at("rho").get<double>();
  if (j.contains("lower")) c.lower = j.at("lower").get<double>();
  if (j.contains("upper")) c.upper = j.at("upper").get<double>();
  if (j.contains("thurstone_p")) c.thurstone_p = j.at("thurstone_p").get<int>();
  if (j.contains("thurstone_sigma"))
    c.thurstone_sigma = j.at("thurstone_sigma").get<double>();
  if (j.contains("nu")) c.nu = j.at("nu").get<double>();
  if (j.contains("probit_alternatives"))
    c.probit_alternatives = j.at("probit_alternatives").get<int>();
  if (j.contains("gibbs_budget_multiplier"))
    c.gibbs_budget_multiplier = j.at("gibbs_budget_multiplier").get<int>();
  if (j.contains("thin")) c.thin = j.at("thin").get<int>();
  if (j.contains("methods")) {
    for (const auto& m : j.at("methods")) {
      MethodSpec s;
      if (m.contains("label")) s.label = m.at("label").get<std::string>();
      if (m.contains("method")) s.method = m.at("method").get<std::string>();
      if (m.contains("particles")) s.particles = m.at("particles").get<int>();
      if (m.contains("ess")) s.ess = m.at("ess").get<double>();
      if (m.contains("move")) s.move = m.at("move").get<std::string>();
      if (m.contains("ordering")) s.ordering = m.at("ordering").get<bool>();
      c.methods.push_back(std::move(s));
    }
  }
  if (c.methods.empty())
    throw std::invalid_argument("experiment config: missing field 'methods'");
  return c;
}

struct SummaryRow {
  std::string method;
  int dimension = 0;
  int particles = 0;
  ReplicationSummary stats;
  double wall_seconds = 0.0;
};

struct ExperimentResult {
  std::vector<SummaryRow> summary;
  std::string jsonl;          // one record per run
  std::string summary_csv;
  std::string extra;          // experiment-specific artifact (chain CSV, ...)
};

namespace detail {

/// Pilot-timing calibration: every method gets the wall-time budget of the
/// reference method (the first SMC entry, else the first entry) at its
/// configured particle count, and its own count is rescaled accordingly.
inline std::vector<int> equal_compute_particles(
    const std::vector<std::pair<const OrthantProblem*, std::optional<double>>>& problems,
    const ExperimentConfig& cfg) {
  int ref = 0;
  for (std::size_t i = 0; i < cfg.methods.size(); ++i)
    if (cfg.methods[i].method == "smc") {
      ref = static_cast<int>(i);
      break;
    }
  auto time_method = [&](const MethodSpec& spec, int particles) {
    double total = 0.0;
    for (auto [p, nu] : problems) {
      RunConfig rc = spec.run_config(derive_seed(cfg.seed, 0xCA11, 0));
      rc.particles = particles;
      total += estimate(*p, rc, nu).wall_seconds;
    }
    return total;
  };
  const MethodSpec& ref_spec = cfg.methods[ref];
  double budget = time_method(ref_spec, ref_spec.particles);
  std::vector<int> out(cfg.methods.size());
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    if (static_cast<int>(i) == ref) {
      out[i] = cfg.methods[i].particles;
      continue;
    }
    int pilot = std::max(64, cfg.methods[i].particles / 16);
    double cost = time_method(cfg.methods[i], pilot) / pilot;
    long long scaled =
        cost > 0.0 ? static_cast<long long>(std::llround(budget / cost)) : 0;
    out[i] = static_cast<int>(std::clamp<long long>(scaled, 2, 50'000'000));
  }
  return out;
}

struct RunCollector {
  const ExperimentConfig& cfg;
  std::ostringstream jsonl;
  std::vector<SummaryRow> summary;

  void record(const std::string& method, int dimension,
              const std::vector<EstimateReport>& reports) {
    SummaryRow row;
    row.method = method;
    row.dimension = dimension;
    row.particles = reports.empty() ? 0 : reports.front().particles;
    row.stats = summarize_log_estimates(reports);
    for (std::size_t r = 0; r < reports.size(); ++r) {
      row.wall_seconds += reports[r].wall_seconds;
      json rec = report_to_json(reports[r], cfg.record_timing);
      rec["method"] = method;
      rec["dimension"] = dimension;
      rec["replicate"] = r;
      jsonl << rec.dump() << '\n';
    }
    if (!cfg.record_timing) row.wall_seconds = 0.0;
    summary.push_back(std::move(row));
  }
};

inline std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out.precision(12);
  out << "method,dimension,particles,mean_log_prob,variance,skewness,failures,"
         "wall_seconds\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.dimension << ',' << r.particles << ','
        << r.stats.mean << ',' << r.stats.variance << ',' << r.stats.skewness
        << ',' << r.stats.failures << ',' << r.wall_seconds << '\n';
  }
  return out.str();
}

/// Simulates one Thurstonian observation: utilities x_i = beta_i + sigma eps
/// whose observed ranking determines the orthant problem of its likelihood.
inline OrthantProblem simulate_thurstone_observation(
    std::span<const double> beta, double sigma, std::uint64_t seed,
    int observation) {
  const int p = static_cast<int>(beta.size());
  SplitMix64 rng = derive_stream(seed, 0x7157, observation);
  std::vector<double> x(p);
  for (int i = 0; i < p; ++i)
    x[i] = beta[i] + sigma * sample_std_normal(rng);
  std::vector<int> rank(p);
  std::iota(rank.begin(), rank.end(), 0);
  std::sort(rank.begin(), rank.end(),
            [&](int a, int b) { return x[a] < x[b]; });
  std::vector<double> beta_sorted(p);
  for (int i = 0; i < p; ++i) beta_sorted[i] = beta[rank[i]];
  return gen_thurstonian(beta_sorted, sigma);
}

}  // namespace detail

/// Runs the named benchmark experiment and renders its outputs; file writing
/// is left to the caller (see run_experiment_to_files).
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  detail::RunCollector collect{cfg};

  auto replicate = [&](const OrthantProblem& problem, std::optional<double> nu,
                       const MethodSpec& spec, int particles, int dimension) {
    std::vector<EstimateReport> reports;
    reports.reserve(cfg.replications);
    for (int r = 0; r < cfg.replications; ++r) {
      RunConfig rc =
          spec.run_config(derive_seed(cfg.seed, rngtag::kReplicate, r));
      rc.particles = particles;
      reports.push_back(estimate(problem, rc, nu));
    }
    collect.record(spec.name(), dimension, reports);
  };

  auto run_per_dimension = [&](auto&& make_problem, std::optional<double> nu) {
    for (int d : cfg.dimensions) {
      OrthantProblem problem = make_problem(d);
      std::vector<int> particles(cfg.methods.size());
      for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        particles[i] = cfg.methods[i].particles;
      if (cfg.equal_compute) {
        std::vector<std::pair<const OrthantProblem*, std::optional<double>>>
            probs = {{&problem, nu}};
        particles = detail::equal_compute_particles(probs, cfg);
      }
      for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        replicate(problem, nu, cfg.methods[i], particles[i], d);
    }
  };

  ExperimentResult result;
  const std::string& kind = cfg.experiment;

  if (kind == "ar1-toy") {
    std::vector<int> horizons =
        cfg.dimensions.empty() ? std::vector<int>{100, 150, 200} : cfg.dimensions;
    ExperimentConfig local = cfg;
    local.dimensions = horizons;
    detail::RunCollector* keep = &collect;
    for (int T : horizons) {
      Ar1Spec spec;
      spec.horizon = T;
      spec.rho = cfg.rho;
      spec.lower = cfg.lower;
      spec.upper = cfg.upper;
      OrthantProblem problem = gen_ar1_problem(spec);
      for (const auto& m : cfg.methods)
        replicate(problem, std::nullopt, m, m.particles, T);
    }
    (void)keep;
  } else if (kind == "thurstone") {
    std::vector<int> obs_counts =
        cfg.dimensions.empty() ? std::vector<int>{1, 2, 3, 4, 5} : cfg.dimensions;
    std::vector<double> beta(cfg.thurstone_p);
    SplitMix64 rng = derive_stream(cfg.seed, 0xBE7A, 0);
    for (auto& b : beta) b = sample_std_normal(rng);
    for (int n_obs : obs_counts) {
      std::vector<OrthantProblem> problems;
      for (int o = 0; o < n_obs; ++o)
        problems.push_back(detail::simulate_thurstone_observation(
            beta, cfg.thurstone_sigma, cfg.seed, o));
      for (const auto& spec : cfg.methods) {
        std::vector<EstimateReport> reports;
        for (int r = 0; r < cfg.replications; ++r) {
          // Likelihood of independent observations: product of per-
          // observation orthant estimates (sum of the log estimates).
          EstimateReport combined;
          combined.particles = spec.particles;
          double log_prob = 0.0;
          bool failed = false;
          for (std::size_t o = 0; o < problems.size(); ++o) {
            RunConfig rc = spec.run_config(
                derive_seed(cfg.seed, rngtag::kReplicate,
                            r * 1000 + static_cast<int>(o)));
            auto rep = estimate(problems[o], rc);
            combined.wall_seconds += rep.wall_seconds;
            if (rep.failed) failed = true;
            log_prob += rep.log_prob;
            if (o == 0) {
              combined.ess_trace = rep.ess_trace;
              combined.resample_events = rep.resample_events;
              combined.seed = rep.seed;
            }
          }
          combined.failed = failed;
          combined.log_prob = failed ? kNegInf : log_prob;
          reports.push_back(std::move(combined));
        }
        collect.record(spec.name(), n_obs, reports);
      }
    }
  } else if (kind == "ordering" || kind == "compare-moves" ||
             kind == "highdim") {
    run_per_dimension(
        [&](int d) { return gen_cauchy_problem(d, cfg.seed); }, std::nullopt);
  } else if (kind == "student") {
    double nu = cfg.nu.value_or(3.0);
    run_per_dimension(
        [&](int d) { return gen_cauchy_problem(d, cfg.seed); }, nu);
  } else if (kind == "probit") {
    run_per_dimension(
        [&](int T) {
          ProbitPanelSpec spec;
          spec.alternatives = cfg.probit_alternatives;
          spec.periods = T;
          return gen_probit_panel(spec, cfg.seed);
        },
        std::nullopt);
  } else if (kind == "expectation") {
    int d = cfg.dimensions.empty() ? 50 : cfg.dimensions.front();
    OrthantProblem problem = gen_cauchy_problem(d, cfg.seed);
    const MethodSpec& spec = cfg.methods.front();
    RunConfig rc = spec.run_config(derive_seed(cfg.seed, rngtag::kReplicate, 0));
    std::optional<double> nu = cfg.nu;
    auto engine = nu ? smc_student_with_sample({problem, *nu}, rc)
                     : smc_with_sample(problem, rc);
    collect.record(spec.name(), d, {engine.report});
    const OrthantProblem prepared = detail::prepare_problem(problem, rc.ordering);
    auto mean_y = weighted_expectation(
        engine.system, in_original_coordinates(prepared, identity_path_function()));
    // Benchmark chain gets `gibbs_budget_multiplier` times the SMC budget,
    // converted to iterations through a short pilot run.
    auto pilot = gibbs_truncated_sampler(prepared, nu, 200, 1, cfg.seed);
    double per_iter = 0.0;
    {
      auto t0 = std::chrono::steady_clock::now();
      gibbs_truncated_sampler(prepared, nu, 200, 1, cfg.seed);
      per_iter = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0).count() / 200.0;
    }
    long long iters = per_iter > 0.0
        ? std::llround(cfg.gibbs_budget_multiplier *
                       std::max(engine.report.wall_seconds, 1e-3) / per_iter)
        : 10000;
    iters = std::clamp<long long>(iters, cfg.thin, 5'000'000);
    auto chain = gibbs_truncated_sampler(prepared, nu,
                                         static_cast<int>(iters), cfg.thin,
                                         derive_seed(cfg.seed, rngtag::kChain, 1));
    result.extra = gibbs_sample_to_csv(chain);
    json extra;
    extra["type"] = "expectation";
    extra["smc_mean_y"] = mean_y;
    extra["gibbs_mean"] = chain.diagnostics.mean;
    json lag1 = json::array();
    for (const auto& ac : chain.diagnostics.autocorr)
      lag1.push_back(ac.empty() ? 0.0 : ac.front());
    extra["gibbs_lag1_autocorr"] = std::move(lag1);
    extra["gibbs_iterations"] = iters;
    collect.jsonl << extra.dump() << '\n';
    (void)pilot;
  }

  result.summary = std::move(collect.summary);
  result.jsonl = collect.jsonl.str();
  result.summary_csv = detail::summary_to_csv(result.summary);
  return result;
}

/// Derives the summary-CSV path from the JSONL output path.
inline std::string summary_path_for(const std::string& out) {
  auto dot = out.find_last_of('.');
  std::string base = dot == std::string::npos ? out : out.substr(0, dot);
  return base + ".summary.csv";
}

inline ExperimentResult run_experiment_to_files(const ExperimentConfig& cfg) {
  ExperimentResult result = run_experiment(cfg);
  write_text_file(cfg.out, result.jsonl);
  write_text_file(summary_path_for(cfg.out), result.summary_csv);
  if (!result.extra.empty()) {
    auto dot = cfg.out.find_last_of('.');
    std::string base = dot == std::string::npos ? cfg.out : cfg.out.substr(0, dot);
    write_text_file(base + ".chain.csv", result.extra);
  }
  return result;
}

}  // namespace orthant

#endif  // ORTHANT_EXPERIMENTS_HPP
