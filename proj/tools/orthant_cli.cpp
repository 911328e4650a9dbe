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

// Command-line front end: problem generation, single estimation runs,
// benchmark experiments and truncated-distribution expectations.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "orthant/experiments.hpp"
#include "orthant/io.hpp"
#include "orthant/orthant.hpp"

namespace {

using namespace orthant;

struct EstimateFlags {
  std::string problem_path;
  std::string method = "ghk";
  std::string move = "gibbs";
  int particles = 1000;
  double ess = 0.5;
  std::string ordering = "on";
  double nu = 0.0;  // 0: not set
  std::uint64_t seed = 0;
  int replications = 1;
  std::string out;
};

RunConfig flags_to_config(const EstimateFlags& f) {
  MethodSpec spec;
  spec.method = f.method;
  spec.particles = f.particles;
  spec.ess = f.ess;
  spec.move = f.move;
  spec.ordering = f.ordering == "on";
  return spec.run_config(f.seed);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    write_text_file(out_path, text);
}

int run_estimate(const EstimateFlags& flags) {
  std::optional<double> nu_from_file;
  OrthantProblem problem = load_problem(flags.problem_path, &nu_from_file);
  std::optional<double> nu = nu_from_file;
  if (flags.nu > 0.0) nu = flags.nu;
  RunConfig cfg = flags_to_config(flags);

  std::ostringstream lines;
  bool all_failed = true;
  if (flags.replications <= 1) {
    auto rep = estimate(problem, cfg, nu);
    lines << report_to_json(rep).dump() << '\n';
    all_failed = rep.failed;
  } else {
    auto [reports, summary] = repeat_estimate(problem, cfg, flags.replications, nu);
    for (const auto& r : reports) {
      lines << report_to_json(r).dump() << '\n';
      if (!r.failed) all_failed = false;
    }
    json s;
    s["summary"] = {{"mean_log_prob", summary.mean},
                    {"variance", summary.variance},
                    {"skewness", summary.skewness},
                    {"failures", summary.failures}};
    lines << s.dump() << '\n';
  }
  emit(lines.str(), flags.out);
  return all_failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo estimation of Gaussian and Student orthant "
               "probabilities (GHK, particle filter, adaptive SMC)"};
  app.require_subcommand(1);

  // ---- generate ----------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "generate a problem JSON file");
  gen->require_subcommand(1);
  std::string gen_out;
  double gen_nu = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", gen_out, "output path (default: stdout)");
    sub->add_option("--nu", gen_nu, "attach Student degrees of freedom");
  };

  int cauchy_d = 10;
  std::uint64_t cauchy_seed = 0;
  auto* gen_cauchy = gen->add_subcommand("cauchy", "heavy-tailed covariance");
  gen_cauchy->add_option("--d", cauchy_d, "dimension")->required();
  gen_cauchy->add_option("--seed", cauchy_seed, "seed");
  add_common(gen_cauchy);

  Ar1Spec ar1;
  auto* gen_ar1 = gen->add_subcommand("ar1", "autoregressive box problem");
  gen_ar1->add_option("--horizon", ar1.horizon, "number of periods")->required();
  gen_ar1->add_option("--rho", ar1.rho, "autoregression coefficient");
  gen_ar1->add_option("--lower", ar1.lower, "box lower bound");
  gen_ar1->add_option("--upper", ar1.upper, "box upper bound");
  gen_ar1->add_option("--sigma", ar1.sigma, "innovation sd");
  gen_ar1->add_flag("--stationary", ar1.stationary_start, "stationary start");
  add_common(gen_ar1);

  int thur_p = 4;
  double thur_sigma = 1.0;
  std::vector<double> thur_beta;
  auto* gen_thur = gen->add_subcommand("thurstone", "ranking probability");
  gen_thur->add_option("--p", thur_p, "number of alternatives")->required();
  gen_thur->add_option("--beta", thur_beta, "means (default all zero)");
  gen_thur->add_option("--sigma", thur_sigma, "noise sd");
  add_common(gen_thur);

  ProbitPanelSpec probit;
  std::uint64_t probit_seed = 0;
  auto* gen_probit = gen->add_subcommand("probit", "panel probit likelihood");
  gen_probit->add_option("--alternatives", probit.alternatives, "choices J")
      ->required();
  gen_probit->add_option("--periods", probit.periods, "periods T")->required();
  gen_probit->add_option("--choices", probit.choices, "observed choice sequence");
  gen_probit->add_option("--alpha-sd", probit.alpha_sd, "random effect sd");
  gen_probit->add_option("--alpha-corr", probit.alpha_corr, "random effect corr");
  gen_probit->add_option("--nu-sd", probit.nu_sd, "innovation sd");
  gen_probit->add_option("--nu-corr", probit.nu_corr, "innovation corr");
  gen_probit->add_option("--ar", probit.ar_coeff, "AR coefficient of the noise");
  gen_probit->add_option("--regressors", probit.n_regressors, "regressor count");
  gen_probit->add_option("--seed", probit_seed, "seed");
  add_common(gen_probit);

  // ---- estimate -----------------------------------------------------------
  EstimateFlags est;
  auto* est_cmd = app.add_subcommand("estimate", "run one estimator on a problem");
  est_cmd->add_option("problem", est.problem_path, "problem JSON file")->required();
  est_cmd->add_option("--method", est.method, "ghk | pf | smc")
      ->check(CLI::IsMember({"ghk", "pf", "smc"}));
  est_cmd->add_option("--move", est.move, "none | gibbs | overrelax | hmc | block:L");
  est_cmd->add_option("--particles", est.particles, "particle count");
  est_cmd->add_option("--ess", est.ess, "resampling threshold fraction");
  est_cmd->add_option("--ordering", est.ordering, "on | off")
      ->check(CLI::IsMember({"on", "off"}));
  est_cmd->add_option("--nu", est.nu, "Student degrees of freedom");
  est_cmd->add_option("--seed", est.seed, "seed");
  est_cmd->add_option("--replications", est.replications, "independent runs");
  est_cmd->add_option("--out", est.out, "output path (default: stdout)");

  // ---- experiment ---------------------------------------------------------
  std::string experiment_config;
  auto* exp_cmd = app.add_subcommand("experiment", "run a benchmark experiment");
  exp_cmd->add_option("config", experiment_config, "experiment config JSON")
      ->required();

  // ---- expectation --------------------------------------------------------
  EstimateFlags exv;
  exv.method = "smc";
  long long bench_iters = 0;
  int thin = 1000;
  auto* exp_val = app.add_subcommand(
      "expectation", "weighted expectations under the truncated law");
  exp_val->add_option("problem", exv.problem_path, "problem JSON file")->required();
  exp_val->add_option("--particles", exv.particles, "particle count");
  exp_val->add_option("--move", exv.move, "move kernel");
  exp_val->add_option("--ess", exv.ess, "resampling threshold fraction");
  exp_val->add_option("--ordering", exv.ordering, "on | off");
  exp_val->add_option("--nu", exv.nu, "Student degrees of freedom");
  exp_val->add_option("--seed", exv.seed, "seed");
  exp_val->add_option("--benchmark-iters", bench_iters,
                      "also run the benchmark Gibbs chain this many iterations");
  exp_val->add_option("--thin", thin, "thinning of the benchmark chain");
  exp_val->add_option("--out", exv.out, "CSV path for the thinned chain");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      OrthantProblem problem;
      if (gen_cauchy->parsed()) {
        problem = gen_cauchy_problem(cauchy_d, cauchy_seed);
      } else if (gen_ar1->parsed()) {
        problem = gen_ar1_problem(ar1);
      } else if (gen_thur->parsed()) {
        if (thur_beta.empty()) thur_beta.assign(thur_p, 0.0);
        if (static_cast<int>(thur_beta.size()) != thur_p)
          throw std::invalid_argument("--beta length must equal --p");
        problem = gen_thurstonian(thur_beta, thur_sigma);
      } else {
        problem = gen_probit_panel(probit, probit_seed);
      }
      std::optional<double> nu =
          gen_nu > 0.0 ? std::optional<double>(gen_nu) : std::nullopt;
      emit(problem_to_json(problem, nu).dump(2) + "\n", gen_out);
      return 0;
    }
    if (est_cmd->parsed()) return run_estimate(est);
    if (exp_cmd->parsed()) {
      auto config = parse_experiment_config(
          json::parse(read_text_file(experiment_config)));
      run_experiment_to_files(config);
      return 0;
    }
    if (exp_val->parsed()) {
      std::optional<double> nu_from_file;
      OrthantProblem problem = load_problem(exv.problem_path, &nu_from_file);
      std::optional<double> nu = nu_from_file;
      if (exv.nu > 0.0) nu = exv.nu;
      RunConfig cfg = flags_to_config(exv);
      auto engine = nu ? smc_student_with_sample({problem, *nu}, cfg)
                       : smc_with_sample(problem, cfg);
      if (engine.report.failed) {
        std::cerr << "dead particle system\n";
        return 2;
      }
      const OrthantProblem prepared =
          detail::prepare_problem(problem, cfg.ordering);
      auto mean_eta =
          weighted_expectation(engine.system, identity_path_function());
      auto mean_y = weighted_expectation(
          engine.system,
          in_original_coordinates(prepared, identity_path_function()));
      json outj;
      outj["log_prob"] = engine.report.log_prob;
      outj["mean_eta"] = mean_eta;
      outj["mean_y"] = mean_y;
      if (bench_iters > 0) {
        auto chain = gibbs_truncated_sampler(prepared, nu,
                                             static_cast<int>(bench_iters),
                                             thin, derive_seed(exv.seed, 9, 9));
        json lag1 = json::array();
        for (const auto& ac : chain.diagnostics.autocorr)
          lag1.push_back(ac.empty() ? 0.0 : ac.front());
        outj["gibbs_mean"] = chain.diagnostics.mean;
        outj["gibbs_lag1_autocorr"] = std::move(lag1);
        if (!exv.out.empty())
          write_text_file(exv.out, gibbs_sample_to_csv(chain));
      }
      std::cout << outj.dump() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
