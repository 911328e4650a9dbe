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

#ifndef ORTHANT_IO_HPP
#define ORTHANT_IO_HPP

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "orthant/estimators.hpp"
#include "orthant/expectations.hpp"
#include "orthant/problem.hpp"

namespace orthant {

using nlohmann::json;

namespace detail {

inline json bound_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == kNegInf) return "-inf";
  return v;
}

inline double bound_from_json(const json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return kNegInf;
    throw std::invalid_argument("problem json: bad bound string '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace detail

/// Problem document: {"d", "a", "b", "sigma", "mean", "meta"}; infinite
/// bounds encoded as the strings "inf" / "-inf". Student problems add "nu".
inline json problem_to_json(const OrthantProblem& p,
                            std::optional<double> nu = std::nullopt) {
  json j;
  j["d"] = p.d;
  json a = json::array(), b = json::array();
  for (int i = 0; i < p.d; ++i) {
    a.push_back(detail::bound_to_json(p.lower[i]));
    b.push_back(detail::bound_to_json(p.upper[i]));
  }
  j["a"] = std::move(a);
  j["b"] = std::move(b);
  json sigma = json::array();
  for (int i = 0; i < p.d; ++i) {
    json row = json::array();
    for (int k = 0; k < p.d; ++k) row.push_back(p.sigma(i, k));
    sigma.push_back(std::move(row));
  }
  j["sigma"] = std::move(sigma);
  j["mean"] = p.mean;
  j["meta"] = json::object();
  for (const auto& [k, v] : p.meta) j["meta"][k] = v;
  if (nu) j["nu"] = *nu;
  return j;
}

inline OrthantProblem problem_from_json(const json& j,
                                        std::optional<double>* nu = nullptr) {
  if (!j.contains("d") || !j.contains("a") || !j.contains("b") ||
      !j.contains("sigma"))
    throw std::invalid_argument("problem json: missing field (need d, a, b, sigma)");
  const int d = j.at("d").get<int>();
  std::vector<double> a, b;
  for (const auto& v : j.at("a")) a.push_back(detail::bound_from_json(v));
  for (const auto& v : j.at("b")) b.push_back(detail::bound_from_json(v));
  std::vector<double> rows;
  rows.reserve(static_cast<std::size_t>(d) * d);
  for (const auto& row : j.at("sigma"))
    for (const auto& v : row) rows.push_back(v.get<double>());
  SymMatrix sigma = SymMatrix::from_rows(d, rows);
  std::vector<double> mean;
  if (j.contains("mean") && !j.at("mean").empty())
    mean = j.at("mean").get<std::vector<double>>();
  auto p = OrthantProblem::from_covariance(std::move(a), std::move(b),
                                           std::move(sigma), std::move(mean));
  if (j.contains("meta"))
    for (const auto& [k, v] : j.at("meta").items())
      p.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
  if (nu) *nu = j.contains("nu") ? std::optional<double>(j.at("nu").get<double>())
                                 : std::nullopt;
  return p;
}

/// One JSON-lines record per estimation run.
inline json report_to_json(const EstimateReport& r, bool with_timing = true) {
  json j;
  if (r.log_prob == kNegInf)
    j["log_prob"] = "-inf";
  else
    j["log_prob"] = r.log_prob;
  j["failed"] = r.failed;
  json trace = json::array();
  for (const auto& [t, e] : r.ess_trace) trace.push_back(json::array({t, e}));
  j["ess_trace"] = std::move(trace);
  j["resample_events"] = r.resample_events;
  j["M"] = r.particles;
  j["seed"] = r.seed;
  j["wall_seconds"] = with_timing ? r.wall_seconds : 0.0;
  if (!r.move_stats.empty()) {
    json moves = json::array();
    for (const auto& m : r.move_stats) {
      json mm;
      mm["kernel"] = m.kernel;
      mm["sweeps"] = m.sweeps;
      mm["acceptance"] = m.acceptance;
      if (m.u_acceptance) mm["u_acceptance"] = *m.u_acceptance;
      moves.push_back(std::move(mm));
    }
    j["move_stats"] = std::move(moves);
  }
  return j;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << body;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

inline OrthantProblem load_problem(const std::string& path,
                                   std::optional<double>* nu = nullptr) {
  return problem_from_json(json::parse(read_text_file(path)), nu);
}

/// CSV export of a thinned chain: one row per draw, columns eta_1..eta_d
/// plus u for Student chains.
inline std::string gibbs_sample_to_csv(const GibbsSample& sample) {
  std::ostringstream out;
  out.precision(17);
  for (int j = 0; j < sample.d; ++j) {
    if (j) out << ',';
    out << "eta_" << (j + 1);
  }
  if (sample.has_mixing) out << (sample.d ? "," : "") << "u";
  out << '\n';
  for (const auto& row : sample.draws) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << row[j];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace orthant

#endif  // ORTHANT_IO_HPP
