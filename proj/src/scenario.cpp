// Copyright 2026 The amrplan Authors
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

#include "amrplan/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "amrplan/errors.hpp"
#include "spdlog/spdlog.h"

namespace amrplan::scenario {
namespace {

using Json = nlohmann::json;

constexpr int kMaxRejectionDraws = 100000;
constexpr double kMaxRejectionRate = 0.99;

double GetNumber(const Json& j, const std::string& key) {
  const Json& v = j.at(key);
  if (!v.is_number()) throw ParseError("'" + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> GetVector(const Json& j, const std::string& key) {
  const Json& v = j.at(key);
  if (!v.is_array()) throw ParseError("'" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ParseError("'" + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Interval GetInterval(const Json& j, const std::string& key) {
  std::vector<double> v = GetVector(j, key);
  if (v.size() != 2) throw ParseError("'" + key + "' must be [lo, hi]");
  return Interval{v[0], v[1]};
}

Json IntervalToJson(const Interval& iv) { return Json::array({iv.lo, iv.hi}); }

DenseMatrix MatrixFromJson(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) {
    throw ParseError("'" + what + "' must be a nonempty array of rows");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.front().size());
  DenseMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const Json& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw ParseError("'" + what + "' rows must have equal length");
    }
    for (int c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

Json MatrixToJson(const DenseMatrix& m) {
  Json out = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

ComponentDistribution ComponentFromJson(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  ComponentDistribution dist;
  if (kind == "point") {
    dist.kind = DistributionKind::kPoint;
    dist.lo = dist.hi = dist.mean = GetNumber(j, "value");
  } else if (kind == "uniform") {
    dist.kind = DistributionKind::kUniform;
    dist.lo = GetNumber(j, "lo");
    dist.hi = GetNumber(j, "hi");
    dist.mean = 0.5 * (dist.lo + dist.hi);
  } else if (kind == "truncnormal") {
    dist.kind = DistributionKind::kTruncatedNormal;
    dist.mean = GetNumber(j, "mean");
    dist.sd = GetNumber(j, "sd");
    dist.lo = GetNumber(j, "lo");
    dist.hi = GetNumber(j, "hi");
  } else {
    throw ParseError("unknown distribution kind '" + kind + "'");
  }
  return dist;
}

Json ComponentToJson(const ComponentDistribution& dist) {
  switch (dist.kind) {
    case DistributionKind::kPoint:
      return Json{{"kind", "point"}, {"value", dist.mean}};
    case DistributionKind::kUniform:
      return Json{{"kind", "uniform"}, {"lo", dist.lo}, {"hi", dist.hi}};
    case DistributionKind::kTruncatedNormal:
      return Json{{"kind", "truncnormal"}, {"mean", dist.mean},
                  {"sd", dist.sd},         {"lo", dist.lo},
                  {"hi", dist.hi}};
  }
  return {};
}

UncertaintyModel UncertaintyFromJson(const Json& j,
                                     std::span<const double> xi,
                                     std::span<const double> d) {
  static const std::set<std::string> kKeys = {
      "components", "box", "polytope", "k_samples", "epsilon", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) {
      throw ConfigError("unknown uncertainty key '" + key + "'");
    }
  }
  UncertaintyModel model;
  if (j.contains("components") && j.contains("box")) {
    throw ConfigError("uncertainty: give either 'components' or 'box'");
  }
  if (j.contains("components")) {
    for (const auto& c : j.at("components")) {
      model.components.push_back(ComponentFromJson(c));
    }
    SetBoxPolytope(model);
  } else if (j.contains("box")) {
    const Json& box = j.at("box");
    model = BoxUncertainty(xi, d, box.value("xi_rel", 0.0),
                           box.value("d_rel", 0.0));
  } else {
    throw ConfigError("uncertainty: 'components' or 'box' is required");
  }
  if (j.contains("polytope")) {
    const Json& poly = j.at("polytope");
    model.polytope_u = MatrixFromJson(poly.at("U"), "polytope.U");
    model.polytope_t = GetVector(poly, "t");
  }
  if (j.contains("k_samples")) model.k_samples = j.at("k_samples").get<int>();
  if (j.contains("epsilon")) model.epsilon = GetNumber(j, "epsilon");
  if (j.contains("seed")) model.seed = j.at("seed").get<uint64_t>();
  return model;
}

Json UncertaintyToJson(const UncertaintyModel& model) {
  Json comps = Json::array();
  for (const auto& c : model.components) comps.push_back(ComponentToJson(c));
  return Json{{"components", comps},
              {"polytope",
               Json{{"U", MatrixToJson(model.polytope_u)},
                    {"t", model.polytope_t}}},
              {"k_samples", model.k_samples},
              {"epsilon", model.epsilon},
              {"seed", model.seed}};
}

double DrawComponent(const ComponentDistribution& dist, std::mt19937_64& rng) {
  switch (dist.kind) {
    case DistributionKind::kPoint:
      return dist.mean;
    case DistributionKind::kUniform: {
      std::uniform_real_distribution<double> u(dist.lo, dist.hi);
      return u(rng);
    }
    case DistributionKind::kTruncatedNormal: {
      std::normal_distribution<double> normal(dist.mean, dist.sd);
      for (int attempt = 0; attempt < 10000; ++attempt) {
        const double x = normal(rng);
        if (x >= dist.lo && x <= dist.hi) return x;
      }
      throw ConfigError("truncated normal has negligible mass on [lo, hi]");
    }
  }
  return 0.0;
}

}  // namespace

bool UncertaintyModel::Contains(std::span<const double> delta,
                                double slack) const {
  for (int r = 0; r < polytope_u.rows(); ++r) {
    if (polytope_u.RowDot(r, delta) > polytope_t[r] + slack) return false;
  }
  return true;
}

void UncertaintyModel::Validate() const {
  std::vector<std::string> bad;
  if (components.empty()) bad.push_back("uncertainty.components");
  for (size_t j = 0; j < components.size(); ++j) {
    const auto& c = components[j];
    const std::string name = "uncertainty.components[" + std::to_string(j) + "]";
    const bool ok =
        (c.kind == DistributionKind::kPoint && c.lo == c.hi) ||
        (c.kind == DistributionKind::kUniform && c.lo <= c.hi) ||
        (c.kind == DistributionKind::kTruncatedNormal && c.sd > 0.0 &&
         c.lo < c.hi);
    if (!ok) bad.push_back(name);
  }
  if (polytope_u.rows() < 1 || polytope_u.cols() != dim() ||
      static_cast<int>(polytope_t.size()) != polytope_u.rows()) {
    bad.push_back("uncertainty.polytope");
  } else if (bad.empty()) {
    // The support box of the distribution must lie inside the polytope; a
    // linear function attains its maximum over a box at a vertex.
    for (int r = 0; r < polytope_u.rows(); ++r) {
      double worst = 0.0;
      for (int j = 0; j < dim(); ++j) {
        const double a = polytope_u(r, j);
        worst += std::max(a * components[j].lo, a * components[j].hi);
      }
      if (worst > polytope_t[r] + 1e-9) {
        bad.push_back("uncertainty.polytope.t[" + std::to_string(r) + "]");
      }
    }
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) bad.push_back("uncertainty.epsilon");
  if (k_samples < 1) bad.push_back("uncertainty.k_samples");
  if (!bad.empty()) throw ValidationError(bad);
}

void SetBoxPolytope(UncertaintyModel& model) {
  const int dim = model.dim();
  model.polytope_u = DenseMatrix(2 * dim, dim);
  model.polytope_t.assign(2 * dim, 0.0);
  for (int j = 0; j < dim; ++j) {
    model.polytope_u(j, j) = 1.0;
    model.polytope_t[j] = model.components[j].hi;
    model.polytope_u(dim + j, j) = -1.0;
    model.polytope_t[dim + j] = -model.components[j].lo;
  }
}

UncertaintyModel BoxUncertainty(std::span<const double> xi,
                                std::span<const double> d, double xi_rel,
                                double d_rel) {
  UncertaintyModel model;
  auto add = [&](double half) {
    ComponentDistribution dist;
    if (half > 0.0) {
      dist.kind = DistributionKind::kUniform;
      dist.lo = -half;
      dist.hi = half;
    }
    model.components.push_back(dist);
  };
  for (double x : xi) add(xi_rel * x);
  for (double x : d) add(d_rel * x);
  SetBoxPolytope(model);
  return model;
}

void ApplyDefaults(Scenario& s) {
  const double horizon = std::accumulate(s.xi.begin(), s.xi.end(), 0.0);
  auto fill = [&](Interval& iv) {
    if (iv.lo == 0.0 && iv.hi == 0.0) iv = Interval{0.0, horizon};
  };
  fill(s.t_bounds);
  fill(s.tc_bounds);
  fill(s.tw_bounds);
  if (s.beta.empty()) s.beta.assign(2 * static_cast<size_t>(s.n), 0.0);
  if (s.v_hat == 0.0) s.v_hat = s.v_bounds.mid();
  if (s.c_hat == 0.0) s.c_hat = s.c_bounds.mid();
}

void Scenario::Validate() const {
  std::vector<std::string> bad;
  if (n < 1) bad.push_back("n");
  if (static_cast<int>(xi.size()) != n) bad.push_back("xi");
  if (static_cast<int>(d.size()) != n) bad.push_back("d");
  for (size_t i = 0; i < xi.size(); ++i) {
    if (!(xi[i] > 0.0)) bad.push_back("xi[" + std::to_string(i) + "]");
  }
  for (size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) bad.push_back("d[" + std::to_string(i) + "]");
  }
  auto check_box = [&](const Interval& iv, const char* name) {
    if (!(iv.lo < iv.hi)) bad.push_back(name);
  };
  check_box(v_bounds, "v_bounds");
  check_box(c_bounds, "c_bounds");
  check_box(t_bounds, "t_bounds");
  check_box(tc_bounds, "tc_bounds");
  check_box(tw_bounds, "tw_bounds");
  check_box(s_bounds, "s_bounds");
  if (!(v_bounds.lo > 0.0)) bad.push_back("v_bounds");
  if (!(c_bounds.lo > 0.0)) bad.push_back("c_bounds");
  if (t_bounds.lo < 0.0) bad.push_back("t_bounds");
  if (tc_bounds.lo < 0.0) bad.push_back("tc_bounds");
  // The idle-time recursion produces exact zeros, so the box must admit 0.
  if (tw_bounds.lo != 0.0) bad.push_back("tw_bounds");
  if (!(s_lower >= 0.0 && s_lower < s_bounds.lo)) bad.push_back("s_lower");
  if (!(s_bounds.lo > s_lower && s_bounds.hi <= 1.0)) bad.push_back("s_bounds");
  if (!(lambda >= 0.0)) bad.push_back("lambda");
  if (static_cast<int>(beta.size()) != 2 * n) bad.push_back("beta");
  if (!v_bounds.contains(v_hat)) bad.push_back("v_hat");
  if (!c_bounds.contains(c_hat)) bad.push_back("c_hat");
  if (uncertainty.has_value()) {
    if (uncertainty->dim() != 2 * n) {
      bad.push_back("uncertainty.components");
    } else {
      try {
        uncertainty->Validate();
      } catch (const ValidationError& e) {
        bad.insert(bad.end(), e.fields().begin(), e.fields().end());
      }
    }
  }
  if (!robust.is_object()) bad.push_back("robust");
  if (!bad.empty()) throw ValidationError(bad);
}

Scenario ScenarioFromJson(const Json& j) {
  static const std::set<std::string> kKeys = {
      "n",         "xi",        "d",         "s_lower",  "v_bounds",
      "c_bounds",  "t_bounds",  "tc_bounds", "tw_bounds", "s_bounds",
      "lambda",    "beta",      "v_hat",     "c_hat",    "uncertainty",
      "robust"};
  if (!j.is_object()) throw ParseError("scenario must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) {
      throw ConfigError("unknown scenario key '" + key + "'");
    }
  }
  Scenario s;
  try {
    s.n = j.at("n").get<int>();
    s.xi = GetVector(j, "xi");
    s.d = GetVector(j, "d");
    if (j.contains("s_lower")) s.s_lower = GetNumber(j, "s_lower");
    if (j.contains("v_bounds")) s.v_bounds = GetInterval(j, "v_bounds");
    if (j.contains("c_bounds")) s.c_bounds = GetInterval(j, "c_bounds");
    if (j.contains("t_bounds")) s.t_bounds = GetInterval(j, "t_bounds");
    if (j.contains("tc_bounds")) s.tc_bounds = GetInterval(j, "tc_bounds");
    if (j.contains("tw_bounds")) s.tw_bounds = GetInterval(j, "tw_bounds");
    if (j.contains("s_bounds")) s.s_bounds = GetInterval(j, "s_bounds");
    if (j.contains("lambda")) s.lambda = GetNumber(j, "lambda");
    if (j.contains("beta")) s.beta = GetVector(j, "beta");
    if (j.contains("v_hat")) s.v_hat = GetNumber(j, "v_hat");
    if (j.contains("c_hat")) s.c_hat = GetNumber(j, "c_hat");
    if (j.contains("uncertainty")) {
      s.uncertainty = UncertaintyFromJson(j.at("uncertainty"), s.xi, s.d);
    }
    if (j.contains("robust")) s.robust = j.at("robust");
  } catch (const Json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  ApplyDefaults(s);
  s.Validate();
  return s;
}

Json ScenarioToJson(const Scenario& s) {
  Json j{{"n", s.n},
         {"xi", s.xi},
         {"d", s.d},
         {"s_lower", s.s_lower},
         {"v_bounds", IntervalToJson(s.v_bounds)},
         {"c_bounds", IntervalToJson(s.c_bounds)},
         {"t_bounds", IntervalToJson(s.t_bounds)},
         {"tc_bounds", IntervalToJson(s.tc_bounds)},
         {"tw_bounds", IntervalToJson(s.tw_bounds)},
         {"s_bounds", IntervalToJson(s.s_bounds)},
         {"lambda", s.lambda},
         {"beta", s.beta},
         {"v_hat", s.v_hat},
         {"c_hat", s.c_hat},
         {"robust", s.robust}};
  if (s.uncertainty) j["uncertainty"] = UncertaintyToJson(*s.uncertainty);
  return j;
}

Scenario LoadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ParseError("scenario file " + path + ": " + e.what());
  }
  return ScenarioFromJson(j);
}

void SaveScenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scenario file " + path);
  out << ScenarioToJson(scenario).dump(2) << "\n";
}

PerturbedTasks Perturb(const Scenario& scenario,
                       std::span<const double> delta) {
  PerturbedTasks out{scenario.xi, scenario.d};
  if (delta.empty()) return out;
  const size_t n = static_cast<size_t>(scenario.n);
  if (delta.size() != 2 * n) {
    throw DomainError("uncertainty vector must have 2N components");
  }
  for (size_t i = 0; i < n; ++i) {
    out.xi[i] += delta[i];
    out.d[i] += delta[n + i];
  }
  return out;
}

TaskControls Broadcast(const Decision& decision, int n) {
  const size_t count = static_cast<size_t>(n);
  return TaskControls{std::vector<double>(count, decision.s_bar),
                      std::vector<double>(count, decision.v),
                      std::vector<double>(count, decision.c)};
}

Decision BaselineDecision(const Scenario& scenario) {
  if (!scenario.s_bounds.contains(kBaselineTargetSoc)) {
    throw ConfigError("baseline target SOC 0.8 lies outside s_bounds");
  }
  return Decision{kBaselineTargetSoc, scenario.v_bounds.hi,
                  scenario.c_bounds.hi, std::nullopt};
}

Json DecisionToJson(const Decision& decision) {
  Json j{{"s_bar", decision.s_bar}, {"v", decision.v}, {"c", decision.c}};
  if (decision.recourse) {
    j["recourse"] = Json{{"ws", MatrixToJson(decision.recourse->ws)},
                         {"wv", MatrixToJson(decision.recourse->wv)},
                         {"wc", MatrixToJson(decision.recourse->wc)}};
  }
  return j;
}

Decision DecisionFromJson(const Json& j) {
  try {
    Decision decision{GetNumber(j, "s_bar"), GetNumber(j, "v"),
                      GetNumber(j, "c"), std::nullopt};
    if (j.contains("recourse")) {
      const Json& r = j.at("recourse");
      decision.recourse = Recourse{MatrixFromJson(r.at("ws"), "recourse.ws"),
                                   MatrixFromJson(r.at("wv"), "recourse.wv"),
                                   MatrixFromJson(r.at("wc"), "recourse.wc")};
    }
    return decision;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("decision: ") + e.what());
  }
}

std::vector<std::vector<double>> SampleUncertainty(
    const UncertaintyModel& model, int count, uint64_t seed) {
  if (count < 1) throw DomainError("sample count must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> samples;
  samples.reserve(static_cast<size_t>(count));
  std::vector<double> delta(static_cast<size_t>(model.dim()));
  long attempts = 0;
  long rejected = 0;
  while (static_cast<int>(samples.size()) < count) {
    for (int j = 0; j < model.dim(); ++j) {
      delta[j] = DrawComponent(model.components[j], rng);
    }
    ++attempts;
    if (model.Contains(delta)) {
      samples.push_back(delta);
      continue;
    }
    ++rejected;
    if (attempts >= kMaxRejectionDraws &&
        rejected > kMaxRejectionRate * static_cast<double>(attempts)) {
      throw ConfigError(
          "uncertainty distribution is inconsistent with its polytope "
          "(rejection rate above 99%)");
    }
  }
  if (rejected > 0) {
    spdlog::debug("sampler rejected {} of {} draws", rejected, attempts);
  }
  return samples;
}

}  // namespace amrplan::scenario
