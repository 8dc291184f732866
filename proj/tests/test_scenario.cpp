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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "amrplan/errors.hpp"
#include "amrplan/scenario.hpp"
#include "doctest.h"

using namespace amrplan;
using scenario::Scenario;
using Json = nlohmann::json;

namespace {

Json MinimalJson() { return Json{{"n", 1}, {"xi", {2.0}}, {"d", {1.0}}}; }

}  // namespace

TEST_CASE("load: minimal file receives defaults") {
  const Scenario s = scenario::ScenarioFromJson(MinimalJson());
  CHECK(s.n == 1);
  CHECK(s.tw_bounds.lo == 0.0);
  CHECK(s.tw_bounds.hi == doctest::Approx(2.0));
  CHECK(s.t_bounds.hi == doctest::Approx(2.0));
  CHECK(s.beta == std::vector<double>{0.0, 0.0});
  CHECK(s.v_hat == doctest::Approx(s.v_bounds.mid()));
  CHECK(s.c_hat == doctest::Approx(s.c_bounds.mid()));
  CHECK(s.lambda == 1.0);
  CHECK_FALSE(s.uncertainty.has_value());
}

TEST_CASE("load: zero interval names the failing field") {
  Json j = MinimalJson();
  j["xi"] = {0.0};
  try {
    scenario::ScenarioFromJson(j);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(e.fields().size() >= 1);
    CHECK(e.fields()[0] == "xi[0]");
  }
}

TEST_CASE("load: every failing field is listed") {
  Json j = MinimalJson();
  j["d"] = {-1.0};
  j["lambda"] = -2.0;
  j["v_bounds"] = {3.0, 1.0};
  try {
    scenario::ScenarioFromJson(j);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const auto& f = e.fields();
    auto has = [&](const std::string& name) {
      return std::find(f.begin(), f.end(), name) != f.end();
    };
    CHECK(has("d[0]"));
    CHECK(has("lambda"));
    CHECK(has("v_bounds"));
  }
}

TEST_CASE("load: unknown keys and malformed values") {
  Json j = MinimalJson();
  j["colour"] = "blue";
  CHECK_THROWS_AS(scenario::ScenarioFromJson(j), ConfigError);
  Json k = MinimalJson();
  k["xi"] = "soon";
  CHECK_THROWS_AS(scenario::ScenarioFromJson(k), ParseError);
  CHECK_THROWS_AS(scenario::LoadScenario("does/not/exist.json"), IoError);
}

TEST_CASE("load: shipped reference scenario has 20 tasks") {
  const Scenario s = scenario::LoadScenario("scenarios/reference20.json");
  CHECK(s.n == 20);
  REQUIRE(s.uncertainty.has_value());
  CHECK(s.uncertainty->dim() == 40);
  CHECK(s.uncertainty->epsilon == doctest::Approx(0.02));
  const Scenario t = scenario::LoadScenario("scenarios/tiny3.json");
  CHECK(t.n == 3);
}

TEST_CASE("json round trip reproduces the scenario") {
  for (const char* path : {"scenarios/reference20.json", "scenarios/tiny3.json"}) {
    const Scenario s = scenario::LoadScenario(path);
    const Scenario back = scenario::ScenarioFromJson(scenario::ScenarioToJson(s));
    CHECK(back == s);
    const auto tmp = std::filesystem::temp_directory_path() / "amrplan_rt.json";
    scenario::SaveScenario(s, tmp.string());
    CHECK(scenario::LoadScenario(tmp.string()) == s);
    std::filesystem::remove(tmp);
  }
}

TEST_CASE("baseline decision") {
  Json j = MinimalJson();
  j["v_bounds"] = {1.0, 2.0};
  j["c_bounds"] = {0.5, 2.0};
  const Scenario s = scenario::ScenarioFromJson(j);
  const auto base = scenario::BaselineDecision(s);
  CHECK(base.s_bar == 0.8);
  CHECK(base.v == 2.0);
  CHECK(base.c == 2.0);
  CHECK_FALSE(base.recourse.has_value());

  j["s_bounds"] = {0.3, 0.7};
  CHECK_THROWS_AS(scenario::BaselineDecision(scenario::ScenarioFromJson(j)),
                  ConfigError);
}

TEST_CASE("perturbation indexing touches exactly one task value") {
  const Scenario s = scenario::LoadScenario("scenarios/tiny3.json");
  for (int comp = 0; comp < 2 * s.n; ++comp) {
    std::vector<double> delta(2 * s.n, 0.0);
    delta[comp] = 0.25;
    const auto p = scenario::Perturb(s, delta);
    int changed = 0;
    for (int i = 0; i < s.n; ++i) {
      if (p.xi[i] != s.xi[i]) {
        ++changed;
        CHECK(comp == i);
      }
      if (p.d[i] != s.d[i]) {
        ++changed;
        CHECK(comp == s.n + i);
      }
    }
    CHECK(changed == 1);
  }
  CHECK_THROWS_AS(scenario::Perturb(s, std::vector<double>{1.0}), DomainError);
}

TEST_CASE("sampling: point masses give zero vectors") {
  scenario::UncertaintyModel m;
  m.components.assign(4, {});
  scenario::SetBoxPolytope(m);
  for (const auto& delta : scenario::SampleUncertainty(m, 20, 5)) {
    for (double v : delta) CHECK(v == 0.0);
  }
}

TEST_CASE("sampling: deterministic for a fixed seed") {
  const std::vector<double> xi = {1.0, 2.0};
  const std::vector<double> d = {3.0, 4.0};
  const auto m = scenario::BoxUncertainty(xi, d, 0.1, 0.2);
  CHECK(scenario::SampleUncertainty(m, 50, 9) == scenario::SampleUncertainty(m, 50, 9));
  CHECK(scenario::SampleUncertainty(m, 50, 9) != scenario::SampleUncertainty(m, 50, 10));
}

TEST_CASE("sampling: uniform box means shrink like 1/sqrt(count)") {
  scenario::UncertaintyModel m;
  m.components.assign(6, {scenario::DistributionKind::kUniform, -1.0, 1.0, 0.0, 0.0});
  scenario::SetBoxPolytope(m);
  const int count = 20000;
  const auto samples = scenario::SampleUncertainty(m, count, 123);
  for (int j = 0; j < m.dim(); ++j) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s[j];
    mean /= count;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(count)));
  }
}

TEST_CASE("sampling: all draws satisfy the polytope") {
  scenario::UncertaintyModel m;
  m.components.assign(3, {scenario::DistributionKind::kTruncatedNormal, -1.0, 1.0, 0.0, 0.5});
  m.polytope_u = DenseMatrix(1, 3);
  m.polytope_u(0, 0) = m.polytope_u(0, 1) = m.polytope_u(0, 2) = 1.0;
  m.polytope_t = {1.5};
  for (const auto& delta : scenario::SampleUncertainty(m, 500, 77)) {
    CHECK(m.Contains(delta, 1e-9));
    CHECK(delta[0] + delta[1] + delta[2] <= 1.5 + 1e-9);
  }
}

TEST_CASE("sampling: distribution outside its polytope is rejected") {
  scenario::UncertaintyModel m;
  m.components.assign(2, {scenario::DistributionKind::kUniform, 1.0, 2.0, 0.0, 0.0});
  m.polytope_u = DenseMatrix(1, 2);
  m.polytope_u(0, 0) = 1.0;
  m.polytope_t = {0.0};
  CHECK_THROWS_AS(m.Validate(), ValidationError);
  CHECK_THROWS_AS(scenario::SampleUncertainty(m, 10, 1), ConfigError);
}

TEST_CASE("decision json round trip") {
  scenario::Decision dec{0.55, 4.2, 0.9, std::nullopt};
  CHECK(scenario::DecisionFromJson(scenario::DecisionToJson(dec)) == dec);
  scenario::Recourse r{DenseMatrix(2, 4), DenseMatrix(2, 4), DenseMatrix(2, 4)};
  r.ws(1, 3) = 0.1;
  dec.recourse = r;
  CHECK(scenario::DecisionFromJson(scenario::DecisionToJson(dec)) == dec);
}
