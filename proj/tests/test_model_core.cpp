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

#include <algorithm>
#include <cmath>
#include <random>

#include "amrplan/errors.hpp"
#include "amrplan/model_core.hpp"
#include "amrplan/solver.hpp"
#include "doctest.h"
#include "scenario_gen.hpp"

using namespace amrplan;
using milp::Sense;

namespace {

battery::BatteryParams Fitted() {
  battery::BatteryParams p;
  battery::FitAndStore(p);
  return p;
}

// A model holding only (s_bar, tw) and one task's McCormick block.
struct Probe {
  milp::MilpModel model;
  core::CoreVariables vars;
  core::McCormickBlock block;
};

Probe McCormickProbe(int ns, int nt, scenario::Interval s_box,
                     scenario::Interval t_box) {
  Probe p;
  scenario::Scenario s;
  s.n = 1;
  s.s_bounds = s_box;
  s.tw_bounds = t_box;
  p.vars.s_bar = p.model.AddContinuous("s_bar", s_box.lo, s_box.hi, "probe");
  p.vars.tw.push_back(p.model.AddContinuous("tw_0", t_box.lo, t_box.hi, "probe"));
  core::McCormickConfig cfg;
  cfg.ns = ns;
  cfg.nt = nt;
  p.block = core::BuildMcCormick(p.model, s, p.vars, cfg);
  return p;
}

// Range of w the envelope admits at a fixed (x, y), optionally restricted to
// one cell.
std::pair<double, double> WRange(Probe probe, double x, double y, int cell = -1) {
  probe.model.SetBounds(probe.vars.s_bar, x, x);
  probe.model.SetBounds(probe.vars.tw[0], y, y);
  if (cell >= 0) {
    for (int l = 0; l < static_cast<int>(probe.block.z_vars[0].size()); ++l) {
      const double v = l == cell ? 1.0 : 0.0;
      probe.model.SetBounds(probe.block.z_vars[0][l], v, v);
    }
  }
  solver::SolveOptions opt;
  opt.gap_tol = 1e-12;
  const int w = probe.block.w_vars[0];
  milp::MilpModel lo = probe.model;
  lo.AddObjectiveTerm(w, 1.0);
  milp::MilpModel hi = probe.model;
  hi.AddObjectiveTerm(w, -1.0);
  const auto rl = solver::SolveMilp(lo, opt);
  const auto rh = solver::SolveMilp(hi, opt);
  REQUIRE(rl.status == solver::Status::kOptimal);
  REQUIRE(rh.status == solver::Status::kOptimal);
  return {rl.objective, -rh.objective};
}

double MaxGap(int ns, int nt, scenario::Interval s_box, scenario::Interval t_box) {
  const Probe probe = McCormickProbe(ns, nt, s_box, t_box);
  double worst = 0.0;
  for (const auto& cb : probe.block.cells) {
    const double x = 0.5 * (cb.s_lo + cb.s_hi);
    const double y = 0.5 * (cb.t_lo + cb.t_hi);
    const auto [lo, hi] = WRange(probe, x, y);
    worst = std::max({worst, hi - x * y, x * y - lo});
  }
  return worst;
}

}  // namespace

TEST_CASE("travel time linearization") {
  const auto f = core::LinearizeTravelTime(10.0, 2.0);
  CHECK(f(2.0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(f(4.0) == doctest::Approx(0.0));
  CHECK(core::LinearizeTravelTime(10.0, 1.0)(1.2) == doctest::Approx(8.0));
  const double exact = 10.0 / 1.2;
  const double err = exact - core::LinearizeTravelTime(10.0, 1.0)(1.2);
  CHECK(err > 0.0);
  CHECK(err <= 10.0 * 0.2 * 0.2 / (1.0 * 1.0 * 1.0) + 1e-12);
  CHECK_THROWS_AS(core::LinearizeTravelTime(10.0, 0.0), DomainError);
  CHECK_THROWS_AS(core::LinearizeTravelTime(0.0, 1.0), DomainError);
}

TEST_CASE("charge time linearization") {
  const auto f = core::LinearizeChargeTime(100.0, 1.0, 0.01);
  CHECK(f(1.0) == doctest::Approx(1.0));
  CHECK(f(2.0) == doctest::Approx(0.0));
  CHECK(f(0.8) == doctest::Approx(1.2));
  CHECK_THROWS_AS(core::LinearizeChargeTime(100.0, -1.0, 0.01), DomainError);
}

TEST_CASE("cells tile the box exactly") {
  const auto cells = core::TileCells({0.3, 1.0}, {0.0, 4.0}, 4, 4);
  REQUIRE(cells.size() == 16);
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < 4; ++k) {
      const auto& cb = cells[j * 4 + k];
      CHECK(cb.s_lo == doctest::Approx(0.3 + 0.7 * j / 4.0));
      CHECK(cb.s_hi == doctest::Approx(0.3 + 0.7 * (j + 1) / 4.0));
      CHECK(cb.t_lo == doctest::Approx(k * 1.0));
      CHECK(cb.t_hi == doctest::Approx((k + 1) * 1.0));
    }
  }
  CHECK(cells.back().s_hi == 1.0);
  CHECK(cells.back().t_hi == 4.0);
}

TEST_CASE("schedule: single task has no recursion rows") {
  auto s = scenario::ScenarioFromJson({{"n", 1}, {"xi", {2.0}}, {"d", {1.0}}});
  milp::MilpModel m;
  const auto vars = core::AddCoreVariables(m, s, 0.1);
  core::BuildScheduleConstraints(m, s, 0.1, vars);
  const auto counts = m.RowCountsByTag();
  CHECK(counts.at(core::tags::kScheduleEpigraph) == 2);  // dt_0 = 0, tw_0 = 0
  CHECK(counts.at(core::tags::kSocBudget) == 1);
  CHECK(counts.at(core::tags::kTravelTime) == 1);
  CHECK(counts.at(core::tags::kChargeTime) == 1);
}

TEST_CASE("schedule: epigraph split in the slack and overload cases") {
  // t = 40/5 = 8 and tc = 0.01*40/0.2 = 2 at the nominal points.
  for (const auto& [xi0, dt1, tw1] : {std::tuple{15.0, 0.0, 5.0},
                                      std::tuple{8.0, 2.0, 0.0}}) {
    auto s = scenario::ScenarioFromJson({{"n", 2},
                                         {"xi", {xi0, 20.0}},
                                         {"d", {40.0, 1.0}},
                                         {"v_bounds", {4.0, 6.0}},
                                         {"c_bounds", {0.1, 0.3}}});
    milp::MilpModel m;
    const auto vars = core::AddCoreVariables(m, s, 0.01);
    core::BuildScheduleConstraints(m, s, 0.01, vars);
    m.SetBounds(vars.v, 5.0, 5.0);
    m.SetBounds(vars.c, 0.2, 0.2);
    for (int i = 0; i < 2; ++i) {
      m.AddObjectiveTerm(vars.dt[i], 1.0);
      m.AddObjectiveTerm(vars.tw[i], 0.01);
    }
    const auto r = solver::SolveLp(m);
    REQUIRE(r.status == solver::Status::kOptimal);
    CHECK(r.x[vars.t[0]] + r.x[vars.tc[0]] == doctest::Approx(10.0));
    CHECK(r.x[vars.dt[0]] == 0.0);
    CHECK(r.x[vars.dt[1]] == doctest::Approx(dt1));
    CHECK(r.x[vars.tw[1]] == doctest::Approx(tw1));
  }
}

TEST_CASE("mccormick: single cell is exact at the box corner") {
  const Probe probe = McCormickProbe(1, 1, {0.3, 1.0}, {0.0, 4.0});
  const auto [lo, hi] = WRange(probe, 1.0, 4.0);
  CHECK(lo == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(hi == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("mccormick: unit cell gap at the center is a quarter of the area") {
  const Probe probe = McCormickProbe(1, 1, {0.0, 1.0}, {0.0, 10.0});
  const auto [lo, hi] = WRange(probe, 0.5, 5.0);
  CHECK(lo <= 2.5);
  CHECK(hi >= 2.5);
  CHECK(std::max(hi - 2.5, 2.5 - lo) == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("mccormick: every cell is exact at its corners") {
  const Probe probe = McCormickProbe(4, 4, {0.3, 1.0}, {0.0, 4.0});
  for (int l = 0; l < 16; ++l) {
    const auto& cb = probe.block.cells[l];
    for (double x : {cb.s_lo, cb.s_hi}) {
      for (double y : {cb.t_lo, cb.t_hi}) {
        const auto [lo, hi] = WRange(probe, x, y, l);
        CHECK(std::abs(lo - x * y) <= 1e-9);
        CHECK(std::abs(hi - x * y) <= 1e-9);
      }
    }
  }
}

TEST_CASE("mccormick: measured gap within each cell is bounded") {
  const Probe probe = McCormickProbe(2, 3, {0.3, 1.0}, {0.0, 4.0});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int l = 0; l < 6; ++l) {
    const auto& cb = probe.block.cells[l];
    for (int rep = 0; rep < 4; ++rep) {
      const double x = cb.s_lo + (cb.s_hi - cb.s_lo) * (rep == 0 ? 0.5 : u(rng));
      const double y = cb.t_lo + (cb.t_hi - cb.t_lo) * (rep == 0 ? 0.5 : u(rng));
      const auto [lo, hi] = WRange(probe, x, y, l);
      CHECK(lo <= x * y + 1e-9);
      CHECK(hi >= x * y - 1e-9);
      CHECK(hi - x * y <= cb.gap() + 1e-9);
      CHECK(x * y - lo <= cb.gap() + 1e-9);
    }
  }
}

TEST_CASE("mccormick: refinement shrinks the worst gap") {
  const scenario::Interval sb{0.0, 1.0}, tb{0.0, 10.0};
  const double g1 = MaxGap(1, 1, sb, tb);
  const double g4 = MaxGap(2, 2, sb, tb);
  const double g16 = MaxGap(4, 4, sb, tb);
  CHECK(g1 == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(g4 == doctest::Approx(0.625).epsilon(1e-9));
  CHECK(g16 == doctest::Approx(0.15625).epsilon(1e-9));
  CHECK(g4 < g1);
  CHECK(g16 < g4);
}

TEST_CASE("mccormick: a too small big-M is rejected") {
  auto s = scenario::LoadScenario("scenarios/tiny3.json");
  core::McCormickConfig cfg;
  cfg.big_m = 1e-3;
  CHECK_THROWS_AS(core::AssembleDeterministic(s, Fitted(), cfg), ConfigError);
  cfg.big_m = 100.0;
  const auto pm = core::AssembleDeterministic(s, Fitted(), cfg);
  CHECK(pm.mccormick.big_m == 100.0);
}

TEST_CASE("assemble: tiny3 variable counts") {
  const auto s = scenario::LoadScenario("scenarios/tiny3.json");
  const core::McCormickConfig cfg;
  const auto pm = core::AssembleDeterministic(s, Fitted(), cfg);
  const auto& m = pm.model;
  int w = 0, z = 0, sched = 0, decision = 0;
  for (int j = 0; j < m.num_variables(); ++j) {
    const std::string& tag = m.column_tag(j);
    if (tag == core::tags::kProduct) ++w;
    if (tag == core::tags::kCell) ++z;
    if (tag == core::tags::kTimeBox) ++sched;
    if (tag == core::tags::kControlBox) ++decision;
  }
  CHECK(w == 3);
  CHECK(z == 3 * cfg.ns * cfg.nt);
  CHECK(sched == 4 * 3);
  CHECK(decision == 3);
  CHECK(m.num_variables() == w + z + sched + decision);
  CHECK(m.num_binaries() == z);
}

TEST_CASE("assemble: every row carries a known tag") {
  for (const char* path : {"scenarios/tiny3.json", "scenarios/reference20.json"}) {
    const auto pm = core::AssembleDeterministic(scenario::LoadScenario(path),
                                                Fitted(), {});
    CHECK(pm.model.UnannotatedRows(core::DeterministicRowTags()).empty());
  }
}

TEST_CASE("assemble: null objective weights give a zero optimum") {
  auto s = scenario::LoadScenario("scenarios/tiny3.json");
  s.lambda = 0.0;
  battery::BatteryParams p;
  p.kc = 0.0;
  p.ks = 0.0;
  const auto pm = core::AssembleDeterministic(s, p, {});
  const auto r = solver::SolveMilp(pm.model);
  REQUIRE(r.status == solver::Status::kOptimal);
  CHECK(std::abs(r.objective) <= 1e-12);
  CHECK(pm.model.MaxViolation(r.x) <= 1e-7);
}

TEST_CASE("assemble: negative coefficients are rejected") {
  battery::BatteryParams p;
  p.kc = -1.0;
  CHECK_THROWS_AS(core::AssembleDeterministic(
                      scenario::LoadScenario("scenarios/tiny3.json"), p, {}),
                  ConfigError);
}

TEST_CASE("assemble: charging cost routes agree on the feasible set") {
  const auto s = scenario::LoadScenario("scenarios/tiny3.json");
  core::McCormickConfig taylor;
  core::McCormickConfig constant;
  constant.charging_cost = core::ChargingCost::kConstant;
  const auto a = solver::SolveMilp(core::AssembleDeterministic(s, Fitted(), taylor).model);
  const auto b = solver::SolveMilp(core::AssembleDeterministic(s, Fitted(), constant).model);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));
}

TEST_CASE("assemble: taylor substitution is exact at the nominal point") {
  const auto s = scenario::LoadScenario("scenarios/reference20.json");
  const auto params = Fitted();
  auto pm = core::AssembleDeterministic(s, params, {});
  pm.model.SetBounds(pm.vars.v, s.v_hat, s.v_hat);
  pm.model.SetBounds(pm.vars.c, s.c_hat, s.c_hat);
  const auto r = solver::SolveLp(pm.model);
  REQUIRE(r.status == solver::Status::kOptimal);
  for (int i = 0; i < s.n; ++i) {
    CHECK(r.x[pm.vars.t[i]] == doctest::Approx(s.d[i] / s.v_hat).epsilon(1e-12));
    CHECK(r.x[pm.vars.tc[i]] ==
          doctest::Approx(params.kv * s.d[i] / s.c_hat).epsilon(1e-12));
  }
}

TEST_CASE("assemble: reference optimum keeps the target SOC below baseline") {
  const auto s = scenario::LoadScenario("scenarios/reference20.json");
  const auto pm = core::AssembleDeterministic(s, Fitted(), {});
  const auto r = solver::SolveMilp(pm.model);
  REQUIRE(r.status == solver::Status::kOptimal);
  const auto dec = core::ExtractDecision(pm.vars, r.x);
  MESSAGE("reference20 optimal target SOC " << dec.s_bar);
  CHECK(dec.s_bar < 0.8);
  CHECK(pm.model.MaxViolation(r.x) <= 1e-6);
}

TEST_CASE("epigraph: optimal schedule matches the max recursion") {
  const auto params = Fitted();
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    const auto s = testgen::RandomScenario(seed);
    const auto pm = core::AssembleDeterministic(s, params, {});
    const auto r = solver::SolveMilp(pm.model);
    REQUIRE(r.status == solver::Status::kOptimal);
    const auto& v = pm.vars;
    double dt = 0.0;
    for (int i = 0; i < s.n; ++i) {
      if (i > 0) {
        const double over =
            dt + r.x[v.t[i - 1]] + r.x[v.tc[i - 1]] - s.xi[i - 1];
        const double dt_next = std::max(0.0, over);
        const double tw_next = std::max(0.0, -over);
        CHECK(std::abs(r.x[v.dt[i]] - r.x[v.tw[i]] -
                       (r.x[v.dt[i - 1]] + r.x[v.t[i - 1]] + r.x[v.tc[i - 1]] -
                        s.xi[i - 1])) <= 1e-8);
        CHECK(std::abs(r.x[v.dt[i]] - dt_next) <= 1e-6);
        CHECK(std::abs(r.x[v.tw[i]] - tw_next) <= 1e-6);
        dt = dt_next;
      }
      CHECK(std::min(r.x[v.dt[i]], r.x[v.tw[i]]) <= 1e-6);
    }
  }
}
