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

// Acceptance run: one PASS / FAIL line per criterion, with the measured
// values. Exit status is nonzero if any criterion fails.
//
// Run from the repository root (scenario and config paths are relative).

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "amrplan/battery.hpp"
#include "amrplan/evaluate.hpp"
#include "amrplan/model_core.hpp"
#include "amrplan/robust.hpp"
#include "amrplan/scenario.hpp"
#include "amrplan/solver.hpp"
#include "fmt/core.h"
#include "generators.hpp"
#include "oracles.hpp"
#include "scenario_gen.hpp"

namespace fs = std::filesystem;
using namespace amrplan;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

battery::BatteryParams Params() {
  return battery::LoadParams("config/battery_default.json");
}

solver::SolveResult Solve(const milp::MilpModel& m, double gap = 1e-6) {
  solver::SolveOptions opt;
  opt.gap_tol = gap;
  opt.threads = 4;
  auto r = solver::SolveMilp(m, opt);
  if (r.status != solver::Status::kOptimal) {
    throw std::runtime_error(std::string("solve ended ") + solver::StatusName(r.status));
  }
  return r;
}

Outcome Criterion1() {
  const Stopwatch sw;
  const auto s = scenario::LoadScenario("scenarios/reference20.json");
  const auto p = Params();
  const auto pm = core::AssembleDeterministic(s, p, {});
  const auto r = Solve(pm.model);
  const auto d = core::ExtractDecision(pm.vars, r.x);
  const auto mine = evaluate::SimulateSchedule(s, p, d);
  const auto base = evaluate::SimulateSchedule(s, p, scenario::BaselineDecision(s));
  const double secs = sw.Seconds();
  const double red = 100.0 * (base.calendar - mine.calendar) / base.calendar;
  const bool ok = d.s_bar < 0.8 && mine.calendar < base.calendar && red > 30.0 &&
                  secs < 60.0;
  return {ok, fmt::format("S={:.4f} v={:.3f} c={:.3f}; calendar {:.6f} vs baseline "
                          "{:.6f} ({:.1f}% reduction); added waiting {:.4f} h; {:.2f} s",
                          d.s_bar, d.v, d.c, mine.calendar, base.calendar, red,
                          mine.waiting - base.waiting, secs)};
}

Outcome Criterion2() {
  const Stopwatch sw;
  const auto s = scenario::LoadScenario("scenarios/tiny3.json");
  const auto p = Params();
  const auto pm = core::AssembleDeterministic(s, p, {});
  const auto r = Solve(pm.model);
  const auto d = core::ExtractDecision(pm.vars, r.x);
  const double truth = evaluate::SimulateSchedule(s, p, d).objective;
  const auto g = evaluate::GridOracle(s, p, 50);
  const double secs = sw.Seconds();
  const double rel = (truth - g.objective) / std::abs(g.objective);
  const bool ok = g.feasible && rel <= 0.02 && secs < 300.0;
  return {ok, fmt::format("model decision true objective {:.9f}, grid-50 best {:.9f} "
                          "({} points), relative excess {:.3e}; {:.2f} s",
                          truth, g.objective, g.evaluated, rel, secs)};
}

Outcome Criterion3() {
  const auto s = scenario::LoadScenario("scenarios/reference20.json");
  const auto p = Params();
  auto cfg = robust::ConfigFromScenario(s);
  cfg.epsilon = 0.02;
  cfg.k_samples = 100;
  const auto rm = robust::AssembleRobust(s, p, {}, cfg);
  const auto r = Solve(rm.core.model);
  int worst = 0;
  bool budget_ok = rm.budget == 2;
  for (const auto& a : robust::AuditChanceConstraints(rm, r.x)) {
    worst = std::max(worst, a.violated);
    budget_ok = budget_ok && a.within_budget && a.consistent && a.violated <= 2;
  }
  const auto d = robust::ExtractDecision(rm, r.x);
  const int m = 10000;
  const auto mc = evaluate::MonteCarloValidate(s, p, d, m, s.uncertainty->seed);
  const double limit = 0.02 + 3.0 * std::sqrt(0.02 * 0.98 / m);
  int within = 0;
  double max_freq = 0.0;
  for (double f : mc.violation_freq) {
    within += f <= limit;
    max_freq = std::max(max_freq, f);
  }
  const double share = static_cast<double>(within) / s.n;
  return {budget_ok && share >= 0.9,
          fmt::format("budget {} and max sampled violations per row family {}; "
                      "{}/{} tasks at or below {:.4f} out of sample (max {:.4f}); S={:.4f}",
                      rm.budget, worst, within, s.n, limit, max_freq, d.s_bar)};
}

Outcome Criterion4() {
  const auto p = Params();
  std::string detail;
  bool ok = true;
  for (const char* path : {"scenarios/tiny3.json", "scenarios/reference20.json"}) {
    auto s = scenario::LoadScenario(path);
    scenario::UncertaintyModel u;
    u.components.assign(2 * s.n, {});
    scenario::SetBoxPolytope(u);
    s.uncertainty = u;
    s.beta.assign(2 * s.n, 0.0);
    const double det = Solve(core::AssembleDeterministic(s, p, {}).model, 1e-9).objective;
    robust::RobustConfig cfg;
    cfg.recourse = robust::RecourseMode::kFixed;  // zero gains
    const double rob = Solve(robust::AssembleRobust(s, p, {}, cfg).core.model, 1e-9).objective;
    const double rel = std::abs(rob - det) / std::max(1e-12, std::abs(det));
    ok = ok && rel <= 1e-6;
    detail += fmt::format("{}: {:.9f} vs {:.9f} (rel {:.1e}); ",
                          fs::path(path).stem().string(), rob, det, rel);
  }
  return {ok, detail};
}

Outcome Criterion5() {
  const auto p = Params();
  auto s = scenario::LoadScenario("scenarios/reference20.json");
  const uint64_t seed = s.uncertainty->seed;
  double prev_obj = -1e300, prev_s = -1e300;
  bool ok = true;
  std::string detail;
  for (double rel : {0.05, 0.10, 0.15}) {
    s.uncertainty = scenario::BoxUncertainty(s.xi, s.d, rel, rel);
    s.uncertainty->seed = seed;
    const auto rm = robust::AssembleRobust(s, p, {}, robust::ConfigFromScenario(s));
    const auto r = Solve(rm.core.model);
    const double sb = r.x[rm.core.vars.s_bar];
    ok = ok && r.objective >= prev_obj - 1e-9 && sb >= prev_s - 1e-9;
    detail += fmt::format("width {:.2f}: obj {:.6f} S {:.4f}; ", rel, r.objective, sb);
    prev_obj = r.objective;
    prev_s = sb;
  }
  return {ok, detail};
}

// Feasible range of w at fixed (x, y), optionally inside one cell.
std::pair<double, double> EnvelopeRange(const core::McCormickBlock& block,
                                        milp::MilpModel model, int xs, int ys,
                                        double x, double y, int cell) {
  model.SetBounds(xs, x, x);
  model.SetBounds(ys, y, y);
  if (cell >= 0) {
    for (int l = 0; l < static_cast<int>(block.z_vars[0].size()); ++l) {
      const double v = l == cell ? 1.0 : 0.0;
      model.SetBounds(block.z_vars[0][l], v, v);
    }
  }
  const int w = block.w_vars[0];
  milp::MilpModel lo = model, hi = model;
  lo.AddObjectiveTerm(w, 1.0);
  hi.AddObjectiveTerm(w, -1.0);
  return {Solve(lo, 1e-12).objective, -Solve(hi, 1e-12).objective};
}

Outcome Criterion6() {
  const scenario::Interval sb{0.3, 1.0}, tb{0.0, 4.0};
  struct Probe {
    milp::MilpModel model;
    core::CoreVariables vars;
    core::McCormickBlock block;
  };
  auto make = [&](int ns, int nt) {
    Probe p;
    scenario::Scenario s;
    s.n = 1;
    s.s_bounds = sb;
    s.tw_bounds = tb;
    p.vars.s_bar = p.model.AddContinuous("s_bar", sb.lo, sb.hi, "probe");
    p.vars.tw.push_back(p.model.AddContinuous("tw_0", tb.lo, tb.hi, "probe"));
    core::McCormickConfig cfg;
    cfg.ns = ns;
    cfg.nt = nt;
    p.block = core::BuildMcCormick(p.model, s, p.vars, cfg);
    return p;
  };
  auto range = [](const Probe& p, double x, double y, int cell) {
    return EnvelopeRange(p.block, p.model, p.vars.s_bar, p.vars.tw[0], x, y, cell);
  };

  // (a) corners and (b) the per-cell gap on a 4 x 4 tiling.
  const Probe p4 = make(4, 4);
  double corner_err = 0.0, excess = -1e300;
  for (int l = 0; l < 16; ++l) {
    const auto& cb = p4.block.cells[l];
    for (double x : {cb.s_lo, cb.s_hi}) {
      for (double y : {cb.t_lo, cb.t_hi}) {
        const auto [lo, hi] = range(p4, x, y, l);
        corner_err = std::max({corner_err, std::abs(lo - x * y), std::abs(hi - x * y)});
      }
    }
    for (double fx : {0.25, 0.5, 0.75}) {
      for (double fy : {0.25, 0.5, 0.75}) {
        const double x = cb.s_lo + fx * (cb.s_hi - cb.s_lo);
        const double y = cb.t_lo + fy * (cb.t_hi - cb.t_lo);
        const auto [lo, hi] = range(p4, x, y, l);
        excess = std::max({excess, hi - x * y - cb.gap(), x * y - lo - cb.gap()});
      }
    }
  }
  // (c) worst gap at the cell centers for 1, 4 and 16 cells.
  std::vector<double> worst;
  for (int k : {1, 2, 4}) {
    const Probe p = make(k, k);
    double g = 0.0;
    for (const auto& cb : p.block.cells) {
      const double x = 0.5 * (cb.s_lo + cb.s_hi), y = 0.5 * (cb.t_lo + cb.t_hi);
      const auto [lo, hi] = range(p, x, y, -1);
      g = std::max({g, hi - x * y, x * y - lo});
    }
    worst.push_back(g);
  }
  const bool ok = corner_err <= 1e-9 && excess <= 1e-9 && worst[1] < worst[0] &&
                  worst[2] < worst[1];
  return {ok, fmt::format("corner error {:.1e}; max gap minus bound {:.1e}; center gap "
                          "1/4/16 cells {:.6f} / {:.6f} / {:.6f}",
                          corner_err, excess, worst[0], worst[1], worst[2])};
}

Outcome Criterion7() {
  int lp_ok = 0, mip_ok = 0;
  bool bound_ok = true;
  double lp_err = 0.0;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    const auto model = testgen::RandomLp(seed);
    const auto ours = solver::SolveLp(model);
    const auto ref = oracle::OracleLp(model);
    if (!ref || ours.status != solver::Status::kOptimal) continue;
    const double err = std::abs(ours.objective - *ref) / std::max(1.0, std::abs(*ref));
    lp_err = std::max(lp_err, err);
    lp_ok += err <= 1e-6;
  }
  solver::SolveOptions opt;
  opt.gap_tol = 1e-9;
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    const int nb = 4 + static_cast<int>(seed % 9);
    const auto model = testgen::RandomMilp(seed, nb);
    const auto ref = oracle::OracleMilp(model);
    const auto r = solver::SolveMilp(model, opt);
    if (!ref || r.status != solver::Status::kOptimal) continue;
    mip_ok += std::abs(r.objective - *ref) <= 1e-7 * std::max(1.0, std::abs(*ref));
    for (const auto& [bound, incumbent] : r.progress) {
      bound_ok = bound_ok && bound <= incumbent + 1e-9;
    }
  }
  return {lp_ok == 100 && mip_ok == 25 && bound_ok,
          fmt::format("LP {}/100 (max rel err {:.1e}); MILP {}/25 vs enumeration; "
                      "bound <= incumbent throughout: {}",
                      lp_ok, lp_err, mip_ok, bound_ok ? "yes" : "no")};
}

Outcome Criterion8() {
  const battery::BatteryParams p;
  double worst = 0.0;
  for (double soc : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (double dur : {1.0, 10.0, 100.0, 1000.0, 5000.0}) {
      const double closed = battery::IntegrateCalendarLoss(p, p.t_ref, soc, 0.0, dur);
      const double rk4 = oracle::Rk4CalendarLoss(p, p.t_ref, soc, 0.0, dur);
      worst = std::max(worst, std::abs(closed - rk4) / std::abs(rk4));
    }
  }
  double lin = 0.0;
  for (double q : {0.5, 3.0, 1000.0}) {
    const double one = battery::CyclingDegradation(p, {0.2, 0.4, 1.0});
    lin = std::max(lin, std::abs(battery::CyclingDegradation(p, {0.2, 0.4, q}) - q * one) /
                            (q * one));
  }
  const double zero_dev = std::abs(battery::CyclingDegradation(p, {0.0, 0.7, 2.0}) -
                                   2.0 * p.k3);
  const bool ok = worst <= 1e-6 && lin <= 1e-12 && zero_dev <= 1e-18;
  return {ok, fmt::format("calendar vs RK4 max rel {:.1e} on 5x5; q-linearity {:.1e}; "
                          "zero-deviation error {:.1e}",
                          worst, lin, zero_dev)};
}

Outcome Criterion9() {
  const auto p = Params();
  double worst = 0.0, comp = 0.0;
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    const auto s = testgen::RandomScenario(seed);
    const auto pm = core::AssembleDeterministic(s, p, {});
    const auto r = Solve(pm.model);
    const auto& v = pm.vars;
    double dt = 0.0;
    for (int i = 0; i < s.n; ++i) {
      double tw = 0.0;
      if (i > 0) {
        const double over = dt + r.x[v.t[i - 1]] + r.x[v.tc[i - 1]] - s.xi[i - 1];
        dt = std::max(0.0, over);
        tw = std::max(0.0, -over);
      }
      worst = std::max({worst, std::abs(r.x[v.dt[i]] - dt), std::abs(r.x[v.tw[i]] - tw)});
      comp = std::max(comp, std::min(r.x[v.dt[i]], r.x[v.tw[i]]));
    }
  }
  return {worst <= 1e-6 && comp <= 1e-6,
          fmt::format("50 solves: max |epigraph - recursion| {:.1e}, max min(dt, tw) {:.1e}",
                      worst, comp)};
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome Criterion10() {
  const fs::path dir = fs::temp_directory_path() /
                       ("amrplan_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  std::vector<double> secs;
  for (const char* tag : {"a", "b"}) {
    const std::string cmd =
        std::string(AMRPLAN_CLI) +
        " plan-robust --scenario scenarios/reference20.json --epsilon 0.02 --samples 50"
        " --seed 11 --threads 4 --out " + (dir / tag).string() + " >/dev/null 2>&1";
    const Stopwatch sw;
    const int rc = std::system(cmd.c_str());
    secs.push_back(sw.Seconds());
    if (rc == -1 || !WIFEXITED(rc) || WEXITSTATUS(rc) != 0) {
      return {false, fmt::format("plan-robust exited with status {}", rc)};
    }
  }
  bool same = true;
  for (const char* f : {"decision.json", "report.csv", "summary.json"}) {
    same = same && Slurp(dir / "a" / f) == Slurp(dir / "b" / f);
  }
  fs::remove_all(dir);
  return {same && secs[0] < 300.0 && secs[1] < 300.0,
          fmt::format("artifacts byte-identical: {}; reference20 K=50 runs {:.2f} s / {:.2f} s",
                      same ? "yes" : "no", secs[0], secs[1])};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"deterministic optimum beats the baseline", Criterion1},
      {"grid-oracle agreement on tiny3", Criterion2},
      {"chance-constraint budget", Criterion3},
      {"robust reduction identity", Criterion4},
      {"uncertainty monotonicity", Criterion5},
      {"McCormick envelope properties", Criterion6},
      {"solver correctness", Criterion7},
      {"battery model numerics", Criterion8},
      {"epigraph equals recursion", Criterion9},
      {"end-to-end reproducibility", Criterion10},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const Stopwatch sw;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, o.detail.c_str(), sw.Seconds());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
