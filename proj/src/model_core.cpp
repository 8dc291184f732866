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

#include "amrplan/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "amrplan/errors.hpp"

namespace amrplan::core {
namespace {

using milp::Sense;
using milp::Term;
using scenario::Interval;

std::string Idx(const char* base, int i) {
  return std::string(base) + "_" + std::to_string(i);
}

std::string Idx2(const char* base, int i, int l) {
  return std::string(base) + "_" + std::to_string(i) + "_" +
         std::to_string(l);
}

// max over the corners of `box_x` x `box_y` of sign * (x - a) * (y - b).
double CornerMax(const Interval& box_x, const Interval& box_y, double a,
                 double b, double sign) {
  double best = -milp::kInf;
  for (double x : {box_x.lo, box_x.hi}) {
    for (double y : {box_y.lo, box_y.hi}) {
      best = std::max(best, sign * (x - a) * (y - b));
    }
  }
  return best;
}

}  // namespace

const std::set<std::string>& DeterministicRowTags() {
  static const std::set<std::string> kTags = {
      tags::kSocBudget, tags::kScheduleEpigraph, tags::kTravelTime,
      tags::kChargeTime, tags::kEnvelope,        tags::kLinking,
      tags::kSelection};
  return kTags;
}

AffineMap LinearizeTravelTime(double d, double v_hat) {
  if (!(v_hat > 0.0)) throw DomainError("v_hat must be positive");
  if (!(d > 0.0)) throw DomainError("distance must be positive");
  return AffineMap{-d / (v_hat * v_hat), 2.0 * d / v_hat};
}

AffineMap LinearizeChargeTime(double d, double c_hat, double kv) {
  if (!(c_hat > 0.0)) throw DomainError("c_hat must be positive");
  const double soc = kv * d;
  return AffineMap{-soc / (c_hat * c_hat), 2.0 * soc / c_hat};
}

std::vector<CellBounds> TileCells(const Interval& s_box,
                                  const Interval& tw_box, int ns, int nt) {
  if (ns < 1 || nt < 1) throw ConfigError("ns and nt must be at least 1");
  std::vector<CellBounds> cells;
  cells.reserve(static_cast<size_t>(ns) * nt);
  auto edge = [](const Interval& box, int j, int count) {
    if (j == count) return box.hi;
    return box.lo + box.width() * j / count;
  };
  for (int j = 0; j < ns; ++j) {
    for (int k = 0; k < nt; ++k) {
      cells.push_back(CellBounds{edge(s_box, j, ns), edge(s_box, j + 1, ns),
                                 edge(tw_box, k, nt), edge(tw_box, k + 1, nt)});
    }
  }
  return cells;
}

std::vector<std::array<double, kEnvelopeRowsPerCell>> AnalyticEnvelopeM(
    const Interval& s_box, const Interval& tw_box,
    const std::vector<CellBounds>& cells) {
  double gap = 0.0;
  for (const auto& cell : cells) gap = std::max(gap, cell.gap());
  std::vector<std::array<double, kEnvelopeRowsPerCell>> out;
  out.reserve(cells.size());
  for (const auto& cell : cells) {
    out.push_back({
        CornerMax(s_box, tw_box, cell.s_lo, cell.t_lo, -1.0) + gap,
        CornerMax(s_box, tw_box, cell.s_hi, cell.t_hi, -1.0) + gap,
        CornerMax(s_box, tw_box, cell.s_hi, cell.t_lo, 1.0) + gap,
        CornerMax(s_box, tw_box, cell.s_lo, cell.t_hi, 1.0) + gap,
    });
  }
  return out;
}

std::vector<double> LatenessBounds(const scenario::Scenario& s, double kv,
                                   const std::vector<double>& extra) {
  std::vector<double> bound(s.n, 0.0);
  for (int i = 0; i + 1 < s.n; ++i) {
    const double t_max = std::clamp(
        LinearizeTravelTime(s.d[i], s.v_hat)(s.v_bounds.lo), s.t_bounds.lo,
        s.t_bounds.hi);
    const double tc_max = std::clamp(
        LinearizeChargeTime(s.d[i], s.c_hat, kv)(s.c_bounds.lo),
        s.tc_bounds.lo, s.tc_bounds.hi);
    const double more = extra.empty() ? 0.0 : extra[i];
    bound[i + 1] = std::max(0.0, bound[i] + t_max + tc_max - s.xi[i] + more);
  }
  return bound;
}

CoreVariables AddCoreVariables(milp::MilpModel& model,
                               const scenario::Scenario& s, double kv) {
  CoreVariables vars;
  vars.s_bar = model.AddContinuous("s_bar", s.s_bounds.lo, s.s_bounds.hi,
                                   tags::kControlBox);
  vars.v = model.AddContinuous("v", s.v_bounds.lo, s.v_bounds.hi,
                               tags::kControlBox);
  vars.c = model.AddContinuous("c", s.c_bounds.lo, s.c_bounds.hi,
                               tags::kControlBox);
  const std::vector<double> late = LatenessBounds(s, kv, {});
  for (int i = 0; i < s.n; ++i) {
    vars.t.push_back(model.AddContinuous(Idx("t", i), s.t_bounds.lo,
                                         s.t_bounds.hi, tags::kTimeBox));
    vars.tc.push_back(model.AddContinuous(Idx("tc", i), s.tc_bounds.lo,
                                          s.tc_bounds.hi, tags::kTimeBox));
    vars.tw.push_back(model.AddContinuous(Idx("tw", i), s.tw_bounds.lo,
                                          s.tw_bounds.hi, tags::kTimeBox));
    vars.dt.push_back(
        model.AddContinuous(Idx("dt", i), 0.0, late[i], tags::kTimeBox));
  }
  return vars;
}

void BuildScheduleConstraints(milp::MilpModel& model,
                              const scenario::Scenario& s, double kv,
                              const CoreVariables& vars) {
  for (int i = 0; i < s.n; ++i) {
    model.AddRow(Idx("soc", i), {{vars.s_bar, 1.0}}, Sense::kGreaterEqual,
                 s.s_lower + kv * s.d[i], tags::kSocBudget);
  }
  model.AddRow("start_dt", {{vars.dt[0], 1.0}}, Sense::kEqual, 0.0,
               tags::kScheduleEpigraph);
  model.AddRow("start_tw", {{vars.tw[0], 1.0}}, Sense::kEqual, 0.0,
               tags::kScheduleEpigraph);
  for (int i = 0; i + 1 < s.n; ++i) {
    model.AddRow(Idx("recursion", i + 1),
                 {{vars.dt[i + 1], 1.0},
                  {vars.tw[i + 1], -1.0},
                  {vars.dt[i], -1.0},
                  {vars.t[i], -1.0},
                  {vars.tc[i], -1.0}},
                 Sense::kEqual, -s.xi[i], tags::kScheduleEpigraph);
  }
  for (int i = 0; i < s.n; ++i) {
    const AffineMap travel = LinearizeTravelTime(s.d[i], s.v_hat);
    model.AddRow(Idx("travel", i), {{vars.t[i], 1.0}, {vars.v, -travel.slope}},
                 Sense::kEqual, travel.intercept, tags::kTravelTime);
    const AffineMap charge = LinearizeChargeTime(s.d[i], s.c_hat, kv);
    model.AddRow(Idx("charge", i), {{vars.tc[i], 1.0}, {vars.c, -charge.slope}},
                 Sense::kEqual, charge.intercept, tags::kChargeTime);
  }
}

McCormickBlock BuildMcCormick(milp::MilpModel& model,
                              const scenario::Scenario& s,
                              const CoreVariables& vars,
                              const McCormickConfig& config) {
  McCormickBlock block;
  block.ns = config.ns;
  block.nt = config.nt;
  block.cells = TileCells(s.s_bounds, s.tw_bounds, config.ns, config.nt);
  block.cell_m = AnalyticEnvelopeM(s.s_bounds, s.tw_bounds, block.cells);
  double required = 0.0;
  for (const auto& ms : block.cell_m) {
    for (double m : ms) required = std::max(required, m);
  }
  if (config.big_m) {
    if (!(*config.big_m > 0.0)) throw ConfigError("big_m must be positive");
    if (*config.big_m < required) {
      throw ConfigError("big_m " + std::to_string(*config.big_m) +
                        " is smaller than the largest envelope violation " +
                        std::to_string(required));
    }
    for (auto& ms : block.cell_m) ms.fill(*config.big_m);
    block.big_m = *config.big_m;
  } else {
    // Small safety factor over the analytic bound.
    for (auto& ms : block.cell_m) {
      for (double& m : ms) m *= 1.1;
    }
    block.big_m = 1.1 * required;
  }

  const int cells = static_cast<int>(block.cells.size());
  const double w_hi = s.s_bounds.hi * s.tw_bounds.hi;
  block.z_vars.resize(s.n);
  block.envelope_rows.resize(s.n);
  for (int i = 0; i < s.n; ++i) {
    const int w = model.AddContinuous(Idx("w", i), 0.0, w_hi, tags::kProduct);
    block.w_vars.push_back(w);
    for (int l = 0; l < cells; ++l) {
      block.z_vars[i].push_back(model.AddBinary(Idx2("z", i, l), tags::kCell));
    }
    const int x = vars.s_bar;
    const int y = vars.tw[i];
    for (int l = 0; l < cells; ++l) {
      const CellBounds& cb = block.cells[l];
      const auto& m = block.cell_m[l];
      const int z = block.z_vars[i][l];
      // Each row a.(w,x,y) (>=|<=) rhs is relaxed by M(1 - z); the z term is
      // moved to the left-hand side.
      std::array<int, kEnvelopeRowsPerCell> rows{};
      rows[0] = model.AddRow(Idx2("env_lo_a", i, l),
                             {{w, 1.0}, {y, -cb.s_lo}, {x, -cb.t_lo}, {z, -m[0]}},
                             Sense::kGreaterEqual, -cb.s_lo * cb.t_lo - m[0],
                             tags::kEnvelope);
      rows[1] = model.AddRow(Idx2("env_lo_b", i, l),
                             {{w, 1.0}, {y, -cb.s_hi}, {x, -cb.t_hi}, {z, -m[1]}},
                             Sense::kGreaterEqual, -cb.s_hi * cb.t_hi - m[1],
                             tags::kEnvelope);
      rows[2] = model.AddRow(Idx2("env_hi_a", i, l),
                             {{w, 1.0}, {y, -cb.s_hi}, {x, -cb.t_lo}, {z, m[2]}},
                             Sense::kLessEqual, -cb.s_hi * cb.t_lo + m[2],
                             tags::kEnvelope);
      rows[3] = model.AddRow(Idx2("env_hi_b", i, l),
                             {{w, 1.0}, {y, -cb.s_lo}, {x, -cb.t_hi}, {z, m[3]}},
                             Sense::kLessEqual, -cb.s_lo * cb.t_hi + m[3],
                             tags::kEnvelope);
      block.envelope_rows[i].push_back(rows);
    }
    // Cell membership, aggregated over the selector (exactly one z is 1).
    std::vector<Term> s_lo{{x, 1.0}}, s_hi{{x, 1.0}}, t_lo{{y, 1.0}},
        t_hi{{y, 1.0}}, pick;
    for (int l = 0; l < cells; ++l) {
      const int z = block.z_vars[i][l];
      const CellBounds& cb = block.cells[l];
      s_lo.push_back({z, -cb.s_lo});
      s_hi.push_back({z, -cb.s_hi});
      t_lo.push_back({z, -cb.t_lo});
      t_hi.push_back({z, -cb.t_hi});
      pick.push_back({z, 1.0});
    }
    model.AddRow(Idx("link_s_lo", i), s_lo, Sense::kGreaterEqual, 0.0,
                 tags::kLinking);
    model.AddRow(Idx("link_s_hi", i), s_hi, Sense::kLessEqual, 0.0,
                 tags::kLinking);
    model.AddRow(Idx("link_t_lo", i), t_lo, Sense::kGreaterEqual, 0.0,
                 tags::kLinking);
    model.AddRow(Idx("link_t_hi", i), t_hi, Sense::kLessEqual, 0.0,
                 tags::kLinking);
    model.AddRow(Idx("pick", i), pick, Sense::kEqual, 1.0, tags::kSelection);

    // Envelope of the whole box; implied by the cell rows at integral z but
    // it keeps the relaxation from dropping w to zero at fractional z.
    const double sl = s.s_bounds.lo, su = s.s_bounds.hi;
    const double tl = s.tw_bounds.lo, tu = s.tw_bounds.hi;
    model.AddRow(Idx("env_box_lo_a", i), {{w, 1.0}, {y, -sl}, {x, -tl}},
                 Sense::kGreaterEqual, -sl * tl, tags::kEnvelope);
    model.AddRow(Idx("env_box_lo_b", i), {{w, 1.0}, {y, -su}, {x, -tu}},
                 Sense::kGreaterEqual, -su * tu, tags::kEnvelope);
    model.AddRow(Idx("env_box_hi_a", i), {{w, 1.0}, {y, -su}, {x, -tl}},
                 Sense::kLessEqual, -su * tl, tags::kEnvelope);
    model.AddRow(Idx("env_box_hi_b", i), {{w, 1.0}, {y, -sl}, {x, -tu}},
                 Sense::kLessEqual, -sl * tu, tags::kEnvelope);
  }

  // The target SOC is shared, so every task sits in the same SOC strip.
  for (int i = 1; i < s.n; ++i) {
    for (int j = 0; j < config.ns; ++j) {
      std::vector<Term> strip;
      for (int k = 0; k < config.nt; ++k) {
        const int l = j * config.nt + k;
        strip.push_back({block.z_vars[i][l], 1.0});
        strip.push_back({block.z_vars[0][l], -1.0});
      }
      model.AddRow(Idx2("strip", i, j), strip, Sense::kEqual, 0.0,
                   tags::kSelection);
    }
  }
  return block;
}

void AddDeterministicObjective(milp::MilpModel& model,
                               const scenario::Scenario& s,
                               const battery::BatteryParams& params,
                               const CoreVariables& vars,
                               const McCormickBlock& block,
                               ChargingCost charging_cost) {
  for (int i = 0; i < s.n; ++i) {
    if (charging_cost == ChargingCost::kConstant) {
      model.AddObjectiveConstant(params.kc * params.kv * s.d[i]);
    } else {
      const double tc_hat = params.kv * s.d[i] / s.c_hat;
      model.AddObjectiveTerm(vars.tc[i], params.kc * s.c_hat);
      model.AddObjectiveTerm(vars.c, params.kc * tc_hat);
      model.AddObjectiveConstant(-params.kc * s.c_hat * tc_hat);
    }
    model.AddObjectiveTerm(block.w_vars[i], params.ks);
    model.AddObjectiveTerm(vars.dt[i], s.lambda);
  }
}

PlanningModel AssembleDeterministic(const scenario::Scenario& s,
                                    const battery::BatteryParams& params,
                                    const McCormickConfig& config) {
  s.Validate();
  if (params.kc < 0.0 || params.ks < 0.0) {
    throw ConfigError("kc and ks must be nonnegative");
  }
  if (!params.fitted()) {
    spdlog::warn("battery coefficients kc/ks are not fitted (kc={}, ks={})",
                 params.kc, params.ks);
  }
  PlanningModel out;
  out.vars = AddCoreVariables(out.model, s, params.kv);
  BuildScheduleConstraints(out.model, s, params.kv, out.vars);
  out.mccormick = BuildMcCormick(out.model, s, out.vars, config);
  AddDeterministicObjective(out.model, s, params, out.vars, out.mccormick,
                            config.charging_cost);
  out.model.Validate();
  return out;
}

scenario::Decision ExtractDecision(const CoreVariables& vars,
                                   const std::vector<double>& x) {
  scenario::Decision d;
  d.s_bar = x[vars.s_bar];
  d.v = x[vars.v];
  d.c = x[vars.c];
  return d;
}

}  // namespace amrplan::core
