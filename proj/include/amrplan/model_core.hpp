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

#ifndef AMRPLAN_MODEL_CORE_HPP_
#define AMRPLAN_MODEL_CORE_HPP_

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "amrplan/battery.hpp"
#include "amrplan/milp_model.hpp"
#include "amrplan/scenario.hpp"

namespace amrplan::core {

// Tags attached to every row and column of the planning model.
namespace tags {
inline constexpr const char* kSocBudget = "soc-budget";
inline constexpr const char* kScheduleEpigraph = "schedule-epigraph";
inline constexpr const char* kControlBox = "control-box";
inline constexpr const char* kTimeBox = "time-box";
inline constexpr const char* kTravelTime = "travel-time-linearization";
inline constexpr const char* kChargeTime = "charge-time-linearization";
inline constexpr const char* kEnvelope = "mccormick-envelope";
inline constexpr const char* kLinking = "mccormick-linking";
inline constexpr const char* kSelection = "mccormick-selection";
inline constexpr const char* kProduct = "mccormick-product";
inline constexpr const char* kCell = "mccormick-cell";
}  // namespace tags

// The row tags a deterministic model may contain.
const std::set<std::string>& DeterministicRowTags();

// y = slope * x + intercept.
struct AffineMap {
  double slope = 0.0;
  double intercept = 0.0;
  double operator()(double x) const { return slope * x + intercept; }
};

// First-order expansion of d / v around v_hat: d * (2/v_hat - v/v_hat^2).
AffineMap LinearizeTravelTime(double d, double v_hat);
// First-order expansion of kv * d / c around c_hat.
AffineMap LinearizeChargeTime(double d, double c_hat, double kv);

enum class ChargingCost {
  kTaylor,    // tangent plane of kc * c * tc at (c_hat, tc_hat)
  kConstant,  // kc * kv * d, from c * tc = kv * d
};

struct McCormickConfig {
  int ns = 4;
  int nt = 4;
  std::optional<double> big_m;  // unset: per-row analytic value
  ChargingCost charging_cost = ChargingCost::kTaylor;
};

struct CellBounds {
  double s_lo = 0.0;
  double s_hi = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double gap() const { return (s_hi - s_lo) * (t_hi - t_lo) / 4.0; }
};

// Column indices of the first-stage and schedule variables.
struct CoreVariables {
  int s_bar = -1;
  int v = -1;
  int c = -1;
  std::vector<int> t;
  std::vector<int> tc;
  std::vector<int> tw;
  std::vector<int> dt;
};

// Envelope rows per cell, in the order
//   w >= sL*y + x*tL - sL*tL,  w >= sU*y + x*tU - sU*tU,
//   w <= sU*y + x*tL - sU*tL,  w <= sL*y + x*tU - sL*tU
// where x is the target SOC and y the idle time.
inline constexpr int kEnvelopeRowsPerCell = 4;

struct McCormickBlock {
  int ns = 0;
  int nt = 0;
  std::vector<CellBounds> cells;  // index l = j * nt + k
  double big_m = 0.0;  // largest M used in any row
  std::vector<std::array<double, kEnvelopeRowsPerCell>> cell_m;  // [cell][kind]
  std::vector<std::vector<int>> z_vars;  // [task][cell]
  std::vector<int> w_vars;               // [task]
  std::vector<std::vector<std::array<int, kEnvelopeRowsPerCell>>>
      envelope_rows;  // [task][cell][kind]
};

// Uniform tiling of the (target SOC, idle time) box.
std::vector<CellBounds> TileCells(const scenario::Interval& s_box,
                                  const scenario::Interval& tw_box, int ns,
                                  int nt);

// Smallest M per (cell, envelope row kind) that keeps the row inactive for
// any point of the box whose (x, y, w) lies in some other cell's envelope.
std::vector<std::array<double, kEnvelopeRowsPerCell>> AnalyticEnvelopeM(
    const scenario::Interval& s_box, const scenario::Interval& tw_box,
    const std::vector<CellBounds>& cells);

// Upper bounds on the lateness carried into each task, from the slowest
// admissible linearized times. `extra[i]` is added to task i's overrun.
std::vector<double> LatenessBounds(const scenario::Scenario& scenario,
                                   double kv, const std::vector<double>& extra);

CoreVariables AddCoreVariables(milp::MilpModel& model,
                               const scenario::Scenario& scenario, double kv);

// SOC budget, recursion epigraph and the linearized time substitutions.
void BuildScheduleConstraints(milp::MilpModel& model,
                              const scenario::Scenario& scenario, double kv,
                              const CoreVariables& vars);

McCormickBlock BuildMcCormick(milp::MilpModel& model,
                              const scenario::Scenario& scenario,
                              const CoreVariables& vars,
                              const McCormickConfig& config);

// Adds kc * c * tc (per the configured route), ks * w and lambda * dt.
void AddDeterministicObjective(milp::MilpModel& model,
                               const scenario::Scenario& scenario,
                               const battery::BatteryParams& params,
                               const CoreVariables& vars,
                               const McCormickBlock& block,
                               ChargingCost charging_cost);

struct PlanningModel {
  milp::MilpModel model;
  CoreVariables vars;
  McCormickBlock mccormick;
};

// Throws ConfigError if the battery parameters are not fitted.
PlanningModel AssembleDeterministic(const scenario::Scenario& scenario,
                                    const battery::BatteryParams& params,
                                    const McCormickConfig& config);

// Reads (s_bar, v, c) out of a solved assignment.
scenario::Decision ExtractDecision(const CoreVariables& vars,
                                   const std::vector<double>& x);

}  // namespace amrplan::core

#endif  // AMRPLAN_MODEL_CORE_HPP_
