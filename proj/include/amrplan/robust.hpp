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

#ifndef AMRPLAN_ROBUST_HPP_
#define AMRPLAN_ROBUST_HPP_

#include <array>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "amrplan/battery.hpp"
#include "amrplan/dense_matrix.hpp"
#include "amrplan/milp_model.hpp"
#include "amrplan/model_core.hpp"
#include "amrplan/scenario.hpp"

namespace amrplan::robust {

namespace tags {
inline constexpr const char* kChanceExecTime = "chance-exec-time";
inline constexpr const char* kChanceChargeTime = "chance-charge-time";
inline constexpr const char* kChanceSoc = "chance-soc";
inline constexpr const char* kChanceSchedule = "chance-schedule";
inline constexpr const char* kChanceBudget = "chance-budget";
inline constexpr const char* kSupportDual = "support-dual";
inline constexpr const char* kRecourseGain = "recourse-gain";
inline constexpr const char* kRecourseCost = "recourse-cost";
inline constexpr const char* kSampleSelector = "sample-selector";
}  // namespace tags

// Row tags a robust model may contain.
const std::set<std::string>& RobustRowTags();

// Constraint families that may be relaxed in probability.
enum class Group { kExecTime, kChargeTime, kSocBudget, kSchedule };
inline constexpr std::array<Group, 4> kAllGroups = {
    Group::kExecTime, Group::kChargeTime, Group::kSocBudget, Group::kSchedule};
const char* GroupName(Group group);
Group GroupFromName(const std::string& name);

enum class RecourseMode {
  kOff,       // no decision rule; first-stage controls only
  kFixed,     // gains are inputs (zero unless configured)
  kOptimize,  // gains are bounded decision variables
};
const char* RecourseModeName(RecourseMode mode);
RecourseMode RecourseModeFromName(const std::string& name);

enum class SecondStageCost {
  kLiteral,   // beta . mean(delta), a constant
  kRecourse,  // mean over samples of beta-weighted |adjustment|
};

// Per-task diagonal gains: each control of task i responds to delta_i (its
// interval) and delta_{N+i} (its distance).
struct DiagonalGains {
  std::vector<std::array<double, 2>> ws;  // [task] {xi gain, d gain}
  std::vector<std::array<double, 2>> wv;
  std::vector<std::array<double, 2>> wc;
};

struct RobustConfig {
  std::set<Group> violable = {kAllGroups.begin(), kAllGroups.end()};
  double epsilon = 0.02;
  int k_samples = 100;
  std::optional<double> big_m_saa;  // unset: per-row analytic value
  RecourseMode recourse = RecourseMode::kFixed;
  std::string recourse_structure = "diagonal";
  std::optional<DiagonalGains> fixed_gains;  // kFixed only; zero if unset
  std::optional<double> w_max;               // unset: derived from the boxes
  SecondStageCost second_stage_cost = SecondStageCost::kLiteral;
  bool presolve = true;

  // floor(epsilon * K), the number of samples each row may violate.
  int Budget() const;
  void Validate() const;
};

// Reads the scenario's `robust` object on top of the uncertainty model's
// epsilon and sample count.
RobustConfig ConfigFromScenario(const scenario::Scenario& scenario);
RobustConfig ConfigFromJson(const nlohmann::json& j, RobustConfig base = {});
nlohmann::json ConfigToJson(const RobustConfig& config);

// Bounding box of {delta : U delta <= t}, from 2 * dim LPs. Throws
// ConfigError if the polytope is empty or unbounded.
std::vector<scenario::Interval> PolytopeBox(const DenseMatrix& u,
                                            std::span<const double> t);

// A semi-infinite row  sum_j a_j(x) delta_j <= b(x)  for all U delta <= t,
// where a_j and b are affine in the model variables.
struct UncertainRow {
  std::string name;
  std::vector<std::vector<milp::Term>> a_terms;  // [component]
  std::vector<double> a_const;                   // [component]
  std::vector<milp::Term> b_terms;
  double b_const = 0.0;
};

struct DualBlock {
  std::vector<int> lambda_vars;  // one per polytope row kept
  std::vector<int> polytope_rows;
  std::vector<int> equality_rows;  // U^T lambda = a, per component kept
  int bound_row = -1;              // t^T lambda <= b
};

// Replaces the semi-infinite row with lambda >= 0, U^T lambda = a(x),
// t^T lambda <= b(x). Only the polytope rows connected to the components
// with a nonzero a_j are dualized; the remaining block contributes zero to
// the support function as long as the polytope is nonempty.
DualBlock DualizeRow(milp::MilpModel& model, const UncertainRow& row,
                     const DenseMatrix& u, std::span<const double> t,
                     const std::string& tag = tags::kSupportDual);

// Column indices of the decision-rule gains. An index of -1 means the gain
// is the constant stored in `fixed` (zero when recourse is off).
struct RecourseVariables {
  std::vector<std::array<int, 2>> ws;
  std::vector<std::array<int, 2>> wv;
  std::vector<std::array<int, 2>> wc;
  DiagonalGains fixed;
};

// One chance-constrained row instantiated for every sample.
struct ChanceFamily {
  Group group = Group::kSocBudget;
  int task = 0;
  // Canonical form per sample: terms . x >= rhs (one or two sides).
  struct Side {
    std::vector<milp::Term> terms;
    double rhs = 0.0;
  };
  std::vector<std::vector<Side>> samples;  // [k][side]
  std::vector<int> selector;               // [k] g column, -1 if none
  std::vector<char> hardened;              // [k] enforced without g
  int budget_row = -1;
};

struct RobustModel {
  core::PlanningModel core;
  RobustConfig config;
  RecourseVariables recourse;
  std::vector<std::vector<double>> samples;
  std::vector<ChanceFamily> families;
  std::vector<DualBlock> duals;
  int budget = 0;
  int pruned_never_violated = 0;
  int pruned_dominated = 0;
  int pruned_free = 0;
};

// Sampled sides of every violable family plus, per sample, its largest
// violation over the variable bounds and the number of other samples that
// are violated whenever it is (capped at the budget; presolve only).
// `rm` needs its core model, recourse columns, samples and config.
struct SaaRows {
  std::vector<ChanceFamily> families;
  std::vector<std::vector<double>> max_margin;  // [family][k]
  std::vector<std::vector<int>> dominators;     // [family][k]
};
SaaRows GenerateSaaRows(const RobustModel& rm, const scenario::Scenario& scenario,
                        const battery::BatteryParams& params);
// Single-threaded reference with the same contract.
SaaRows GenerateSaaRowsSerial(const RobustModel& rm,
                              const scenario::Scenario& scenario,
                              const battery::BatteryParams& params);

// Adds the sampled rows of every violable group. Binaries are created only
// for rows that presolve cannot decide.
void BuildSaaConstraints(RobustModel& rm, const scenario::Scenario& scenario,
                         const battery::BatteryParams& params);

// Replaces the McCormick rows of the core model by their robust
// counterparts when target-SOC gains are present.
void DualizeHardConstraints(RobustModel& rm, const scenario::Scenario& scenario);

RobustModel AssembleRobust(const scenario::Scenario& scenario,
                           const battery::BatteryParams& params,
                           const core::McCormickConfig& mccormick,
                           const RobustConfig& config);

// Uses the samples drawn from the scenario's uncertainty model unless
// `samples` is given.
RobustModel AssembleRobust(const scenario::Scenario& scenario,
                           const battery::BatteryParams& params,
                           const core::McCormickConfig& mccormick,
                           const RobustConfig& config,
                           std::vector<std::vector<double>> samples);

// First-stage decision plus gains (absent when recourse is off or every
// gain is zero).
scenario::Decision ExtractDecision(const RobustModel& rm,
                                   const std::vector<double>& x);

struct FamilyAudit {
  Group group = Group::kSocBudget;
  int task = 0;
  int violated = 0;      // samples whose unrelaxed row fails at x
  int selected = 0;      // g = 1 among them in the solver assignment
  bool within_budget = false;
  bool consistent = false;  // every violated row has its g set
};

// Re-evaluates every sampled row at `x`, including presolved ones.
std::vector<FamilyAudit> AuditChanceConstraints(const RobustModel& rm,
                                                const std::vector<double>& x,
                                                double tol = 1e-6);

struct AdjustedControls {
  scenario::TaskControls controls;
  int clipped = 0;  // adjusted values moved back into their boxes
};

// (S + Ws delta, v + Wv delta, c + Wc delta) per task, clipped to the
// scenario boxes. Throws ConfigError if the decision carries no recourse.
AdjustedControls ApplyRecourse(const scenario::Scenario& scenario,
                               const scenario::Decision& decision,
                               std::span<const double> delta);

scenario::Recourse GainsToRecourse(const DiagonalGains& gains);
DiagonalGains ZeroGains(int n);

}  // namespace amrplan::robust

#endif  // AMRPLAN_ROBUST_HPP_
