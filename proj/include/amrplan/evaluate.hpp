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

#ifndef AMRPLAN_EVALUATE_HPP_
#define AMRPLAN_EVALUATE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amrplan/battery.hpp"
#include "amrplan/scenario.hpp"
#include "nlohmann/json.hpp"

namespace amrplan::evaluate {

// Realized quantities of one task.
struct TaskOutcome {
  double t = 0.0;      // execution time
  double tc = 0.0;     // charging time
  double tw = 0.0;     // idle time before the task
  double dt = 0.0;     // lateness carried into the task
  double eta_c = 0.0;  // cycling degradation of its charge
  double eta_s = 0.0;  // calendar degradation while idle
  double s_bar = 0.0;
  double v = 0.0;
  double c = 0.0;
  bool soc_violation = false;
};

struct EvaluationReport {
  std::vector<TaskOutcome> tasks;
  double cycling = 0.0;
  double calendar = 0.0;
  double waiting = 0.0;
  double objective = 0.0;  // cycling + calendar + lambda * waiting
  int soc_violations = 0;
  int clipped = 0;  // recourse adjustments clipped to the boxes
};

// Exact times d'/v and kv*d'/c, the lateness / idle max-recursion and the
// linear degradation terms. An empty `delta` means the nominal tasks.
// Throws DomainError for nonpositive speed, C-rate or realized distance.
EvaluationReport SimulateControls(const scenario::Scenario& scenario,
                                  const battery::BatteryParams& params,
                                  const scenario::TaskControls& controls,
                                  std::span<const double> delta = {});

// Applies the decision's recourse to `delta` when both are present.
EvaluationReport SimulateSchedule(const scenario::Scenario& scenario,
                                  const battery::BatteryParams& params,
                                  const scenario::Decision& decision,
                                  std::span<const double> delta = {});

struct GridResult {
  scenario::Decision decision;
  double objective = 0.0;
  long evaluated = 0;
  std::array<int, 3> index{};  // (s, v, c) grid position of the argmin
  bool feasible = true;        // false when every point breaks the SOC budget
};

// Exhaustive search over a uniform (S, v, c) grid at delta = 0. Points whose
// schedule breaks the SOC budget are skipped. Ties go to the lowest
// flattened index (s outermost, c innermost).
GridResult GridOracle(const scenario::Scenario& scenario,
                      const battery::BatteryParams& params,
                      std::array<int, 3> resolution);
GridResult GridOracle(const scenario::Scenario& scenario,
                      const battery::BatteryParams& params, int resolution);
// Single-threaded reference with the same contract.
GridResult GridOracleSerial(const scenario::Scenario& scenario,
                            const battery::BatteryParams& params,
                            std::array<int, 3> resolution);

struct MonteCarloReport {
  int samples = 0;
  std::vector<double> violation_freq;  // per task
  std::vector<TaskOutcome> mean_tasks;  // per-task means (flags unused)
  double cycling = 0.0;
  double calendar = 0.0;
  double waiting = 0.0;
  double objective = 0.0;
  long clipped = 0;
};

// Fresh draws from the scenario's uncertainty model on the stream derived
// from `seed` (zero vectors when the scenario has none). Per-sample results
// are stored and reduced by pairwise summation, so the output does not
// depend on the thread count.
MonteCarloReport MonteCarloValidate(const scenario::Scenario& scenario,
                                    const battery::BatteryParams& params,
                                    const scenario::Decision& decision,
                                    int m_samples, uint64_t seed);
MonteCarloReport MonteCarloValidateSerial(const scenario::Scenario& scenario,
                                          const battery::BatteryParams& params,
                                          const scenario::Decision& decision,
                                          int m_samples, uint64_t seed);

// The draws MonteCarloValidate uses.
std::vector<std::vector<double>> ValidationSamples(
    const scenario::Scenario& scenario, int m_samples, uint64_t seed);

struct Comparison {
  MonteCarloReport decision;
  MonteCarloReport baseline;
  // (baseline - decision) / baseline in percent; empty when baseline is 0.
  std::optional<double> calendar_reduction_pct;
  std::optional<double> cycling_reduction_pct;
  std::optional<double> objective_reduction_pct;
  double added_waiting = 0.0;  // decision - baseline, hours
};

// Both decisions on identical samples. m_samples == 0 compares the nominal
// schedules only.
Comparison CompareToBaseline(const scenario::Scenario& scenario,
                             const battery::BatteryParams& params,
                             const scenario::Decision& decision,
                             int m_samples, uint64_t seed);

double PairwiseSum(std::span<const double> values);

// Serialization. Numbers use round-trip precision so identical runs give
// identical bytes.
std::string ReportCsv(const EvaluationReport& report,
                      const std::vector<double>& violation_freq = {});
std::string MonteCarloCsv(const MonteCarloReport& report);
nlohmann::json ReportJson(const EvaluationReport& report);
nlohmann::json MonteCarloJson(const MonteCarloReport& report);
nlohmann::json ComparisonJson(const Comparison& comparison);

// Per-task series for external plotting; writes plot_*.csv into `dir`.
void WritePlotData(const std::string& dir, const scenario::Scenario& scenario,
                   const EvaluationReport& nominal,
                   const std::optional<MonteCarloReport>& validation,
                   const std::optional<Comparison>& comparison);

}  // namespace amrplan::evaluate

#endif  // AMRPLAN_EVALUATE_HPP_
