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

#ifndef AMRPLAN_SCENARIO_HPP_
#define AMRPLAN_SCENARIO_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amrplan/dense_matrix.hpp"
#include "nlohmann/json.hpp"

namespace amrplan::scenario {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return x >= lo && x <= hi; }
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  bool operator==(const Interval&) const = default;
};

enum class DistributionKind { kPoint, kUniform, kTruncatedNormal };

// Distribution of one component of the uncertainty vector. The support is
// always the box [lo, hi]; a truncated normal is clipped to it by rejection.
struct ComponentDistribution {
  DistributionKind kind = DistributionKind::kPoint;
  double lo = 0.0;
  double hi = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  bool operator==(const ComponentDistribution&) const = default;
};

// delta in R^(2N): component i perturbs xi[i], component N+i perturbs d[i].
// The support polytope is {delta : U delta <= t}.
struct UncertaintyModel {
  std::vector<ComponentDistribution> components;
  DenseMatrix polytope_u;
  std::vector<double> polytope_t;
  int k_samples = 100;
  double epsilon = 0.02;
  uint64_t seed = 1;

  int dim() const { return static_cast<int>(components.size()); }
  // True when U delta <= t + slack.
  bool Contains(std::span<const double> delta, double slack = 1e-9) const;
  // Throws ValidationError on invariant violations, including a
  // distribution support that leaves the polytope.
  void Validate() const;
  bool operator==(const UncertaintyModel&) const = default;
};

// Independent uniform components on [-xi_rel*xi_i, xi_rel*xi_i] and
// [-d_rel*d_i, d_rel*d_i] with the matching box polytope.
UncertaintyModel BoxUncertainty(std::span<const double> xi,
                                std::span<const double> d, double xi_rel,
                                double d_rel);

// Box polytope [I; -I] delta <= [hi; -lo] from the component supports.
void SetBoxPolytope(UncertaintyModel& model);

struct Scenario {
  int n = 0;
  std::vector<double> xi;  // task intervals, hours
  std::vector<double> d;   // distances, km
  double s_lower = 0.2;
  Interval v_bounds{3.6, 7.2};  // km/h
  Interval c_bounds{0.5, 2.0};  // C-rate
  Interval t_bounds;
  Interval tc_bounds;
  Interval tw_bounds;
  Interval s_bounds{0.3, 1.0};
  double lambda = 1.0;        // waiting weight, degradation / h
  std::vector<double> beta;   // 2N adjustment cost coefficients
  double v_hat = 0.0;
  double c_hat = 0.0;
  std::optional<UncertaintyModel> uncertainty;
  nlohmann::json robust = nlohmann::json::object();  // parsed by robust

  void Validate() const;
  bool operator==(const Scenario&) const = default;
};

// Fills every optional field that is still unset (zero-width boxes, empty
// beta, zero nominal points) with its documented default.
void ApplyDefaults(Scenario& scenario);

Scenario ScenarioFromJson(const nlohmann::json& j);
nlohmann::json ScenarioToJson(const Scenario& scenario);
Scenario LoadScenario(const std::string& path);
void SaveScenario(const Scenario& scenario, const std::string& path);

// Task data after applying an uncertainty realization.
struct PerturbedTasks {
  std::vector<double> xi;
  std::vector<double> d;
};
PerturbedTasks Perturb(const Scenario& scenario,
                       std::span<const double> delta);

// Linear decision rule gains; each matrix is N x 2N and maps delta to a
// per-task adjustment of the target SOC, speed and C-rate respectively.
struct Recourse {
  DenseMatrix ws;
  DenseMatrix wv;
  DenseMatrix wc;
  bool operator==(const Recourse&) const = default;
};

struct Decision {
  double s_bar = 0.0;
  double v = 0.0;
  double c = 0.0;
  std::optional<Recourse> recourse;
  bool operator==(const Decision&) const = default;
};

// Per-task control inputs, the form simulation consumes. Without recourse
// all tasks share the first-stage values.
struct TaskControls {
  std::vector<double> s_bar;
  std::vector<double> v;
  std::vector<double> c;
};
TaskControls Broadcast(const Decision& decision, int n);

// (0.8, v_max, c_max): finish tasks and recharging as fast as possible.
Decision BaselineDecision(const Scenario& scenario);
inline constexpr double kBaselineTargetSoc = 0.8;

nlohmann::json DecisionToJson(const Decision& decision);
Decision DecisionFromJson(const nlohmann::json& j);

// Draws `count` uncertainty vectors, resampling any draw outside the
// polytope. Deterministic for a given seed.
std::vector<std::vector<double>> SampleUncertainty(
    const UncertaintyModel& model, int count, uint64_t seed);

}  // namespace amrplan::scenario

#endif  // AMRPLAN_SCENARIO_HPP_
