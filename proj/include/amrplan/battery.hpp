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

#ifndef AMRPLAN_BATTERY_HPP_
#define AMRPLAN_BATTERY_HPP_

#include <span>
#include <string>
#include <vector>

#include "nlohmann/json_fwd.hpp"

namespace amrplan::battery {

// Degradation-model constants plus the linear coefficients the planner uses.
//
// Capacity is expressed in whatever unit `c_nom` uses (the shipped defaults
// use mAh), time in hours, temperature in kelvin and energy in J/mol. The
// defaults are representative LiFePO4 magnitudes and are configuration, not
// measured data.
struct BatteryParams {
  // Cycling model.
  double k1 = 4.0e-5;
  double k2 = 1.0;
  double k3 = 2.0e-5;
  double k4 = 2.0;
  // Calendar model.
  double k_a = 0.025;   // capacity / h at SOC = 1, T = Tref
  double k_b = 0.0025;  // capacity / h at SOC = 0, T = Tref
  double e_a = 50000.0;
  double e_b = 40000.0;
  double gas_constant = 8.314462618;
  double t_ref = 298.15;
  double c_nom = 2300.0;
  double alpha = 1.2;
  // Linear planner coefficients. kc and ks are produced by
  // fit_degradation_coefficients(); kv is the SOC drawn per unit distance.
  double kc = 0.0;
  double ks = 0.0;
  double kv = 0.1;

  bool fitted() const { return kc > 0.0 && ks > 0.0; }
  // Throws ConfigError listing every violated invariant.
  void Validate() const;
};

struct CyclingStress {
  double soc_dev = 0.0;
  double soc_avg = 0.0;
  double q = 0.0;  // capacity throughput of the cycle
};

// Cycling degradation of one cycle:
//   (k1 * dev * exp(k2 * avg) + k3 * exp(k4 * dev)) * q
double CyclingDegradation(const BatteryParams& params,
                          const CyclingStress& stress);

// Calendar rate k(T, SOC); capacity per hour.
double CalendarRate(const BatteryParams& params, double temperature,
                    double soc);

// Integrates dQ/dt = k(T,SOC) * (1 + Q/Cnom)^-alpha from `q_loss0` over
// `duration` using the closed form of the separable ODE.
double IntegrateCalendarLoss(const BatteryParams& params, double temperature,
                             double soc, double q_loss0, double duration);

// Right-hand side of the calendar ODE. Exposed so numerical integrators can
// be checked against the closed form.
double CalendarLossDerivative(const BatteryParams& params, double temperature,
                              double soc, double q_loss);

// Stress of charging at C-rate `c` for `t_charge` hours, ending at target SOC
// `s_target`: dev = c*t, avg = s_target - c*t/2, q = Cnom*c*t.
CyclingStress ChargeEventStress(const BatteryParams& params, double c,
                                double t_charge, double s_target);

struct FitOptions {
  std::vector<double> c_grid = {0.5, 1.0, 1.5, 2.0};
  std::vector<double> soc_grid = {0.1, 0.2, 0.3, 0.4, 0.5,
                                  0.6, 0.7, 0.8, 0.9, 1.0};
  double horizon = 0.25;  // charge duration per sample, hours
  double s_target = 0.8;  // SOC the sample charge events end at
};

struct DegradationFit {
  double kc = 0.0;
  double ks = 0.0;
  // Per-sample regression data, kept for reporting.
  std::vector<double> charge_rates;  // degradation / h at each c
  std::vector<double> idle_rates;    // offset-free calendar rate at each SOC
};

// Least-squares slopes through the origin:
//   kc from per-hour charging degradation vs. c,
//   ks from (calendar_rate(soc) - calendar_rate(0)) vs. soc at T = Tref.
DegradationFit FitDegradationCoefficients(const BatteryParams& params,
                                          const FitOptions& options = {});

// Fits and writes kc / ks back into `params`.
DegradationFit FitAndStore(BatteryParams& params,
                           const FitOptions& options = {});

// Slope of y = k*x through the origin. Throws FitError when every x is zero.
double SlopeThroughOrigin(std::span<const double> x, std::span<const double> y);

// JSON: one key per field. Unknown keys are rejected; missing keys fall back
// to the defaults above with a logged notice.
BatteryParams ParamsFromJson(const nlohmann::json& j);
nlohmann::json ParamsToJson(const BatteryParams& params);
BatteryParams LoadParams(const std::string& path);
void SaveParams(const BatteryParams& params, const std::string& path);

}  // namespace amrplan::battery

#endif  // AMRPLAN_BATTERY_HPP_
