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

#include "amrplan/battery.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "amrplan/errors.hpp"
#include "nlohmann/json.hpp"
#include "spdlog/spdlog.h"

namespace amrplan::battery {
namespace {

using Json = nlohmann::json;

double Arrhenius(double energy, double gas_constant, double temperature,
                 double t_ref) {
  return std::exp(-energy / gas_constant * (1.0 / temperature - 1.0 / t_ref));
}

// Field table shared by the JSON reader and writer.
std::map<std::string, double BatteryParams::*> FieldTable() {
  return {
      {"k1", &BatteryParams::k1},
      {"k2", &BatteryParams::k2},
      {"k3", &BatteryParams::k3},
      {"k4", &BatteryParams::k4},
      {"kA", &BatteryParams::k_a},
      {"kB", &BatteryParams::k_b},
      {"EA", &BatteryParams::e_a},
      {"EB", &BatteryParams::e_b},
      {"R", &BatteryParams::gas_constant},
      {"Tref", &BatteryParams::t_ref},
      {"Cnom", &BatteryParams::c_nom},
      {"alpha", &BatteryParams::alpha},
      {"kc", &BatteryParams::kc},
      {"ks", &BatteryParams::ks},
      {"kv", &BatteryParams::kv},
  };
}

}  // namespace

void BatteryParams::Validate() const {
  std::vector<std::string> bad;
  if (!(c_nom > 0.0)) bad.push_back("Cnom");
  if (!(gas_constant > 0.0)) bad.push_back("R");
  if (!(t_ref > 0.0)) bad.push_back("Tref");
  if (!(alpha >= 0.0)) bad.push_back("alpha");
  if (!(kv > 0.0)) bad.push_back("kv");
  if (kc < 0.0) bad.push_back("kc");
  if (ks < 0.0) bad.push_back("ks");
  if (!bad.empty()) throw ValidationError(bad);
}

double CyclingDegradation(const BatteryParams& params,
                          const CyclingStress& stress) {
  if (!(stress.soc_dev >= 0.0 && stress.soc_dev <= 1.0) ||
      !(stress.soc_avg >= 0.0 && stress.soc_avg <= 1.0) || !(stress.q >= 0.0)) {
    std::ostringstream msg;
    msg << "cycling stress out of range (soc_dev=" << stress.soc_dev
        << ", soc_avg=" << stress.soc_avg << ", q=" << stress.q << ")";
    throw DomainError(msg.str());
  }
  const double per_unit =
      params.k1 * stress.soc_dev * std::exp(params.k2 * stress.soc_avg) +
      params.k3 * std::exp(params.k4 * stress.soc_dev);
  return per_unit * stress.q;
}

double CalendarRate(const BatteryParams& params, double temperature,
                    double soc) {
  if (!(temperature > 0.0)) {
    throw DomainError("calendar rate needs a positive temperature");
  }
  if (!(soc >= 0.0 && soc <= 1.0)) {
    throw DomainError("calendar rate needs soc in [0, 1]");
  }
  const double fa =
      Arrhenius(params.e_a, params.gas_constant, temperature, params.t_ref);
  const double fb =
      Arrhenius(params.e_b, params.gas_constant, temperature, params.t_ref);
  return params.k_a * fa * soc + params.k_b * fb;
}

double CalendarLossDerivative(const BatteryParams& params, double temperature,
                              double soc, double q_loss) {
  return CalendarRate(params, temperature, soc) *
         std::pow(1.0 + q_loss / params.c_nom, -params.alpha);
}

double IntegrateCalendarLoss(const BatteryParams& params, double temperature,
                             double soc, double q_loss0, double duration) {
  if (!(duration >= 0.0)) {
    throw DomainError("calendar integration needs a nonnegative duration");
  }
  if (!(q_loss0 >= 0.0)) {
    throw DomainError("initial calendar loss must be nonnegative");
  }
  const double k = CalendarRate(params, temperature, soc);
  if (duration == 0.0) return q_loss0;
  // (1 + Q/C)^(a+1) = (1 + Q0/C)^(a+1) + k (a+1) t / C
  const double p = params.alpha + 1.0;
  const double base = std::pow(1.0 + q_loss0 / params.c_nom, p) +
                      k * p * duration / params.c_nom;
  return params.c_nom * (std::pow(base, 1.0 / p) - 1.0);
}

CyclingStress ChargeEventStress(const BatteryParams& params, double c,
                                double t_charge, double s_target) {
  const double delta_soc = c * t_charge;
  return CyclingStress{delta_soc, s_target - 0.5 * delta_soc,
                       params.c_nom * delta_soc};
}

double SlopeThroughOrigin(std::span<const double> x,
                          std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw FitError("regression needs equally sized, nonempty samples");
  }
  double sxx = 0.0;
  double sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  if (sxx == 0.0) throw FitError("degenerate regressor: all samples are zero");
  return sxy / sxx;
}

DegradationFit FitDegradationCoefficients(const BatteryParams& params,
                                          const FitOptions& options) {
  if (options.c_grid.empty() || options.soc_grid.empty()) {
    throw FitError("fit grids must be nonempty");
  }
  if (!(options.horizon > 0.0)) throw FitError("fit horizon must be positive");
  DegradationFit fit;
  for (double c : options.c_grid) {
    if (!(c >= 0.0)) throw DomainError("C-rate grid must be nonnegative");
    const double dsoc = c * options.horizon;
    if (dsoc > 1.0 || options.s_target - dsoc < 0.0 ||
        options.s_target > 1.0) {
      throw DomainError("charge sample leaves the [0, 1] SOC window");
    }
    const CyclingStress stress =
        ChargeEventStress(params, c, options.horizon, options.s_target);
    fit.charge_rates.push_back(CyclingDegradation(params, stress) /
                               options.horizon);
  }
  const double base = CalendarRate(params, params.t_ref, 0.0);
  for (double soc : options.soc_grid) {
    fit.idle_rates.push_back(CalendarRate(params, params.t_ref, soc) - base);
  }
  fit.kc = SlopeThroughOrigin(options.c_grid, fit.charge_rates);
  fit.ks = SlopeThroughOrigin(options.soc_grid, fit.idle_rates);
  return fit;
}

DegradationFit FitAndStore(BatteryParams& params, const FitOptions& options) {
  DegradationFit fit = FitDegradationCoefficients(params, options);
  params.kc = fit.kc;
  params.ks = fit.ks;
  return fit;
}

BatteryParams ParamsFromJson(const Json& j) {
  if (!j.is_object()) throw ParseError("battery file must hold a JSON object");
  const auto table = FieldTable();
  for (const auto& [key, value] : j.items()) {
    if (!table.contains(key)) {
      throw ConfigError("unknown battery parameter '" + key + "'");
    }
    if (!value.is_number()) {
      throw ParseError("battery parameter '" + key + "' must be a number");
    }
  }
  BatteryParams params;
  for (const auto& [key, member] : table) {
    auto it = j.find(key);
    if (it == j.end()) {
      spdlog::info("battery parameter '{}' missing, using default {}", key,
                   params.*member);
      continue;
    }
    params.*member = it->get<double>();
  }
  params.Validate();
  return params;
}

Json ParamsToJson(const BatteryParams& params) {
  Json j = Json::object();
  for (const auto& [key, member] : FieldTable()) j[key] = params.*member;
  return j;
}

BatteryParams LoadParams(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open battery file " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ParseError("battery file " + path + ": " + e.what());
  }
  return ParamsFromJson(j);
}

void SaveParams(const BatteryParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write battery file " + path);
  out << ParamsToJson(params).dump(2) << "\n";
}

}  // namespace amrplan::battery
