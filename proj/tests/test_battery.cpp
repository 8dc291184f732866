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
#include <vector>

#include "amrplan/battery.hpp"
#include "amrplan/errors.hpp"
#include "doctest.h"
#include "nlohmann/json.hpp"
#include "oracles.hpp"

using namespace amrplan;
using battery::BatteryParams;
using battery::CyclingStress;

TEST_CASE("cycling: zero throughput gives zero degradation") {
  const BatteryParams p;
  CHECK(battery::CyclingDegradation(p, {0.4, 0.5, 0.0}) == 0.0);
}

TEST_CASE("cycling: zero deviation collapses to k3 per unit throughput") {
  const BatteryParams p;
  CHECK(battery::CyclingDegradation(p, {0.0, 0.7, 1.0}) ==
        doctest::Approx(p.k3).epsilon(1e-15));
}

TEST_CASE("cycling: golden value at default parameters") {
  const BatteryParams p;
  const double direct = (p.k1 * 0.3 * std::exp(p.k2 * 0.6) +
                         p.k3 * std::exp(p.k4 * 0.3)) * 1.0;
  const double golden = 5.8307801612496294e-05;
  CHECK(direct == doctest::Approx(golden).epsilon(1e-14));
  CHECK(battery::CyclingDegradation(p, {0.3, 0.6, 1.0}) ==
        doctest::Approx(golden).epsilon(1e-14));
}

TEST_CASE("cycling: homogeneous of degree one in throughput") {
  const BatteryParams p;
  for (double q : {0.5, 3.0, 1000.0}) {
    const double one = battery::CyclingDegradation(p, {0.2, 0.4, 1.0});
    CHECK(battery::CyclingDegradation(p, {0.2, 0.4, q}) ==
          doctest::Approx(q * one).epsilon(1e-13));
  }
}

TEST_CASE("cycling: out-of-range stress is a domain error") {
  const BatteryParams p;
  CHECK_THROWS_AS(battery::CyclingDegradation(p, {1.2, 0.5, 1.0}), DomainError);
  CHECK_THROWS_AS(battery::CyclingDegradation(p, {0.2, -0.1, 1.0}), DomainError);
  CHECK_THROWS_AS(battery::CyclingDegradation(p, {0.2, 0.5, -1.0}), DomainError);
}

TEST_CASE("calendar rate: reference temperature cases") {
  const BatteryParams p;
  CHECK(battery::CalendarRate(p, p.t_ref, 0.0) == doctest::Approx(p.k_b));
  CHECK(battery::CalendarRate(p, p.t_ref, 1.0) == doctest::Approx(p.k_a + p.k_b));
  CHECK(battery::CalendarRate(p, p.t_ref, 0.5) ==
        doctest::Approx(0.5 * p.k_a + p.k_b));
}

TEST_CASE("calendar rate: affine and increasing in soc") {
  const BatteryParams p;
  const double t = 310.0;
  const double r0 = battery::CalendarRate(p, t, 0.0);
  const double r1 = battery::CalendarRate(p, t, 1.0);
  for (double s = 0.05; s < 1.0; s += 0.1) {
    const double r = battery::CalendarRate(p, t, s);
    CHECK(r == doctest::Approx(r0 + s * (r1 - r0)).epsilon(1e-13));
    CHECK(battery::CalendarRate(p, t, s + 0.05) > r);
  }
  CHECK(battery::CalendarRate(p, 320.0, 0.5) > battery::CalendarRate(p, 300.0, 0.5));
}

TEST_CASE("calendar rate: nonpositive temperature is a domain error") {
  const BatteryParams p;
  CHECK_THROWS_AS(battery::CalendarRate(p, 0.0, 0.5), DomainError);
  CHECK_THROWS_AS(battery::CalendarRate(p, -5.0, 0.5), DomainError);
}

TEST_CASE("calendar loss: zero duration is the identity") {
  const BatteryParams p;
  CHECK(battery::IntegrateCalendarLoss(p, p.t_ref, 0.6, 3.5, 0.0) == 3.5);
}

TEST_CASE("calendar loss: alpha zero gives a constant rate") {
  BatteryParams p;
  p.alpha = 0.0;
  const double k = battery::CalendarRate(p, p.t_ref, 0.7);
  CHECK(battery::IntegrateCalendarLoss(p, p.t_ref, 0.7, 1.0, 40.0) ==
        doctest::Approx(1.0 + 40.0 * k).epsilon(1e-12));
}

TEST_CASE("calendar loss: golden value agrees with refined RK4") {
  const BatteryParams p;
  const double golden = 22.369379231863086;
  const double rk4 = oracle::Rk4CalendarLoss(p, p.t_ref, 0.8, 0.0, 1000.0);
  CHECK(rk4 == doctest::Approx(golden).epsilon(1e-9));
  CHECK(battery::IntegrateCalendarLoss(p, p.t_ref, 0.8, 0.0, 1000.0) ==
        doctest::Approx(golden).epsilon(1e-12));
}

TEST_CASE("calendar loss: closed form matches RK4 across default points") {
  const BatteryParams p;
  for (double temp : {288.15, 298.15, 318.15}) {
    for (double soc : {0.0, 0.3, 0.8, 1.0}) {
      for (double q0 : {0.0, 50.0}) {
        for (double dur : {1.0, 250.0, 5000.0}) {
          const double closed =
              battery::IntegrateCalendarLoss(p, temp, soc, q0, dur);
          const double rk4 = oracle::Rk4CalendarLoss(p, temp, soc, q0, dur);
          CHECK(std::abs(closed - rk4) <= 1e-6 * std::abs(rk4));
        }
      }
    }
  }
}

TEST_CASE("calendar loss: monotone in duration and soc") {
  const BatteryParams p;
  double prev = 0.0;
  for (double dur = 10.0; dur <= 2000.0; dur += 190.0) {
    const double q = battery::IntegrateCalendarLoss(p, p.t_ref, 0.5, 0.0, dur);
    CHECK(q >= prev);
    prev = q;
  }
  prev = 0.0;
  for (double soc = 0.0; soc <= 1.0; soc += 0.125) {
    const double q = battery::IntegrateCalendarLoss(p, p.t_ref, soc, 0.0, 500.0);
    CHECK(q >= prev);
    prev = q;
  }
}

TEST_CASE("calendar loss: invalid arguments are domain errors") {
  const BatteryParams p;
  CHECK_THROWS_AS(battery::IntegrateCalendarLoss(p, p.t_ref, 0.5, 0.0, -1.0),
                  DomainError);
  CHECK_THROWS_AS(battery::IntegrateCalendarLoss(p, p.t_ref, 0.5, -1.0, 1.0),
                  DomainError);
}

TEST_CASE("charge event stress mapping") {
  const BatteryParams p;
  const CyclingStress s = battery::ChargeEventStress(p, 1.5, 0.2, 0.8);
  CHECK(s.soc_dev == doctest::Approx(0.3));
  CHECK(s.soc_avg == doctest::Approx(0.65));
  CHECK(s.q == doctest::Approx(p.c_nom * 0.3));
}

TEST_CASE("fit: idle slope recovers kA at the reference temperature") {
  const BatteryParams p;
  const auto fit = battery::FitDegradationCoefficients(p);
  CHECK(fit.ks == doctest::Approx(p.k_a).epsilon(1e-13));
}

TEST_CASE("fit: single C-rate sample is a one-point fit") {
  const BatteryParams p;
  battery::FitOptions opt;
  opt.c_grid = {1.0};
  const auto fit = battery::FitDegradationCoefficients(p, opt);
  const double per_hour =
      battery::CyclingDegradation(
          p, battery::ChargeEventStress(p, 1.0, opt.horizon, opt.s_target)) /
      opt.horizon;
  CHECK(fit.kc == doctest::Approx(per_hour).epsilon(1e-14));
}

TEST_CASE("fit: golden kc from the normal equations") {
  const BatteryParams p;
  // Independent normal-equations oracle: kc = sum(c*y) / sum(c*c).
  double sxy = 0.0;
  double sxx = 0.0;
  for (double c : {0.5, 1.0, 1.5, 2.0}) {
    const double dev = c * 0.25;
    const double avg = 0.8 - 0.5 * dev;
    const double y = (p.k1 * dev * std::exp(p.k2 * avg) +
                      p.k3 * std::exp(p.k4 * dev)) * p.c_nom * dev / 0.25;
    sxy += c * y;
    sxx += c * c;
  }
  const double golden = 0.1764272005849292;
  CHECK(sxy / sxx == doctest::Approx(golden).epsilon(1e-13));
  const auto fit = battery::FitDegradationCoefficients(p);
  CHECK(fit.kc == doctest::Approx(golden).epsilon(1e-13));
}

TEST_CASE("fit: deterministic and stored into the parameters") {
  BatteryParams p;
  CHECK_FALSE(p.fitted());
  const auto a = battery::FitAndStore(p);
  const auto b = battery::FitDegradationCoefficients(p);
  CHECK(a.kc == b.kc);
  CHECK(a.ks == b.ks);
  CHECK(p.kc == a.kc);
  CHECK(p.ks == a.ks);
  CHECK(p.fitted());
}

TEST_CASE("fit: degenerate grids raise fit errors") {
  const BatteryParams p;
  battery::FitOptions opt;
  opt.c_grid = {0.0, 0.0};
  CHECK_THROWS_AS(battery::FitDegradationCoefficients(p, opt), FitError);
  opt = {};
  opt.soc_grid = {};
  CHECK_THROWS_AS(battery::FitDegradationCoefficients(p, opt), FitError);
  const std::vector<double> zeros = {0.0, 0.0};
  CHECK_THROWS_AS(battery::SlopeThroughOrigin(zeros, zeros), FitError);
}

TEST_CASE("params json: round trip, unknown keys and defaults") {
  BatteryParams p;
  battery::FitAndStore(p);
  p.alpha = 0.9;
  const auto back = battery::ParamsFromJson(battery::ParamsToJson(p));
  CHECK(back.alpha == 0.9);
  CHECK(back.kc == p.kc);
  CHECK(back.ks == p.ks);

  const auto partial = battery::ParamsFromJson(nlohmann::json{{"kv", 0.05}});
  CHECK(partial.kv == 0.05);
  CHECK(partial.c_nom == BatteryParams{}.c_nom);

  CHECK_THROWS_AS(battery::ParamsFromJson(nlohmann::json{{"bogus", 1.0}}),
                  ConfigError);
  CHECK_THROWS_AS(battery::ParamsFromJson(nlohmann::json{{"Cnom", -1.0}}),
                  ValidationError);
}

TEST_CASE("params json: shipped default file loads and fits") {
  auto p = battery::LoadParams("config/battery_default.json");
  CHECK(p.fitted());
  CHECK(p.kv == doctest::Approx(0.1));
  const auto fit = battery::FitDegradationCoefficients(p);
  CHECK(p.kc == doctest::Approx(fit.kc).epsilon(1e-12));
  CHECK(p.ks == doctest::Approx(fit.ks).epsilon(1e-12));
}
