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

#ifndef AMRPLAN_TESTS_SCENARIO_GEN_HPP_
#define AMRPLAN_TESTS_SCENARIO_GEN_HPP_

#include <algorithm>
#include <random>

#include "amrplan/scenario.hpp"

namespace amrplan::testgen {

// Small seeded task sets mixing slack and overloaded intervals.
inline scenario::Scenario RandomScenario(uint64_t seed, int n_min = 2,
                                         int n_max = 6) {
  std::mt19937_64 rng(seed * 7919 + 17);
  std::uniform_int_distribution<int> count(n_min, n_max);
  std::uniform_real_distribution<double> dist(0.5, 3.5);
  std::uniform_real_distribution<double> load(0.7, 1.8);
  scenario::Scenario s;
  s.n = count(rng);
  double xi_max = 0.0;
  for (int i = 0; i < s.n; ++i) {
    const double d = dist(rng);
    s.d.push_back(d);
    const double nominal = d / 5.4 + 0.1 * d / 1.25;
    s.xi.push_back(nominal * load(rng));
    xi_max = std::max(xi_max, s.xi.back());
  }
  s.tw_bounds = {0.0, xi_max};
  scenario::ApplyDefaults(s);
  s.Validate();
  return s;
}

}  // namespace amrplan::testgen

#endif  // AMRPLAN_TESTS_SCENARIO_GEN_HPP_
