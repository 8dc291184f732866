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

#ifndef AMRPLAN_TESTS_ORACLES_HPP_
#define AMRPLAN_TESTS_ORACLES_HPP_

// Independent reference implementations used only by tests.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "amrplan/battery.hpp"
#include "amrplan/milp_model.hpp"

namespace amrplan::oracle {

// Dense two-phase tableau simplex with Bland's rule for
//   min c.x  s.t.  A x <= b,  x >= 0.
// Returns nullopt when infeasible. Unbounded problems are not generated by
// the tests and report nullopt as well.
inline std::optional<double> TableauSimplex(
    const std::vector<std::vector<double>>& a, const std::vector<double>& b,
    const std::vector<double>& c, std::vector<double>* x_out = nullptr) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(c.size());
  // Columns: x (n), slack (m), artificial (m), rhs.
  const int cols = n + 2 * m + 1;
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(cols, 0.0));
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) {
    const double sign = b[i] < 0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) t[i][j] = sign * a[i][j];
    t[i][n + i] = sign;
    t[i][n + m + i] = 1.0;
    t[i][cols - 1] = sign * b[i];
    basis[i] = n + m + i;
  }
  auto pivot = [&](int r, int q) {
    const double p = t[r][q];
    for (double& v : t[r]) v /= p;
    for (int i = 0; i <= m; ++i) {
      if (i == r || t[i][q] == 0.0) continue;
      const double f = t[i][q];
      for (int j = 0; j < cols; ++j) t[i][j] -= f * t[r][j];
    }
    basis[r] = q;
  };
  auto run = [&](int allowed) {
    for (int iter = 0; iter < 100000; ++iter) {
      int q = -1;
      for (int j = 0; j < allowed; ++j) {
        if (t[m][j] < -1e-10) {
          q = j;
          break;
        }
      }
      if (q < 0) return true;
      int r = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        if (t[i][q] <= 1e-10) continue;
        const double ratio = t[i][cols - 1] / t[i][q];
        if (r < 0 || ratio < best - 1e-12 ||
            (ratio <= best + 1e-12 && basis[i] < basis[r])) {
          r = i;
          best = ratio;
        }
      }
      if (r < 0) return false;
      pivot(r, q);
    }
    return false;
  };
  // Phase 1: minimize the sum of artificials.
  for (int j = 0; j < cols; ++j) t[m][j] = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < cols; ++j) t[m][j] -= t[i][j];
  }
  for (int i = 0; i < m; ++i) t[m][n + m + i] = 0.0;
  run(n + 2 * m);
  if (-t[m][cols - 1] > 1e-8) return std::nullopt;
  // Drive remaining artificials out of the basis where possible.
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n + m) continue;
    for (int j = 0; j < n + m; ++j) {
      if (std::abs(t[i][j]) > 1e-9) {
        pivot(i, j);
        break;
      }
    }
  }
  // Phase 2.
  for (int j = 0; j < cols; ++j) t[m][j] = 0.0;
  for (int j = 0; j < n; ++j) t[m][j] = c[j];
  for (int i = 0; i < m; ++i) {
    const int bj = basis[i];
    if (bj < n && c[bj] != 0.0) {
      const double f = c[bj];
      for (int j = 0; j < cols; ++j) t[m][j] -= f * t[i][j];
    }
  }
  if (!run(n + m)) return std::nullopt;
  std::vector<double> x(n, 0.0);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) x[basis[i]] = t[i][cols - 1];
  }
  double obj = 0.0;
  for (int j = 0; j < n; ++j) obj += c[j] * x[j];
  if (x_out) *x_out = x;
  return obj;
}

// Solves a MilpModel's LP relaxation with the tableau oracle. Variables must
// have finite bounds; they are shifted to start at zero.
inline std::optional<double> OracleLp(const milp::MilpModel& model) {
  const int n = model.num_variables();
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> lo(n), c(n);
  double shift = model.objective_constant();
  for (int j = 0; j < n; ++j) {
    lo[j] = model.variable(j).lower;
    c[j] = model.objective()[j];
    shift += c[j] * lo[j];
  }
  auto add = [&](std::vector<double> row, double rhs) {
    a.push_back(std::move(row));
    b.push_back(rhs);
  };
  for (int j = 0; j < n; ++j) {
    std::vector<double> row(n, 0.0);
    row[j] = 1.0;
    add(row, model.variable(j).upper - lo[j]);
  }
  for (int r = 0; r < model.num_rows(); ++r) {
    const auto& con = model.row(r);
    std::vector<double> row(n, 0.0);
    double rhs = con.rhs;
    for (const auto& t : con.terms) {
      row[t.var] += t.coef;
      rhs -= t.coef * lo[t.var];
    }
    if (con.sense != milp::Sense::kGreaterEqual) add(row, rhs);
    if (con.sense != milp::Sense::kLessEqual) {
      for (double& v : row) v = -v;
      add(row, -rhs);
    }
  }
  auto obj = TableauSimplex(a, b, c);
  if (!obj) return std::nullopt;
  return *obj + shift;
}

// Exhaustive enumeration over the binaries, each leaf solved by the oracle.
inline std::optional<double> OracleMilp(const milp::MilpModel& model) {
  std::vector<int> bins;
  for (int j = 0; j < model.num_variables(); ++j) {
    if (model.variable(j).kind == milp::VarKind::kBinary) bins.push_back(j);
  }
  std::optional<double> best;
  const long leaves = 1L << bins.size();
  for (long mask = 0; mask < leaves; ++mask) {
    milp::MilpModel leaf = model;
    for (size_t k = 0; k < bins.size(); ++k) {
      const double v = (mask >> k) & 1L ? 1.0 : 0.0;
      leaf.SetBounds(bins[k], v, v);
    }
    auto obj = OracleLp(leaf);
    if (obj && (!best || *obj < *best)) best = obj;
  }
  return best;
}

// Classic RK4 on the calendar-loss ODE, halving the step until two
// successive results agree to `rel_tol`.
inline double Rk4CalendarLoss(const battery::BatteryParams& p, double temp,
                              double soc, double q0, double duration,
                              double rel_tol = 1e-10) {
  auto f = [&](double q) {
    const double k =
        p.k_a * std::exp(-p.e_a / p.gas_constant * (1.0 / temp - 1.0 / p.t_ref)) *
            soc +
        p.k_b * std::exp(-p.e_b / p.gas_constant * (1.0 / temp - 1.0 / p.t_ref));
    return k * std::pow(1.0 + q / p.c_nom, -p.alpha);
  };
  auto integrate = [&](long steps) {
    const double h = duration / steps;
    double q = q0;
    for (long s = 0; s < steps; ++s) {
      const double k1 = f(q);
      const double k2 = f(q + 0.5 * h * k1);
      const double k3 = f(q + 0.5 * h * k2);
      const double k4 = f(q + h * k3);
      q += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return q;
  };
  long steps = 4;
  double prev = integrate(steps);
  for (int round = 0; round < 20; ++round) {
    steps *= 2;
    const double next = integrate(steps);
    if (std::abs(next - prev) <= rel_tol * std::max(1.0, std::abs(next))) {
      return next;
    }
    prev = next;
  }
  return prev;
}

}  // namespace amrplan::oracle

#endif  // AMRPLAN_TESTS_ORACLES_HPP_
