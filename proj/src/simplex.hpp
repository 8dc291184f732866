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

#ifndef AMRPLAN_SRC_SIMPLEX_HPP_
#define AMRPLAN_SRC_SIMPLEX_HPP_

#include <cstdint>
#include <vector>

#include "amrplan/milp_model.hpp"
#include "basis_factor.hpp"

namespace amrplan::solver::internal {

// Column- and row-wise copies of the constraint matrix.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> col_start;
  std::vector<int> col_index;  // row of each entry
  std::vector<double> col_value;
  std::vector<int> row_start;
  std::vector<int> row_index;  // column of each entry
  std::vector<double> row_value;
};

// min c.x  s.t.  row_lo <= A x <= row_hi,  col_lo <= x <= col_hi
// after row equilibration and objective scaling.
struct LpData {
  int m = 0;
  int n = 0;
  SparseMatrix a;
  std::vector<double> cost;
  std::vector<double> col_lo;
  std::vector<double> col_hi;
  std::vector<double> row_lo;
  std::vector<double> row_hi;
  std::vector<double> row_scale;  // scaled row = original row / row_scale
  double obj_scale = 1.0;         // scaled cost = original cost * obj_scale
  double obj_offset = 0.0;        // original units
  std::vector<char> is_binary;
};

LpData BuildLpData(const milp::MilpModel& model);

enum class VarState : uint8_t { kBasic, kAtLower, kAtUpper, kFree };

struct Basis {
  std::vector<int> basic;            // variable at each position
  std::vector<VarState> state;       // n structurals then m logicals
  bool empty() const { return basic.empty(); }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct Tolerances {
  double primal = 1e-7;
  double dual = 1e-7;
  double pivot = 1e-9;
};

// Bounded revised simplex on A x - y = 0 where the logical y carries the row
// bounds. Primal (composite phase 1 / phase 2) for cold starts, dual simplex
// for warm starts whose basis is still dual feasible.
class Simplex {
 public:
  explicit Simplex(const LpData& data, Tolerances tol = {});

  // Structural bounds for the next solve (branching changes them).
  void SetColumnBounds(const std::vector<double>& lo,
                       const std::vector<double>& hi);
  LpStatus Solve(const Basis* warm);

  // Values in the original (unscaled) units.
  double Objective() const;
  std::vector<double> StructuralValues() const;
  std::vector<double> RowDuals() const;
  std::vector<double> ReducedCosts() const;
  Basis CurrentBasis() const { return Basis{basic_, state_}; }
  long iterations() const { return iterations_; }

 private:
  int total() const { return n_ + m_; }
  double Lower(int j) const { return lo_[j]; }
  double Upper(int j) const { return hi_[j]; }
  void SetupCold();
  void SetupWarm(const Basis& warm);
  void PlaceNonbasic(int j);
  void Refactor();
  void ComputePrimal();
  void ComputeDuals(bool phase1);
  void ColumnOf(int j, std::vector<double>& dense) const;
  double DotColumn(int j, const std::vector<double>& y) const;
  double PrimalInfeasibility() const;
  bool DualFeasibleAfterFlips();
  void Pivot(int position, int entering, const std::vector<double>& alpha);

  LpStatus RunPrimal();
  // Returns false when the start is not dual feasible.
  bool RunDual(LpStatus& status);

  const LpData& d_;
  Tolerances tol_;
  int m_;
  int n_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<double> cost_;  // phase-2 cost of every variable
  std::vector<double> x_;
  std::vector<double> dj_;
  std::vector<double> y_;
  std::vector<double> phase_cost_;
  std::vector<int> basic_;
  std::vector<int> pos_;  // position of a basic variable, else -1
  std::vector<VarState> state_;
  BasisFactor factor_;
  long iterations_ = 0;
  long iteration_limit_ = 0;
  int repairs_ = 0;
};

}  // namespace amrplan::solver::internal

#endif  // AMRPLAN_SRC_SIMPLEX_HPP_
