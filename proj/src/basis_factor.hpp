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

#ifndef AMRPLAN_SRC_BASIS_FACTOR_HPP_
#define AMRPLAN_SRC_BASIS_FACTOR_HPP_

#include <functional>
#include <vector>

namespace amrplan::solver::internal {

struct SparseEntry {
  int index;
  double value;
};

// LU factors of a simplex basis with product-form updates.
//
// Columns are factorized left-looking with partial pivoting; singleton
// columns go first so slack-heavy bases cost almost nothing. After a pivot
// the new basis is B E, and E^-1 is kept as an eta vector until the next
// refactorization.
class BasisFactor {
 public:
  using ColumnFn = std::function<void(int position, std::vector<SparseEntry>&)>;

  // Factorizes the m x m basis whose column at `position` is produced by
  // `column`. Returns the positions that could not be pivoted; `free_rows`
  // then receives the rows left without a pivot, in the same count.
  std::vector<int> Factorize(int m, const ColumnFn& column,
                             std::vector<int>& free_rows);

  // In place: rhs (row space) -> B^-1 rhs (position space).
  void Ftran(std::vector<double>& rhs) const;
  // In place: rhs (position space) -> B^-T rhs (row space).
  void Btran(std::vector<double>& rhs) const;

  // Records the pivot that replaces basis position `position`; `alpha` is
  // the FTRAN'd entering column.
  void Update(int position, const std::vector<double>& alpha);

  int num_updates() const { return static_cast<int>(etas_.size()); }
  // Ratio of smallest to largest |U diagonal|, a cheap condition proxy.
  double PivotRatio() const;

 private:
  struct Eta {
    int position;
    double pivot;
    std::vector<SparseEntry> entries;  // excludes the pivot position
  };

  int m_ = 0;
  std::vector<int> pivot_row_;       // by step
  std::vector<int> step_position_;   // by step
  std::vector<double> diag_;         // by step
  std::vector<int> l_start_;         // by step, into l_
  std::vector<SparseEntry> l_;       // row-indexed multipliers
  std::vector<int> u_start_;         // by step, into u_
  std::vector<SparseEntry> u_;       // step-indexed entries above diagonal
  std::vector<int> l_steps_;         // steps with a nonempty L column
  std::vector<Eta> etas_;
  mutable std::vector<double> work_;
};

}  // namespace amrplan::solver::internal

#endif  // AMRPLAN_SRC_BASIS_FACTOR_HPP_
