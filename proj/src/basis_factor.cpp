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

#include "basis_factor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace amrplan::solver::internal {
namespace {

constexpr double kSingularTol = 1e-11;
constexpr double kDropTol = 1e-14;

}  // namespace

std::vector<int> BasisFactor::Factorize(int m, const ColumnFn& column,
                                        std::vector<int>& free_rows) {
  m_ = m;
  pivot_row_.clear();
  step_position_.clear();
  diag_.clear();
  l_start_.assign(1, 0);
  l_.clear();
  u_start_.assign(1, 0);
  u_.clear();
  l_steps_.clear();
  etas_.clear();
  work_.assign(m, 0.0);

  std::vector<std::vector<SparseEntry>> cols(m);
  for (int p = 0; p < m; ++p) column(p, cols[p]);
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return cols[a].size() < cols[b].size();
  });

  std::vector<int> row_step(m, -1);
  std::vector<double> x(m, 0.0);
  std::vector<char> mark(m, 0);
  std::vector<int> pattern;
  std::vector<int> singular;
  auto touch = [&](int r) {
    if (!mark[r]) {
      mark[r] = 1;
      pattern.push_back(r);
    }
  };

  for (int p : order) {
    pattern.clear();
    double col_max = 0.0;
    for (const auto& e : cols[p]) {
      x[e.index] += e.value;
      col_max = std::max(col_max, std::abs(e.value));
      touch(e.index);
    }
    for (int s : l_steps_) {
      const double xs = x[pivot_row_[s]];
      if (xs == 0.0) continue;
      for (int q = l_start_[s]; q < l_start_[s + 1]; ++q) {
        x[l_[q].index] -= l_[q].value * xs;
        touch(l_[q].index);
      }
    }
    int best_row = -1;
    double best = 0.0;
    for (int r : pattern) {
      if (row_step[r] >= 0) continue;
      const double a = std::abs(x[r]);
      if (a > best || (a == best && a > 0.0 && r < best_row)) {
        best = a;
        best_row = r;
      }
    }
    if (best <= kSingularTol * std::max(1.0, col_max)) {
      singular.push_back(p);
    } else {
      const int k = static_cast<int>(pivot_row_.size());
      const double piv = x[best_row];
      for (int r : pattern) {
        if (row_step[r] >= 0) {
          if (x[r] != 0.0) u_.push_back({row_step[r], x[r]});
        } else if (r != best_row && std::abs(x[r]) > kDropTol) {
          l_.push_back({r, x[r] / piv});
        }
      }
      if (static_cast<int>(l_.size()) > l_start_.back()) l_steps_.push_back(k);
      u_start_.push_back(static_cast<int>(u_.size()));
      l_start_.push_back(static_cast<int>(l_.size()));
      row_step[best_row] = k;
      pivot_row_.push_back(best_row);
      step_position_.push_back(p);
      diag_.push_back(piv);
    }
    for (int r : pattern) {
      x[r] = 0.0;
      mark[r] = 0;
    }
  }
  free_rows.clear();
  for (int r = 0; r < m; ++r) {
    if (row_step[r] < 0) free_rows.push_back(r);
  }
  return singular;
}

void BasisFactor::Ftran(std::vector<double>& rhs) const {
  for (int s : l_steps_) {
    const double xs = rhs[pivot_row_[s]];
    if (xs == 0.0) continue;
    for (int q = l_start_[s]; q < l_start_[s + 1]; ++q) {
      rhs[l_[q].index] -= l_[q].value * xs;
    }
  }
  for (int k = m_ - 1; k >= 0; --k) {
    const double z = rhs[pivot_row_[k]] / diag_[k];
    if (z != 0.0) {
      for (int q = u_start_[k]; q < u_start_[k + 1]; ++q) {
        rhs[pivot_row_[u_[q].index]] -= u_[q].value * z;
      }
    }
    work_[step_position_[k]] = z;
  }
  std::copy(work_.begin(), work_.end(), rhs.begin());
  for (const Eta& eta : etas_) {
    const double xp = rhs[eta.position] / eta.pivot;
    rhs[eta.position] = xp;
    if (xp == 0.0) continue;
    for (const auto& e : eta.entries) rhs[e.index] -= e.value * xp;
  }
}

void BasisFactor::Btran(std::vector<double>& rhs) const {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = rhs[it->position];
    for (const auto& e : it->entries) s -= e.value * rhs[e.index];
    rhs[it->position] = s / it->pivot;
  }
  for (int k = 0; k < m_; ++k) {
    double s = rhs[step_position_[k]];
    for (int q = u_start_[k]; q < u_start_[k + 1]; ++q) {
      s -= u_[q].value * work_[u_[q].index];
    }
    work_[k] = s / diag_[k];
  }
  for (int k = m_ - 1; k >= 0; --k) {
    double s = work_[k];
    for (int q = l_start_[k]; q < l_start_[k + 1]; ++q) {
      s -= l_[q].value * rhs[l_[q].index];
    }
    rhs[pivot_row_[k]] = s;
  }
}

void BasisFactor::Update(int position, const std::vector<double>& alpha) {
  Eta eta{position, alpha[position], {}};
  for (int i = 0; i < m_; ++i) {
    if (i != position && std::abs(alpha[i]) > kDropTol) {
      eta.entries.push_back({i, alpha[i]});
    }
  }
  etas_.push_back(std::move(eta));
}

double BasisFactor::PivotRatio() const {
  if (diag_.empty()) return 1.0;
  double lo = std::abs(diag_[0]);
  double hi = lo;
  for (double d : diag_) {
    lo = std::min(lo, std::abs(d));
    hi = std::max(hi, std::abs(d));
  }
  return lo / hi;
}

}  // namespace amrplan::solver::internal
