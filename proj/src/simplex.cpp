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

#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "amrplan/errors.hpp"

namespace amrplan::solver::internal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kRefactorInterval = 50;
constexpr int kMaxRepairs = 20;
constexpr int kDegenerateLimit = 50;

double PowerOfTwoNear(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) return 1.0;
  return std::ldexp(1.0, static_cast<int>(std::lround(std::log2(v))));
}

}  // namespace

LpData BuildLpData(const milp::MilpModel& model) {
  LpData d;
  d.n = model.num_variables();
  d.m = model.num_rows();
  d.a.rows = d.m;
  d.a.cols = d.n;
  d.row_scale.assign(d.m, 1.0);
  d.row_lo.assign(d.m, -kInf);
  d.row_hi.assign(d.m, kInf);
  d.is_binary.assign(d.n, 0);

  d.a.row_start.assign(1, 0);
  for (int r = 0; r < d.m; ++r) {
    const auto& row = model.row(r);
    double amax = 0.0;
    for (const auto& t : row.terms) amax = std::max(amax, std::abs(t.coef));
    const double s = PowerOfTwoNear(amax);
    d.row_scale[r] = s;
    for (const auto& t : row.terms) {
      d.a.row_index.push_back(t.var);
      d.a.row_value.push_back(t.coef / s);
    }
    d.a.row_start.push_back(static_cast<int>(d.a.row_index.size()));
    const double rhs = row.rhs / s;
    if (row.sense != milp::Sense::kGreaterEqual) d.row_hi[r] = rhs;
    if (row.sense != milp::Sense::kLessEqual) d.row_lo[r] = rhs;
  }

  std::vector<int> count(d.n + 1, 0);
  for (int j : d.a.row_index) ++count[j + 1];
  for (int j = 0; j < d.n; ++j) count[j + 1] += count[j];
  d.a.col_start = count;
  d.a.col_index.resize(d.a.row_index.size());
  d.a.col_value.resize(d.a.row_index.size());
  std::vector<int> fill(count.begin(), count.end() - 1);
  for (int r = 0; r < d.m; ++r) {
    for (int q = d.a.row_start[r]; q < d.a.row_start[r + 1]; ++q) {
      const int slot = fill[d.a.row_index[q]]++;
      d.a.col_index[slot] = r;
      d.a.col_value[slot] = d.a.row_value[q];
    }
  }

  double cmax = 0.0;
  for (double c : model.objective()) cmax = std::max(cmax, std::abs(c));
  d.obj_scale = 1.0 / PowerOfTwoNear(cmax);
  d.obj_offset = model.objective_constant();
  d.cost.resize(d.n);
  d.col_lo.resize(d.n);
  d.col_hi.resize(d.n);
  for (int j = 0; j < d.n; ++j) {
    const auto& v = model.variable(j);
    d.cost[j] = model.objective()[j] * d.obj_scale;
    d.col_lo[j] = v.lower;
    d.col_hi[j] = v.upper;
    d.is_binary[j] = v.kind == milp::VarKind::kBinary;
  }
  return d;
}

Simplex::Simplex(const LpData& data, Tolerances tol)
    : d_(data), tol_(tol), m_(data.m), n_(data.n) {
  lo_.resize(total());
  hi_.resize(total());
  cost_.assign(total(), 0.0);
  for (int j = 0; j < n_; ++j) {
    lo_[j] = d_.col_lo[j];
    hi_[j] = d_.col_hi[j];
    cost_[j] = d_.cost[j];
  }
  for (int i = 0; i < m_; ++i) {
    lo_[n_ + i] = d_.row_lo[i];
    hi_[n_ + i] = d_.row_hi[i];
  }
  x_.assign(total(), 0.0);
  dj_.assign(total(), 0.0);
  y_.assign(m_, 0.0);
  phase_cost_.assign(m_, 0.0);
  pos_.assign(total(), -1);
  state_.assign(total(), VarState::kAtLower);
}

void Simplex::SetColumnBounds(const std::vector<double>& lo,
                              const std::vector<double>& hi) {
  for (int j = 0; j < n_; ++j) {
    lo_[j] = lo[j];
    hi_[j] = hi[j];
  }
}

void Simplex::PlaceNonbasic(int j) {
  if (state_[j] == VarState::kAtUpper && std::isfinite(hi_[j])) {
    x_[j] = hi_[j];
  } else if (std::isfinite(lo_[j])) {
    state_[j] = VarState::kAtLower;
    x_[j] = lo_[j];
  } else if (std::isfinite(hi_[j])) {
    state_[j] = VarState::kAtUpper;
    x_[j] = hi_[j];
  } else {
    state_[j] = VarState::kFree;
    x_[j] = 0.0;
  }
}

void Simplex::SetupCold() {
  basic_.resize(m_);
  std::fill(pos_.begin(), pos_.end(), -1);
  for (int j = 0; j < n_; ++j) {
    state_[j] = VarState::kAtLower;
    PlaceNonbasic(j);
  }
  for (int i = 0; i < m_; ++i) {
    basic_[i] = n_ + i;
    pos_[n_ + i] = i;
    state_[n_ + i] = VarState::kBasic;
  }
}

void Simplex::SetupWarm(const Basis& warm) {
  if (static_cast<int>(warm.basic.size()) != m_ ||
      static_cast<int>(warm.state.size()) != total()) {
    SetupCold();
    return;
  }
  basic_ = warm.basic;
  state_ = warm.state;
  std::fill(pos_.begin(), pos_.end(), -1);
  for (int p = 0; p < m_; ++p) pos_[basic_[p]] = p;
  for (int j = 0; j < total(); ++j) {
    if (pos_[j] < 0) {
      if (state_[j] == VarState::kBasic) state_[j] = VarState::kAtLower;
      PlaceNonbasic(j);
    } else {
      state_[j] = VarState::kBasic;
    }
  }
}

void Simplex::Refactor() {
  std::vector<int> free_rows;
  auto column = [&](int p, std::vector<SparseEntry>& out) {
    out.clear();
    const int j = basic_[p];
    if (j < n_) {
      for (int q = d_.a.col_start[j]; q < d_.a.col_start[j + 1]; ++q) {
        out.push_back({d_.a.col_index[q], d_.a.col_value[q]});
      }
    } else {
      out.push_back({j - n_, -1.0});
    }
  };
  while (true) {
    std::vector<int> singular = factor_.Factorize(m_, column, free_rows);
    if (singular.empty()) return;
    if (++repairs_ > kMaxRepairs) {
      throw NumericError("basis repeatedly singular after " +
                         std::to_string(kMaxRepairs) +
                         " repairs; pivot ratio " +
                         std::to_string(factor_.PivotRatio()));
    }
    for (size_t k = 0; k < singular.size(); ++k) {
      const int p = singular[k];
      const int out = basic_[p];
      const int in = n_ + free_rows[k];
      basic_[p] = in;
      pos_[in] = p;
      state_[in] = VarState::kBasic;
      pos_[out] = -1;
      state_[out] = (std::isfinite(hi_[out]) &&
                     std::abs(x_[out] - hi_[out]) < std::abs(x_[out] - lo_[out]))
                        ? VarState::kAtUpper
                        : VarState::kAtLower;
      PlaceNonbasic(out);
    }
  }
}

void Simplex::ColumnOf(int j, std::vector<double>& dense) const {
  std::fill(dense.begin(), dense.end(), 0.0);
  if (j < n_) {
    for (int q = d_.a.col_start[j]; q < d_.a.col_start[j + 1]; ++q) {
      dense[d_.a.col_index[q]] = d_.a.col_value[q];
    }
  } else {
    dense[j - n_] = -1.0;
  }
}

double Simplex::DotColumn(int j, const std::vector<double>& y) const {
  if (j >= n_) return -y[j - n_];
  double s = 0.0;
  for (int q = d_.a.col_start[j]; q < d_.a.col_start[j + 1]; ++q) {
    s += d_.a.col_value[q] * y[d_.a.col_index[q]];
  }
  return s;
}

void Simplex::ComputePrimal() {
  std::vector<double> rhs(m_, 0.0);
  for (int j = 0; j < total(); ++j) {
    if (state_[j] == VarState::kBasic || x_[j] == 0.0) continue;
    if (j < n_) {
      for (int q = d_.a.col_start[j]; q < d_.a.col_start[j + 1]; ++q) {
        rhs[d_.a.col_index[q]] -= d_.a.col_value[q] * x_[j];
      }
    } else {
      rhs[j - n_] += x_[j];
    }
  }
  factor_.Ftran(rhs);
  for (int p = 0; p < m_; ++p) x_[basic_[p]] = rhs[p];
}

void Simplex::ComputeDuals(bool phase1) {
  for (int p = 0; p < m_; ++p) {
    const int j = basic_[p];
    if (phase1) {
      double c = 0.0;
      if (x_[j] < lo_[j] - tol_.primal) c = -1.0;
      if (x_[j] > hi_[j] + tol_.primal) c = 1.0;
      phase_cost_[p] = c;
      y_[p] = c;
    } else {
      y_[p] = cost_[j];
    }
  }
  factor_.Btran(y_);
  for (int j = 0; j < total(); ++j) {
    if (state_[j] == VarState::kBasic) {
      dj_[j] = 0.0;
      continue;
    }
    const double c = phase1 ? 0.0 : cost_[j];
    dj_[j] = c - DotColumn(j, y_);
  }
}

double Simplex::PrimalInfeasibility() const {
  double sum = 0.0;
  for (int j : basic_) {
    if (x_[j] < lo_[j] - tol_.primal) sum += lo_[j] - x_[j];
    if (x_[j] > hi_[j] + tol_.primal) sum += x_[j] - hi_[j];
  }
  return sum;
}

void Simplex::Pivot(int position, int entering,
                    const std::vector<double>& alpha) {
  const int leaving = basic_[position];
  pos_[leaving] = -1;
  basic_[position] = entering;
  pos_[entering] = position;
  state_[entering] = VarState::kBasic;
  factor_.Update(position, alpha);
  ++iterations_;
}

LpStatus Simplex::RunPrimal() {
  std::vector<double> alpha(m_);
  int degenerate = 0;
  bool bland = false;
  while (true) {
    if (iterations_ >= iteration_limit_) return LpStatus::kIterationLimit;
    if (factor_.num_updates() >= kRefactorInterval) {
      Refactor();
      ComputePrimal();
    }
    const bool phase1 = PrimalInfeasibility() > 0.0;
    ComputeDuals(phase1);

    int q = -1;
    double best = 0.0;
    for (int j = 0; j < total(); ++j) {
      const VarState s = state_[j];
      if (s == VarState::kBasic || lo_[j] == hi_[j]) continue;
      const double dj = dj_[j];
      const bool eligible =
          (s == VarState::kAtLower && dj < -tol_.dual) ||
          (s == VarState::kAtUpper && dj > tol_.dual) ||
          (s == VarState::kFree && std::abs(dj) > tol_.dual);
      if (!eligible) continue;
      if (bland) {
        q = j;
        break;
      }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        q = j;
      }
    }
    if (q < 0) return phase1 ? LpStatus::kInfeasible : LpStatus::kOptimal;

    ColumnOf(q, alpha);
    factor_.Ftran(alpha);
    const double dir = dj_[q] < 0.0 ? 1.0 : -1.0;
    const double flip = hi_[q] - lo_[q];

    // Bound each basic variable would stop at, or NaN when it never blocks.
    auto blocking = [&](int p, double rate) {
      const int j = basic_[p];
      const double xj = x_[j];
      if (rate < 0.0) {
        if (phase1 && xj > hi_[j] + tol_.primal) return hi_[j];
        if (phase1 && xj < lo_[j] - tol_.primal) return std::nan("");
        return std::isfinite(lo_[j]) ? lo_[j] : std::nan("");
      }
      if (phase1 && xj < lo_[j] - tol_.primal) return lo_[j];
      if (phase1 && xj > hi_[j] + tol_.primal) return std::nan("");
      return std::isfinite(hi_[j]) ? hi_[j] : std::nan("");
    };

    double theta_max = kInf;
    for (int p = 0; p < m_; ++p) {
      const double a = alpha[p];
      if (std::abs(a) <= tol_.pivot) continue;
      const double rate = -dir * a;
      const double b = blocking(p, rate);
      if (std::isnan(b)) continue;
      const double relaxed =
          rate < 0.0 ? (x_[basic_[p]] - b + tol_.primal) / -rate
                     : (b - x_[basic_[p]] + tol_.primal) / rate;
      theta_max = std::min(theta_max, relaxed);
    }
    if (!std::isfinite(theta_max) && !std::isfinite(flip)) {
      if (phase1) throw NumericError("phase-1 ratio test found no blocking row");
      return LpStatus::kUnbounded;
    }

    if (flip <= theta_max) {
      x_[q] += dir * flip;
      for (int p = 0; p < m_; ++p) x_[basic_[p]] -= dir * flip * alpha[p];
      state_[q] = dir > 0 ? VarState::kAtUpper : VarState::kAtLower;
      x_[q] = dir > 0 ? hi_[q] : lo_[q];
      ++iterations_;
      degenerate = 0;
      continue;
    }

    int leave = -1;
    double leave_bound = 0.0;
    double theta = 0.0;
    double best_alpha = 0.0;
    for (int p = 0; p < m_; ++p) {
      const double a = alpha[p];
      if (std::abs(a) <= tol_.pivot) continue;
      const double rate = -dir * a;
      const double b = blocking(p, rate);
      if (std::isnan(b)) continue;
      const double ratio = rate < 0.0 ? (x_[basic_[p]] - b) / -rate
                                      : (b - x_[basic_[p]]) / rate;
      if (bland) {
        if (leave < 0 || ratio < theta - 1e-12 ||
            (ratio <= theta + 1e-12 && basic_[p] < basic_[leave])) {
          leave = p;
          theta = ratio;
          leave_bound = b;
        }
      } else if (ratio <= theta_max && std::abs(a) > best_alpha) {
        best_alpha = std::abs(a);
        leave = p;
        theta = ratio;
        leave_bound = b;
      }
    }
    if (leave < 0) throw NumericError("ratio test lost its blocking row");
    theta = std::max(theta, 0.0);

    x_[q] += dir * theta;
    for (int p = 0; p < m_; ++p) x_[basic_[p]] -= dir * theta * alpha[p];
    const int out = basic_[leave];
    x_[out] = leave_bound;
    state_[out] = leave_bound == lo_[out] ? VarState::kAtLower : VarState::kAtUpper;
    Pivot(leave, q, alpha);

    if (theta < 1e-12) {
      if (++degenerate > kDegenerateLimit) bland = true;
    } else {
      degenerate = 0;
      bland = false;
    }
  }
}

bool Simplex::DualFeasibleAfterFlips() {
  bool flipped = false;
  for (int j = 0; j < total(); ++j) {
    const VarState s = state_[j];
    if (s == VarState::kBasic || lo_[j] == hi_[j]) continue;
    const double dj = dj_[j];
    if (s == VarState::kAtLower && dj < -tol_.dual) {
      if (!std::isfinite(hi_[j])) return false;
      state_[j] = VarState::kAtUpper;
      x_[j] = hi_[j];
      flipped = true;
    } else if (s == VarState::kAtUpper && dj > tol_.dual) {
      if (!std::isfinite(lo_[j])) return false;
      state_[j] = VarState::kAtLower;
      x_[j] = lo_[j];
      flipped = true;
    } else if (s == VarState::kFree && std::abs(dj) > tol_.dual) {
      return false;
    }
  }
  if (flipped) ComputePrimal();
  return true;
}

bool Simplex::RunDual(LpStatus& status) {
  ComputeDuals(false);
  if (!DualFeasibleAfterFlips()) return false;
  std::vector<double> rho(m_);
  std::vector<double> alpha(m_);
  std::vector<double> row(total());
  int degenerate = 0;
  bool bland = false;
  int mismatches = 0;
  while (true) {
    if (iterations_ >= iteration_limit_) {
      status = LpStatus::kIterationLimit;
      return true;
    }
    if (factor_.num_updates() >= kRefactorInterval) {
      Refactor();
      ComputePrimal();
      ComputeDuals(false);
    }
    int p = -1;
    double worst = 0.0;
    for (int k = 0; k < m_; ++k) {
      const int j = basic_[k];
      const double v = std::max(lo_[j] - x_[j], x_[j] - hi_[j]);
      if (v <= tol_.primal) continue;
      if (bland) {
        if (p < 0 || j < basic_[p]) p = k;
      } else if (v > worst) {
        worst = v;
        p = k;
      }
    }
    if (p < 0) {
      status = LpStatus::kOptimal;
      return true;
    }
    const int r = basic_[p];
    const bool to_lower = x_[r] < lo_[r];

    std::fill(rho.begin(), rho.end(), 0.0);
    rho[p] = 1.0;
    factor_.Btran(rho);
    std::fill(row.begin(), row.end(), 0.0);
    for (int i = 0; i < m_; ++i) {
      const double ri = rho[i];
      if (ri == 0.0) continue;
      for (int q = d_.a.row_start[i]; q < d_.a.row_start[i + 1]; ++q) {
        row[d_.a.row_index[q]] += ri * d_.a.row_value[q];
      }
      row[n_ + i] = -ri;
    }

    // x_r moves by -row[j] * (change of x_j); pick the direction that
    // restores its violated bound.
    auto eligible = [&](int j) {
      const VarState s = state_[j];
      if (s == VarState::kBasic || lo_[j] == hi_[j]) return false;
      const double a = row[j];
      if (std::abs(a) <= tol_.pivot) return false;
      if (s == VarState::kFree) return true;
      const bool up = s == VarState::kAtLower;
      return to_lower ? (up ? a < 0.0 : a > 0.0) : (up ? a > 0.0 : a < 0.0);
    };
    auto slack = [&](int j) {
      switch (state_[j]) {
        case VarState::kAtLower:
          return std::max(dj_[j], 0.0);
        case VarState::kAtUpper:
          return std::max(-dj_[j], 0.0);
        default:
          return std::abs(dj_[j]);
      }
    };
    double theta_max = kInf;
    for (int j = 0; j < total(); ++j) {
      if (!eligible(j)) continue;
      theta_max = std::min(theta_max, (slack(j) + tol_.dual) / std::abs(row[j]));
    }
    if (!std::isfinite(theta_max)) {
      status = LpStatus::kInfeasible;
      return true;
    }
    int q = -1;
    double best = 0.0;
    double step = 0.0;
    for (int j = 0; j < total(); ++j) {
      if (!eligible(j)) continue;
      const double ratio = slack(j) / std::abs(row[j]);
      if (ratio > theta_max) continue;
      if (bland) {
        if (q < 0 || ratio < step - 1e-12) {
          q = j;
          step = ratio;
        }
      } else if (std::abs(row[j]) > best) {
        best = std::abs(row[j]);
        q = j;
        step = ratio;
      }
    }

    ColumnOf(q, alpha);
    factor_.Ftran(alpha);
    if (std::abs(alpha[p] - row[q]) > 1e-7 * (1.0 + std::abs(alpha[p]))) {
      if (++mismatches > 5) {
        throw NumericError("dual simplex pivot mismatch; pivot ratio " +
                           std::to_string(factor_.PivotRatio()));
      }
      Refactor();
      ComputePrimal();
      ComputeDuals(false);
      continue;
    }
    const double bound = to_lower ? lo_[r] : hi_[r];
    const double delta = (x_[r] - bound) / alpha[p];
    x_[q] += delta;
    for (int k = 0; k < m_; ++k) x_[basic_[k]] -= delta * alpha[k];
    x_[r] = bound;
    state_[r] = to_lower ? VarState::kAtLower : VarState::kAtUpper;
    Pivot(p, q, alpha);
    ComputeDuals(false);

    if (step < 1e-12) {
      if (++degenerate > kDegenerateLimit) bland = true;
    } else {
      degenerate = 0;
      bland = false;
    }
  }
}

LpStatus Simplex::Solve(const Basis* warm) {
  iterations_ = 0;
  iteration_limit_ = 50L * (m_ + n_) + 10000;
  repairs_ = 0;
  const bool use_warm = warm != nullptr && !warm->empty();
  if (use_warm) {
    SetupWarm(*warm);
  } else {
    SetupCold();
  }
  Refactor();
  ComputePrimal();
  if (use_warm) {
    LpStatus status;
    if (RunDual(status) && status == LpStatus::kIterationLimit) return status;
  }
  for (int attempt = 0; attempt < 4; ++attempt) {
    const LpStatus status = RunPrimal();
    if (status != LpStatus::kOptimal) return status;
    Refactor();
    ComputePrimal();
    if (PrimalInfeasibility() > 0.0) continue;
    ComputeDuals(false);
    bool dual_ok = true;
    for (int j = 0; j < total() && dual_ok; ++j) {
      const VarState s = state_[j];
      if (s == VarState::kBasic || lo_[j] == hi_[j]) continue;
      if ((s == VarState::kAtLower && dj_[j] < -tol_.dual) ||
          (s == VarState::kAtUpper && dj_[j] > tol_.dual) ||
          (s == VarState::kFree && std::abs(dj_[j]) > tol_.dual)) {
        dual_ok = false;
      }
    }
    if (dual_ok) return LpStatus::kOptimal;
  }
  return LpStatus::kOptimal;
}

double Simplex::Objective() const {
  double s = 0.0;
  for (int j = 0; j < n_; ++j) s += cost_[j] * x_[j];
  return s / d_.obj_scale + d_.obj_offset;
}

std::vector<double> Simplex::StructuralValues() const {
  return std::vector<double>(x_.begin(), x_.begin() + n_);
}

std::vector<double> Simplex::RowDuals() const {
  std::vector<double> out(m_);
  for (int i = 0; i < m_; ++i) out[i] = y_[i] / d_.row_scale[i] / d_.obj_scale;
  return out;
}

std::vector<double> Simplex::ReducedCosts() const {
  std::vector<double> out(n_);
  for (int j = 0; j < n_; ++j) out[j] = dj_[j] / d_.obj_scale;
  return out;
}

}  // namespace amrplan::solver::internal
