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

#include "amrplan/milp_model.hpp"

#include <algorithm>
#include <cmath>

#include "amrplan/errors.hpp"

namespace amrplan::milp {

int MilpModel::AddVariable(const std::string& name, VarKind kind,
                           double lower, double upper,
                           const std::string& tag) {
  if (index_by_name_.contains(name)) {
    throw ConfigError("duplicate variable name '" + name + "'");
  }
  if (kind == VarKind::kBinary) {
    lower = std::max(lower, 0.0);
    upper = std::min(upper, 1.0);
  }
  const int index = num_variables();
  variables_.push_back(Variable{name, kind, lower, upper});
  column_tags_.push_back(tag);
  objective_.push_back(0.0);
  index_by_name_.emplace(name, index);
  return index;
}

int MilpModel::AddRow(const std::string& name, std::vector<Term> terms,
                      Sense sense, double rhs, const std::string& tag) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> merged;
  for (const Term& t : terms) {
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
  rows_.push_back(Constraint{name, std::move(merged), sense, rhs});
  row_tags_.push_back(tag);
  return num_rows() - 1;
}

void MilpModel::AddTermToRow(int row, int var, double coef) {
  if (coef == 0.0) return;
  auto& terms = rows_[row].terms;
  auto it = std::lower_bound(
      terms.begin(), terms.end(), var,
      [](const Term& t, int v) { return t.var < v; });
  if (it != terms.end() && it->var == var) {
    it->coef += coef;
  } else {
    terms.insert(it, Term{var, coef});
  }
}

void MilpModel::AddObjectiveTerm(int var, double coef) {
  objective_[var] += coef;
}

void MilpModel::ScaleObjective(double factor) {
  for (double& c : objective_) c *= factor;
  objective_constant_ *= factor;
}

void MilpModel::SetBounds(int var, double lower, double upper) {
  variables_[var].lower = lower;
  variables_[var].upper = upper;
}

int MilpModel::num_binaries() const {
  return static_cast<int>(std::count_if(
      variables_.begin(), variables_.end(),
      [](const Variable& v) { return v.kind == VarKind::kBinary; }));
}

std::optional<int> MilpModel::FindVariable(const std::string& name) const {
  auto it = index_by_name_.find(name);
  if (it == index_by_name_.end()) return std::nullopt;
  return it->second;
}

int MilpModel::VariableIndex(const std::string& name) const {
  auto index = FindVariable(name);
  if (!index) throw ConfigError("no variable named '" + name + "'");
  return *index;
}

double MilpModel::RowActivity(int r, std::span<const double> x) const {
  double s = 0.0;
  for (const Term& t : rows_[r].terms) s += t.coef * x[t.var];
  return s;
}

double MilpModel::ObjectiveValue(std::span<const double> x) const {
  double s = objective_constant_;
  for (int j = 0; j < num_variables(); ++j) s += objective_[j] * x[j];
  return s;
}

double MilpModel::MaxViolation(std::span<const double> x) const {
  double worst = 0.0;
  for (int j = 0; j < num_variables(); ++j) {
    worst = std::max(worst, variables_[j].lower - x[j]);
    worst = std::max(worst, x[j] - variables_[j].upper);
  }
  for (int r = 0; r < num_rows(); ++r) {
    const double act = RowActivity(r, x);
    const double rhs = rows_[r].rhs;
    switch (rows_[r].sense) {
      case Sense::kLessEqual:
        worst = std::max(worst, act - rhs);
        break;
      case Sense::kGreaterEqual:
        worst = std::max(worst, rhs - act);
        break;
      case Sense::kEqual:
        worst = std::max(worst, std::abs(act - rhs));
        break;
    }
  }
  return worst;
}

void MilpModel::Validate() const {
  for (int j = 0; j < num_variables(); ++j) {
    const Variable& v = variables_[j];
    if (v.kind == VarKind::kBinary && (v.lower < 0.0 || v.upper > 1.0)) {
      throw ConfigError("binary variable '" + v.name + "' has bounds outside [0,1]");
    }
    if (v.lower > v.upper) {
      throw ConfigError("variable '" + v.name + "' has crossed bounds");
    }
    if (column_tags_[j].empty()) {
      throw ConfigError("variable '" + v.name + "' has no tag");
    }
  }
  for (int r = 0; r < num_rows(); ++r) {
    for (const Term& t : rows_[r].terms) {
      if (t.var < 0 || t.var >= num_variables()) {
        throw ConfigError("row '" + rows_[r].name +
                          "' references an undeclared variable");
      }
    }
    if (row_tags_[r].empty()) {
      throw ConfigError("row '" + rows_[r].name + "' has no tag");
    }
  }
}

std::vector<int> MilpModel::UnannotatedRows(
    const std::set<std::string>& allowed) const {
  std::vector<int> out;
  for (int r = 0; r < num_rows(); ++r) {
    if (!allowed.contains(row_tags_[r])) out.push_back(r);
  }
  return out;
}

std::map<std::string, int> MilpModel::RowCountsByTag() const {
  std::map<std::string, int> counts;
  for (const auto& tag : row_tags_) ++counts[tag];
  return counts;
}

}  // namespace amrplan::milp
