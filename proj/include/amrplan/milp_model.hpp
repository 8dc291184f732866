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

#ifndef AMRPLAN_MILP_MODEL_HPP_
#define AMRPLAN_MILP_MODEL_HPP_

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace amrplan::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { kContinuous, kBinary };
enum class Sense { kLessEqual, kEqual, kGreaterEqual };

struct Variable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lower = 0.0;
  double upper = kInf;
};

struct Term {
  int var = -1;
  double coef = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

// A minimization MILP with named columns and rows. Every row and column
// carries a tag naming the model component that produced it.
class MilpModel {
 public:
  int AddVariable(const std::string& name, VarKind kind, double lower,
                  double upper, const std::string& tag);
  int AddContinuous(const std::string& name, double lower, double upper,
                    const std::string& tag) {
    return AddVariable(name, VarKind::kContinuous, lower, upper, tag);
  }
  int AddBinary(const std::string& name, const std::string& tag) {
    return AddVariable(name, VarKind::kBinary, 0.0, 1.0, tag);
  }

  // Duplicate variables in `terms` are merged; exact zeros are dropped.
  int AddRow(const std::string& name, std::vector<Term> terms, Sense sense,
             double rhs, const std::string& tag);
  void AddTermToRow(int row, int var, double coef);

  void AddObjectiveTerm(int var, double coef);
  void AddObjectiveConstant(double value) { objective_constant_ += value; }
  void ScaleObjective(double factor);

  void SetBounds(int var, double lower, double upper);
  void SetRhs(int row, double rhs) { rows_[row].rhs = rhs; }

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  int num_binaries() const;

  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(int j) const { return variables_[j]; }
  const std::vector<Constraint>& rows() const { return rows_; }
  const Constraint& row(int r) const { return rows_[r]; }
  // Dense objective coefficients, one per variable.
  const std::vector<double>& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }

  const std::string& row_tag(int r) const { return row_tags_[r]; }
  const std::string& column_tag(int j) const { return column_tags_[j]; }

  std::optional<int> FindVariable(const std::string& name) const;
  int VariableIndex(const std::string& name) const;  // throws if absent

  double RowActivity(int r, std::span<const double> x) const;
  double ObjectiveValue(std::span<const double> x) const;
  // Largest bound or row violation of `x` (absolute).
  double MaxViolation(std::span<const double> x) const;

  // Structural checks: binary bounds, term references, complete annotation.
  // Throws ConfigError on the first failure.
  void Validate() const;
  // Rows whose tag is missing or outside `allowed`.
  std::vector<int> UnannotatedRows(const std::set<std::string>& allowed) const;

  std::map<std::string, int> RowCountsByTag() const;

 private:
  std::vector<Variable> variables_;
  std::vector<std::string> column_tags_;
  std::vector<Constraint> rows_;
  std::vector<std::string> row_tags_;
  std::vector<double> objective_;
  double objective_constant_ = 0.0;
  std::map<std::string, int> index_by_name_;
};

}  // namespace amrplan::milp

#endif  // AMRPLAN_MILP_MODEL_HPP_
