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

#ifndef AMRPLAN_SOLVER_HPP_
#define AMRPLAN_SOLVER_HPP_

#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "amrplan/milp_model.hpp"

namespace amrplan::solver {

enum class Status {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kGapLimit,
  kNodeLimit,
  kTimeLimit,
};

const char* StatusName(Status status);

enum class BranchRule { kMostFractional, kPseudoCost };
enum class SearchOrder { kBestBound, kDepthFirst };

struct SolveOptions {
  double feas_tol = 1e-7;
  double int_tol = 1e-6;
  // Relative gap (incumbent - bound) / max(1, |incumbent|).
  double gap_tol = 1e-6;
  long node_limit = 2'000'000;
  double time_limit = std::numeric_limits<double>::infinity();  // seconds
  BranchRule branch_rule = BranchRule::kMostFractional;
  SearchOrder search = SearchOrder::kBestBound;
  // Worker threads for node LPs. The result does not depend on this value.
  int threads = 1;
  // Open nodes solved per round; part of the search definition.
  int batch_size = 8;
  bool log = false;
};

struct SolveResult {
  Status status = Status::kInfeasible;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double bound = -std::numeric_limits<double>::infinity();
  std::vector<double> x;  // by variable index; empty without a solution
  std::map<std::string, double> assignment;
  std::vector<double> row_duals;      // LP solves only
  std::vector<double> reduced_costs;  // LP solves only
  long nodes = 0;
  long lp_iterations = 0;
  double wall_time = 0.0;
  // (global lower bound, incumbent) recorded after every round.
  std::vector<std::pair<double, double>> progress;

  bool has_solution() const { return !x.empty(); }
  double gap() const;
};

// Solves the LP relaxation (binaries relaxed to [0,1]).
SolveResult SolveLp(const milp::MilpModel& model,
                    const SolveOptions& options = {});

// Branch-and-bound over the binary variables.
SolveResult SolveMilp(const milp::MilpModel& model,
                      const SolveOptions& options = {});

// LP text format (see docs/lp-format.md).
void WriteLp(const milp::MilpModel& model, std::ostream& out);
void ExportLpFile(const milp::MilpModel& model, const std::string& path);
milp::MilpModel ReadLp(std::istream& in);
milp::MilpModel ImportLpFile(const std::string& path);

}  // namespace amrplan::solver

#endif  // AMRPLAN_SOLVER_HPP_
