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

#include "amrplan/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <set>

#include <omp.h>
#include <spdlog/spdlog.h>

#include "amrplan/errors.hpp"
#include "simplex.hpp"

namespace amrplan::solver {
namespace {

using internal::Basis;
using internal::LpData;
using internal::LpStatus;
using internal::Simplex;

constexpr double kInf = std::numeric_limits<double>::infinity();

double RelativeGap(double incumbent, double bound) {
  if (!std::isfinite(incumbent)) return kInf;
  return std::max(0.0, incumbent - bound) / std::max(1.0, std::abs(incumbent));
}

internal::Tolerances MakeTolerances(const SolveOptions& options) {
  internal::Tolerances tol;
  tol.primal = options.feas_tol;
  tol.dual = options.feas_tol;
  return tol;
}

void FillAssignment(const milp::MilpModel& model, SolveResult& result) {
  result.assignment.clear();
  for (int j = 0; j < model.num_variables(); ++j) {
    result.assignment.emplace(model.variable(j).name, result.x[j]);
  }
}

struct Node {
  long id = 0;
  int depth = 0;
  double bound = -kInf;
  std::vector<std::pair<int, double>> fixes;
  std::shared_ptr<const Basis> basis;
  int branch_var = -1;
  double branch_frac = 0.0;  // distance moved by the branch
  bool branch_up = false;
};

struct NodeSolve {
  LpStatus status = LpStatus::kInfeasible;
  double objective = kInf;
  std::vector<double> x;
  std::shared_ptr<const Basis> basis;
  long iterations = 0;
};

struct PseudoCost {
  double down_sum = 0.0;
  int down_count = 0;
  double up_sum = 0.0;
  int up_count = 0;
};

class BranchAndBound {
 public:
  BranchAndBound(const milp::MilpModel& model, const SolveOptions& options)
      : model_(model), options_(options), data_(internal::BuildLpData(model)) {
    for (int j = 0; j < data_.n; ++j) {
      if (data_.is_binary[j]) binaries_.push_back(j);
    }
    pseudo_.resize(data_.n);
  }

  SolveResult Run();

 private:
  NodeSolve SolveNode(Simplex& simplex, const Node& node) const;
  int SelectBranchVariable(const std::vector<double>& x) const;
  void UpdatePseudoCost(const Node& node, double objective);
  void ConsiderIncumbent(Simplex& simplex, const NodeSolve& solve);

  const milp::MilpModel& model_;
  SolveOptions options_;
  LpData data_;
  std::vector<int> binaries_;
  std::vector<PseudoCost> pseudo_;
  double incumbent_ = kInf;
  std::vector<double> incumbent_x_;
  long lp_iterations_ = 0;
};

NodeSolve BranchAndBound::SolveNode(Simplex& simplex, const Node& node) const {
  std::vector<double> lo = data_.col_lo;
  std::vector<double> hi = data_.col_hi;
  for (const auto& [var, value] : node.fixes) {
    lo[var] = value;
    hi[var] = value;
  }
  simplex.SetColumnBounds(lo, hi);
  NodeSolve out;
  out.status = simplex.Solve(node.basis.get());
  out.iterations = simplex.iterations();
  if (out.status == LpStatus::kIterationLimit) {
    throw NumericError("node LP hit the iteration limit");
  }
  if (out.status == LpStatus::kOptimal) {
    out.objective = simplex.Objective();
    out.x = simplex.StructuralValues();
    out.basis = std::make_shared<const Basis>(simplex.CurrentBasis());
  }
  return out;
}

int BranchAndBound::SelectBranchVariable(const std::vector<double>& x) const {
  int pick = -1;
  double best = -1.0;
  double avg_down = 0.0, avg_up = 0.0;
  int nd = 0, nu = 0;
  if (options_.branch_rule == BranchRule::kPseudoCost) {
    for (int j : binaries_) {
      if (pseudo_[j].down_count) {
        avg_down += pseudo_[j].down_sum / pseudo_[j].down_count;
        ++nd;
      }
      if (pseudo_[j].up_count) {
        avg_up += pseudo_[j].up_sum / pseudo_[j].up_count;
        ++nu;
      }
    }
    avg_down = nd ? avg_down / nd : 1.0;
    avg_up = nu ? avg_up / nu : 1.0;
  }
  for (int j : binaries_) {
    const double f = x[j] - std::floor(x[j]);
    if (f <= options_.int_tol || f >= 1.0 - options_.int_tol) continue;
    double score;
    if (options_.branch_rule == BranchRule::kPseudoCost) {
      const PseudoCost& pc = pseudo_[j];
      const double down = pc.down_count ? pc.down_sum / pc.down_count : avg_down;
      const double up = pc.up_count ? pc.up_sum / pc.up_count : avg_up;
      score = std::max(std::min(down * f, up * (1.0 - f)), 1e-9) +
              1e-12 * std::min(f, 1.0 - f);
    } else {
      score = std::min(f, 1.0 - f);
    }
    if (score > best) {
      best = score;
      pick = j;
    }
  }
  return pick;
}

void BranchAndBound::UpdatePseudoCost(const Node& node, double objective) {
  if (node.branch_var < 0 || node.branch_frac <= 0.0) return;
  const double gain = std::max(0.0, objective - node.bound) / node.branch_frac;
  PseudoCost& pc = pseudo_[node.branch_var];
  if (node.branch_up) {
    pc.up_sum += gain;
    ++pc.up_count;
  } else {
    pc.down_sum += gain;
    ++pc.down_count;
  }
}

void BranchAndBound::ConsiderIncumbent(Simplex& simplex,
                                       const NodeSolve& solve) {
  // Re-solve with every binary fixed to its rounded value so continuous
  // variables are consistent with exact 0/1 selectors.
  std::vector<double> lo = data_.col_lo;
  std::vector<double> hi = data_.col_hi;
  std::vector<double> x = solve.x;
  for (int j : binaries_) {
    x[j] = std::round(x[j]);
    lo[j] = hi[j] = x[j];
  }
  simplex.SetColumnBounds(lo, hi);
  const LpStatus status = simplex.Solve(solve.basis.get());
  lp_iterations_ += simplex.iterations();
  double objective = solve.objective;
  if (status == LpStatus::kOptimal) {
    x = simplex.StructuralValues();
    for (int j : binaries_) x[j] = std::round(x[j]);
    objective = model_.ObjectiveValue(x);
  }
  if (objective < incumbent_) {
    incumbent_ = objective;
    incumbent_x_ = std::move(x);
    if (options_.log) spdlog::info("new incumbent {:.9g}", incumbent_);
  }
}

SolveResult BranchAndBound::Run() {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  };
  const int threads = std::max(1, options_.threads);
  const internal::Tolerances tol = MakeTolerances(options_);
  std::vector<std::unique_ptr<Simplex>> workers;
  for (int t = 0; t < threads; ++t) {
    workers.push_back(std::make_unique<Simplex>(data_, tol));
  }

  auto cmp = [](const Node& a, const Node& b) {
    return a.bound != b.bound ? a.bound < b.bound : a.id < b.id;
  };
  std::set<Node, decltype(cmp)> best_first(cmp);
  std::vector<Node> stack;
  long next_id = 1;
  const bool dfs = options_.search == SearchOrder::kDepthFirst;
  auto push = [&](Node node) {
    if (dfs) {
      stack.push_back(std::move(node));
    } else {
      best_first.insert(std::move(node));
    }
  };
  auto open_count = [&] {
    return dfs ? stack.size() : best_first.size();
  };
  auto open_bound = [&] {
    if (dfs) {
      double b = kInf;
      for (const auto& n : stack) b = std::min(b, n.bound);
      return b;
    }
    return best_first.empty() ? kInf : best_first.begin()->bound;
  };
  auto prune_level = [&] {
    if (!std::isfinite(incumbent_)) return kInf;
    return incumbent_ - options_.gap_tol * std::max(1.0, std::abs(incumbent_));
  };

  SolveResult result;
  push(Node{});
  bool unbounded = false;
  Status stop = Status::kOptimal;
  const int batch = std::max(1, options_.batch_size);

  while (open_count() > 0) {
    const double bound = std::min(open_bound(), incumbent_);
    result.progress.emplace_back(bound, incumbent_);
    if (RelativeGap(incumbent_, bound) <= options_.gap_tol) break;
    if (result.nodes >= options_.node_limit) {
      stop = Status::kNodeLimit;
      break;
    }
    if (elapsed() > options_.time_limit) {
      stop = Status::kTimeLimit;
      break;
    }

    std::vector<Node> round;
    while (static_cast<int>(round.size()) < batch && open_count() > 0) {
      Node node;
      if (dfs) {
        node = std::move(stack.back());
        stack.pop_back();
      } else {
        node = std::move(best_first.extract(best_first.begin()).value());
      }
      if (node.bound >= prune_level()) continue;
      round.push_back(std::move(node));
    }
    if (round.empty()) continue;

    std::vector<NodeSolve> solves(round.size());
    std::vector<std::string> errors(round.size());
    const int count = static_cast<int>(round.size());
#pragma omp parallel for schedule(static) num_threads(threads)
    for (int k = 0; k < count; ++k) {
      try {
        solves[k] = SolveNode(*workers[omp_get_thread_num()], round[k]);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw NumericError(e);
    }

    for (int k = 0; k < count; ++k) {
      const Node& node = round[k];
      NodeSolve& solve = solves[k];
      ++result.nodes;
      lp_iterations_ += solve.iterations;
      if (solve.status == LpStatus::kUnbounded) {
        unbounded = true;
        break;
      }
      if (solve.status != LpStatus::kOptimal) continue;
      UpdatePseudoCost(node, solve.objective);
      const double node_bound = std::max(node.bound, solve.objective);
      if (node_bound >= prune_level()) continue;
      const int var = SelectBranchVariable(solve.x);
      if (var < 0) {
        ConsiderIncumbent(*workers[0], solve);
        continue;
      }
      const double value = solve.x[var];
      Node down{next_id++, node.depth + 1, node_bound, node.fixes, solve.basis,
                var, value, false};
      down.fixes.emplace_back(var, 0.0);
      Node up{next_id++, node.depth + 1, node_bound, node.fixes, solve.basis,
              var, 1.0 - value, true};
      up.fixes.emplace_back(var, 1.0);
      // Depth-first explores the child nearer to the LP value first.
      if (value >= 0.5) {
        push(std::move(down));
        push(std::move(up));
      } else {
        push(std::move(up));
        push(std::move(down));
      }
    }
    if (unbounded) break;
  }

  result.wall_time = elapsed();
  result.lp_iterations = lp_iterations_;
  if (unbounded && !std::isfinite(incumbent_)) {
    result.status = Status::kUnbounded;
    return result;
  }
  const double bound = std::min(open_bound(), incumbent_);
  result.bound = open_count() == 0 ? incumbent_ : bound;
  if (!std::isfinite(incumbent_)) {
    result.status = stop == Status::kOptimal ? Status::kInfeasible : stop;
    if (result.status != Status::kInfeasible) result.bound = bound;
    return result;
  }
  result.objective = incumbent_;
  result.x = incumbent_x_;
  FillAssignment(model_, result);
  if (stop != Status::kOptimal) {
    result.status = stop;
  } else if (RelativeGap(incumbent_, result.bound) <= 1e-6 ||
             open_count() == 0) {
    result.status = Status::kOptimal;
  } else {
    result.status = Status::kGapLimit;
  }
  result.progress.emplace_back(result.bound, incumbent_);
  return result;
}

}  // namespace

const char* StatusName(Status status) {
  switch (status) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kUnbounded:
      return "unbounded";
    case Status::kGapLimit:
      return "gap-limit";
    case Status::kNodeLimit:
      return "node-limit";
    case Status::kTimeLimit:
      return "time-limit";
  }
  return "unknown";
}

double SolveResult::gap() const { return RelativeGap(objective, bound); }

SolveResult SolveLp(const milp::MilpModel& model, const SolveOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const LpData data = internal::BuildLpData(model);
  Simplex simplex(data, MakeTolerances(options));
  const LpStatus status = simplex.Solve(nullptr);
  SolveResult result;
  result.nodes = 1;
  result.lp_iterations = simplex.iterations();
  switch (status) {
    case LpStatus::kIterationLimit:
      throw NumericError("LP iteration limit reached");
    case LpStatus::kInfeasible:
      result.status = Status::kInfeasible;
      break;
    case LpStatus::kUnbounded:
      result.status = Status::kUnbounded;
      break;
    case LpStatus::kOptimal:
      result.status = Status::kOptimal;
      result.x = simplex.StructuralValues();
      result.objective = simplex.Objective();
      result.bound = result.objective;
      result.row_duals = simplex.RowDuals();
      result.reduced_costs = simplex.ReducedCosts();
      FillAssignment(model, result);
      break;
  }
  result.wall_time = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return result;
}

SolveResult SolveMilp(const milp::MilpModel& model,
                      const SolveOptions& options) {
  if (!(options.feas_tol > 0.0 && options.int_tol > 0.0 &&
        options.gap_tol > 0.0)) {
    throw ConfigError("solver tolerances must be positive");
  }
  model.Validate();
  BranchAndBound bnb(model, options);
  return bnb.Run();
}

}  // namespace amrplan::solver
