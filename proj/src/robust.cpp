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

#include "amrplan/robust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#include "amrplan/errors.hpp"
#include "amrplan/rng.hpp"
#include "amrplan/solver.hpp"

namespace amrplan::robust {
namespace {

using milp::Sense;
using milp::Term;
using Json = nlohmann::json;
using GainTable = std::vector<std::array<double, 2>>;

std::string Name(const std::string& base, int i, int k) {
  return base + "_" + std::to_string(i) + "_" + std::to_string(k);
}

// Affine expression over model columns.
struct Expr {
  std::vector<Term> terms;
  double constant = 0.0;
  void Add(int var, double coef) {
    if (coef != 0.0) terms.push_back({var, coef});
  }
};

std::vector<Term> Normalize(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> out;
  for (const Term& t : terms) {
    if (!out.empty() && out.back().var == t.var) {
      out.back().coef += t.coef;
    } else {
      out.push_back(t);
    }
  }
  std::erase_if(out, [](const Term& t) { return t.coef == 0.0; });
  return out;
}

// max of terms . x over the column bounds.
double MaxOverBox(const milp::MilpModel& model, const std::vector<Term>& terms) {
  double sum = 0.0;
  for (const Term& t : terms) {
    const auto& v = model.variable(t.var);
    sum += t.coef * (t.coef > 0.0 ? v.upper : v.lower);
  }
  return sum;
}

using Side = ChanceFamily::Side;

// Violation margin of a side is rhs - terms . x (violated when positive).
double MaxMargin(const milp::MilpModel& model, const Side& side) {
  std::vector<Term> neg;
  neg.reserve(side.terms.size());
  for (const Term& t : side.terms) neg.push_back({t.var, -t.coef});
  return side.rhs + MaxOverBox(model, neg);
}

// min over the box of margin(a) - margin(b).
double MinMarginDifference(const milp::MilpModel& model, const Side& a,
                           const Side& b) {
  std::vector<Term> diff;
  diff.reserve(a.terms.size() + b.terms.size());
  for (const Term& t : a.terms) diff.push_back({t.var, t.coef});
  for (const Term& t : b.terms) diff.push_back({t.var, -t.coef});
  // -(max of (terms_a - terms_b) . x) == min of (m_a - m_b) - (rhs_a - rhs_b)
  return (a.rhs - b.rhs) - MaxOverBox(model, Normalize(std::move(diff)));
}

double SideMargin(const Side& side, const std::vector<double>& x) {
  double act = 0.0;
  for (const Term& t : side.terms) act += t.coef * x[t.var];
  return side.rhs - act;
}

struct GainRef {
  int var = -1;
  double value = 0.0;
};

GainRef PickGain(const std::vector<std::array<int, 2>>& vars,
                 const GainTable& fixed, int i, int which) {
  if (!vars.empty() && vars[i][which] >= 0) return {vars[i][which], 0.0};
  return {-1, fixed.empty() ? 0.0 : fixed[i][which]};
}

GainRef Ws(const RecourseVariables& rv, int i, int w) {
  return PickGain(rv.ws, rv.fixed.ws, i, w);
}
GainRef Wv(const RecourseVariables& rv, int i, int w) {
  return PickGain(rv.wv, rv.fixed.wv, i, w);
}
GainRef Wc(const RecourseVariables& rv, int i, int w) {
  return PickGain(rv.wc, rv.fixed.wc, i, w);
}

void AddGain(Expr& e, GainRef g, double coef) {
  if (g.var >= 0) {
    e.Add(g.var, coef);
  } else {
    e.constant += coef * g.value;
  }
}

double GainMagnitude(const milp::MilpModel& model, GainRef g) {
  if (g.var < 0) return std::abs(g.value);
  const auto& v = model.variable(g.var);
  return std::max(std::abs(v.lower), std::abs(v.upper));
}

double GainValue(GainRef g, const std::vector<double>& x) {
  return g.var >= 0 ? x[g.var] : g.value;
}

// Linearized execution time of task i at distance d + dd with the speed
// adjusted by its gains.
Expr TravelTime(const scenario::Scenario& s, const core::CoreVariables& vars,
                const RecourseVariables& rv, int i, double dxi, double dd) {
  const double dk = s.d[i] + dd;
  const double slope = -dk / (s.v_hat * s.v_hat);
  Expr e;
  e.constant = 2.0 * dk / s.v_hat;
  e.Add(vars.v, slope);
  AddGain(e, Wv(rv, i, 0), slope * dxi);
  AddGain(e, Wv(rv, i, 1), slope * dd);
  return e;
}

Expr ChargeTime(const scenario::Scenario& s, double kv,
                const core::CoreVariables& vars, const RecourseVariables& rv,
                int i, double dxi, double dd) {
  const double soc = kv * (s.d[i] + dd);
  const double slope = -soc / (s.c_hat * s.c_hat);
  Expr e;
  e.constant = 2.0 * soc / s.c_hat;
  e.Add(vars.c, slope);
  AddGain(e, Wc(rv, i, 0), slope * dxi);
  AddGain(e, Wc(rv, i, 1), slope * dd);
  return e;
}

// expr >= bound  as  terms . x >= rhs.
Side AtLeast(const Expr& e, double bound) {
  return Side{Normalize(e.terms), bound - e.constant};
}
// expr <= bound  as  -terms . x >= -rhs.
Side AtMost(const Expr& e, double bound) {
  std::vector<Term> neg;
  for (const Term& t : e.terms) neg.push_back({t.var, -t.coef});
  return Side{Normalize(std::move(neg)), e.constant - bound};
}

const char* GroupTag(Group g) {
  switch (g) {
    case Group::kExecTime: return tags::kChanceExecTime;
    case Group::kChargeTime: return tags::kChanceChargeTime;
    case Group::kSocBudget: return tags::kChanceSoc;
    case Group::kSchedule: return tags::kChanceSchedule;
  }
  return "";
}

std::vector<ChanceFamily::Side> SidesFor(Group group,
                                         const scenario::Scenario& s,
                                         const battery::BatteryParams& p,
                                         const core::CoreVariables& vars,
                                         const RecourseVariables& rv, int i,
                                         std::span<const double> delta) {
  const double dxi = delta[i];
  const double dd = delta[s.n + i];
  switch (group) {
    case Group::kExecTime: {
      const Expr t = TravelTime(s, vars, rv, i, dxi, dd);
      return {AtLeast(t, s.t_bounds.lo), AtMost(t, s.t_bounds.hi)};
    }
    case Group::kChargeTime: {
      const Expr tc = ChargeTime(s, p.kv, vars, rv, i, dxi, dd);
      return {AtLeast(tc, s.tc_bounds.lo), AtMost(tc, s.tc_bounds.hi)};
    }
    case Group::kSocBudget: {
      Expr soc;
      soc.Add(vars.s_bar, 1.0);
      AddGain(soc, Ws(rv, i, 0), dxi);
      AddGain(soc, Ws(rv, i, 1), dd);
      return {AtLeast(soc, s.s_lower + p.kv * (s.d[i] + dd))};
    }
    case Group::kSchedule: {
      // dt[i+1] >= dt[i] + t_i + tc_i - xi_i under the realization.
      const Expr t = TravelTime(s, vars, rv, i, dxi, dd);
      const Expr tc = ChargeTime(s, p.kv, vars, rv, i, dxi, dd);
      Expr e;
      e.Add(vars.dt[i + 1], 1.0);
      e.Add(vars.dt[i], -1.0);
      for (const Term& term : t.terms) e.Add(term.var, -term.coef);
      for (const Term& term : tc.terms) e.Add(term.var, -term.coef);
      e.constant = -t.constant - tc.constant;
      return {AtLeast(e, -(s.xi[i] + dxi))};
    }
  }
  return {};
}

bool AllPointMass(const std::vector<std::vector<double>>& samples) {
  for (const auto& d : samples) {
    for (double v : d) {
      if (v != 0.0) return false;
    }
  }
  return true;
}

// Columns of U reachable from `seed` through shared nonzero rows.
std::vector<char> ConnectedColumns(const DenseMatrix& u,
                                   const std::vector<char>& seed) {
  std::vector<char> col = seed;
  std::vector<char> row(static_cast<size_t>(u.rows()), 0);
  bool grew = true;
  while (grew) {
    grew = false;
    for (int r = 0; r < u.rows(); ++r) {
      if (row[r]) continue;
      bool touches = false;
      for (int c = 0; c < u.cols() && !touches; ++c) {
        touches = col[c] && u(r, c) != 0.0;
      }
      if (!touches) continue;
      row[r] = 1;
      grew = true;
      for (int c = 0; c < u.cols(); ++c) {
        if (u(r, c) != 0.0) col[c] = 1;
      }
    }
  }
  return col;
}

struct DualCore {
  std::vector<int> lambda_vars;
  std::vector<int> polytope_rows;
  std::vector<int> equality_rows;
};

// lambda >= 0 with U^T lambda = a(x) over the connected block of supp(a).
DualCore AddDualCore(milp::MilpModel& model, const UncertainRow& row,
                     const DenseMatrix& u, const std::string& tag) {
  const int dim = u.cols();
  if (static_cast<int>(row.a_terms.size()) != dim ||
      static_cast<int>(row.a_const.size()) != dim) {
    throw ConfigError("uncertain row '" + row.name +
                      "' does not match the polytope dimension");
  }
  std::vector<char> support(static_cast<size_t>(dim), 0);
  for (int j = 0; j < dim; ++j) {
    support[j] = !row.a_terms[j].empty() || row.a_const[j] != 0.0;
  }
  const std::vector<char> cols = ConnectedColumns(u, support);
  DualCore core;
  for (int r = 0; r < u.rows(); ++r) {
    bool touches = false;
    for (int c = 0; c < dim && !touches; ++c) touches = cols[c] && u(r, c) != 0.0;
    if (!touches) continue;
    core.polytope_rows.push_back(r);
    core.lambda_vars.push_back(model.AddContinuous(
        Name("lam_" + row.name, r, 0), 0.0, milp::kInf, tag));
  }
  for (int c = 0; c < dim; ++c) {
    if (!cols[c]) continue;
    std::vector<Term> terms;
    for (size_t q = 0; q < core.polytope_rows.size(); ++q) {
      terms.push_back({core.lambda_vars[q], u(core.polytope_rows[q], c)});
    }
    for (const Term& t : row.a_terms[c]) terms.push_back({t.var, -t.coef});
    core.equality_rows.push_back(model.AddRow(Name("dual_" + row.name, c, 0),
                                              terms, Sense::kEqual,
                                              row.a_const[c], tag));
  }
  return core;
}

GainTable ReadGainTable(const Json& j, const std::string& field) {
  GainTable out;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2) {
      throw ConfigError("robust.fixed_gains." + field +
                        " entries must be [xi_gain, d_gain] pairs");
    }
    out.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  return out;
}

Json GainTableToJson(const GainTable& table) {
  Json out = Json::array();
  for (const auto& g : table) out.push_back({g[0], g[1]});
  return out;
}

}  // namespace

const std::set<std::string>& RobustRowTags() {
  static const std::set<std::string> kTags = [] {
    std::set<std::string> t = core::DeterministicRowTags();
    t.insert({tags::kChanceExecTime, tags::kChanceChargeTime, tags::kChanceSoc,
              tags::kChanceSchedule, tags::kChanceBudget, tags::kSupportDual,
              tags::kRecourseCost});
    return t;
  }();
  return kTags;
}

const char* GroupName(Group group) {
  switch (group) {
    case Group::kExecTime: return "exec_time";
    case Group::kChargeTime: return "charge_time";
    case Group::kSocBudget: return "soc_budget";
    case Group::kSchedule: return "schedule";
  }
  return "";
}

Group GroupFromName(const std::string& name) {
  for (Group g : kAllGroups) {
    if (name == GroupName(g)) return g;
  }
  throw ConfigError("unknown violable group '" + name + "'");
}

const char* RecourseModeName(RecourseMode mode) {
  switch (mode) {
    case RecourseMode::kOff: return "off";
    case RecourseMode::kFixed: return "fixed";
    case RecourseMode::kOptimize: return "optimize";
  }
  return "";
}

RecourseMode RecourseModeFromName(const std::string& name) {
  for (RecourseMode m :
       {RecourseMode::kOff, RecourseMode::kFixed, RecourseMode::kOptimize}) {
    if (name == RecourseModeName(m)) return m;
  }
  throw ConfigError("unknown recourse mode '" + name + "'");
}

int RobustConfig::Budget() const {
  return static_cast<int>(std::floor(epsilon * k_samples + 1e-9));
}

void RobustConfig::Validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("robust.epsilon must lie in (0, 1)");
  }
  if (k_samples < 1) throw ConfigError("robust.k_samples must be at least 1");
  if (big_m_saa && !(*big_m_saa > 0.0)) {
    throw ConfigError("robust.big_m_saa must be positive");
  }
  if (recourse_structure != "diagonal") {
    throw ConfigError("robust.recourse_structure '" + recourse_structure +
                      "' is not supported (only 'diagonal')");
  }
  if (w_max && !(*w_max >= 0.0)) throw ConfigError("robust.w_max must be >= 0");
  if (fixed_gains && recourse != RecourseMode::kFixed) {
    throw ConfigError("robust.fixed_gains requires recourse 'fixed'");
  }
}

RobustConfig ConfigFromJson(const Json& j, RobustConfig base) {
  static const std::set<std::string> kKeys = {
      "epsilon",           "k_samples",    "big_m_saa",
      "recourse",          "recourse_enabled", "recourse_structure",
      "violable_set",      "second_stage_cost", "presolve",
      "w_max",             "fixed_gains"};
  if (!j.is_object()) throw ConfigError("robust section must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError("unknown robust key '" + key + "'");
  }
  try {
    RobustConfig c = std::move(base);
    if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
    if (j.contains("k_samples")) c.k_samples = j.at("k_samples").get<int>();
    if (j.contains("big_m_saa")) c.big_m_saa = j.at("big_m_saa").get<double>();
    if (j.contains("recourse_enabled")) {
      c.recourse = j.at("recourse_enabled").get<bool>() ? RecourseMode::kOptimize
                                                        : RecourseMode::kFixed;
    }
    if (j.contains("recourse")) {
      c.recourse = RecourseModeFromName(j.at("recourse").get<std::string>());
    }
    if (j.contains("recourse_structure")) {
      c.recourse_structure = j.at("recourse_structure").get<std::string>();
    }
    if (j.contains("violable_set")) {
      c.violable.clear();
      for (const auto& g : j.at("violable_set")) {
        c.violable.insert(GroupFromName(g.get<std::string>()));
      }
    }
    if (j.contains("second_stage_cost")) {
      const auto v = j.at("second_stage_cost").get<std::string>();
      if (v == "literal") {
        c.second_stage_cost = SecondStageCost::kLiteral;
      } else if (v == "recourse") {
        c.second_stage_cost = SecondStageCost::kRecourse;
      } else {
        throw ConfigError("robust.second_stage_cost must be literal|recourse");
      }
    }
    if (j.contains("presolve")) c.presolve = j.at("presolve").get<bool>();
    if (j.contains("w_max")) c.w_max = j.at("w_max").get<double>();
    if (j.contains("fixed_gains")) {
      const Json& g = j.at("fixed_gains");
      DiagonalGains gains;
      if (g.contains("ws")) gains.ws = ReadGainTable(g.at("ws"), "ws");
      if (g.contains("wv")) gains.wv = ReadGainTable(g.at("wv"), "wv");
      if (g.contains("wc")) gains.wc = ReadGainTable(g.at("wc"), "wc");
      c.fixed_gains = gains;
    }
    c.Validate();
    return c;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("robust section: ") + e.what());
  }
}

RobustConfig ConfigFromScenario(const scenario::Scenario& s) {
  RobustConfig base;
  if (s.uncertainty) {
    base.epsilon = s.uncertainty->epsilon;
    base.k_samples = s.uncertainty->k_samples;
  }
  if (s.robust.is_null() || s.robust.empty()) {
    base.Validate();
    return base;
  }
  return ConfigFromJson(s.robust, base);
}

Json ConfigToJson(const RobustConfig& c) {
  Json groups = Json::array();
  for (Group g : c.violable) groups.push_back(GroupName(g));
  Json j{{"epsilon", c.epsilon},
         {"k_samples", c.k_samples},
         {"recourse", RecourseModeName(c.recourse)},
         {"recourse_structure", c.recourse_structure},
         {"violable_set", groups},
         {"second_stage_cost", c.second_stage_cost == SecondStageCost::kLiteral
                                   ? "literal"
                                   : "recourse"},
         {"presolve", c.presolve}};
  if (c.big_m_saa) j["big_m_saa"] = *c.big_m_saa;
  if (c.w_max) j["w_max"] = *c.w_max;
  if (c.fixed_gains) {
    j["fixed_gains"] = Json{{"ws", GainTableToJson(c.fixed_gains->ws)},
                            {"wv", GainTableToJson(c.fixed_gains->wv)},
                            {"wc", GainTableToJson(c.fixed_gains->wc)}};
  }
  return j;
}

std::vector<scenario::Interval> PolytopeBox(const DenseMatrix& u,
                                            std::span<const double> t) {
  const int dim = u.cols();
  if (static_cast<int>(t.size()) != u.rows()) {
    throw ConfigError("polytope U and t have different row counts");
  }
  milp::MilpModel lp;
  for (int j = 0; j < dim; ++j) {
    lp.AddContinuous("delta_" + std::to_string(j), -milp::kInf, milp::kInf,
                     "polytope");
  }
  for (int r = 0; r < u.rows(); ++r) {
    std::vector<Term> terms;
    for (int j = 0; j < dim; ++j) terms.push_back({j, u(r, j)});
    lp.AddRow("poly_" + std::to_string(r), terms, Sense::kLessEqual, t[r],
              "polytope");
  }
  std::vector<scenario::Interval> box(static_cast<size_t>(dim));
  for (int j = 0; j < dim; ++j) {
    for (double sign : {1.0, -1.0}) {
      milp::MilpModel probe = lp;
      probe.AddObjectiveTerm(j, sign);
      const auto res = solver::SolveLp(probe);
      if (res.status == solver::Status::kInfeasible) {
        throw ConfigError("uncertainty polytope is empty");
      }
      if (res.status == solver::Status::kUnbounded) {
        throw ConfigError("uncertainty polytope is unbounded in component " +
                          std::to_string(j));
      }
      if (sign > 0.0) {
        box[j].lo = res.x[j];
      } else {
        box[j].hi = res.x[j];
      }
    }
  }
  return box;
}

DualBlock DualizeRow(milp::MilpModel& model, const UncertainRow& row,
                     const DenseMatrix& u, std::span<const double> t,
                     const std::string& tag) {
  if (static_cast<int>(t.size()) != u.rows()) {
    throw ConfigError("polytope U and t have different row counts");
  }
  const DualCore core = AddDualCore(model, row, u, tag);
  DualBlock block;
  block.lambda_vars = core.lambda_vars;
  block.polytope_rows = core.polytope_rows;
  block.equality_rows = core.equality_rows;
  // t^T lambda - b(x) <= b_const
  std::vector<Term> terms;
  for (size_t q = 0; q < core.lambda_vars.size(); ++q) {
    terms.push_back({core.lambda_vars[q], t[core.polytope_rows[q]]});
  }
  for (const Term& term : row.b_terms) terms.push_back({term.var, -term.coef});
  block.bound_row = model.AddRow("support_" + row.name, terms,
                                 Sense::kLessEqual, row.b_const, tag);
  return block;
}

namespace {

SaaRows GenerateSaaRowsImpl(const RobustModel& rm, const scenario::Scenario& s,
                            const battery::BatteryParams& params, bool parallel) {
  const milp::MilpModel& model = rm.core.model;
  const auto& vars = rm.core.vars;
  const int budget = rm.config.Budget();
  const int k_count = static_cast<int>(rm.samples.size());
  SaaRows out;
  for (Group group : kAllGroups) {
    if (!rm.config.violable.contains(group)) continue;
    const int tasks = group == Group::kSchedule ? s.n - 1 : s.n;
    for (int i = 0; i < tasks; ++i) {
      ChanceFamily fam;
      fam.group = group;
      fam.task = i;
      fam.samples.resize(k_count);
      fam.selector.assign(k_count, -1);
      fam.hardened.assign(k_count, 0);
      out.families.push_back(std::move(fam));
    }
  }
  const long f_count = static_cast<long>(out.families.size());
  out.max_margin.assign(f_count, std::vector<double>(k_count, 0.0));
  out.dominators.assign(f_count, std::vector<int>(k_count, 0));
  const long total = f_count * k_count;

#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (long q = 0; q < total; ++q) {
    ChanceFamily& fam = out.families[q / k_count];
    const int k = static_cast<int>(q % k_count);
    fam.samples[k] = SidesFor(fam.group, s, params, vars, rm.recourse, fam.task,
                              rm.samples[k]);
    double m = -milp::kInf;
    for (const Side& side : fam.samples[k]) m = std::max(m, MaxMargin(model, side));
    out.max_margin[q / k_count][k] = m;
  }

  if (!rm.config.presolve || budget == 0) return out;
  // Samples that are violated whenever sample k is, capped at the budget.
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (long q = 0; q < total; ++q) {
    const long f = q / k_count;
    const int k = static_cast<int>(q % k_count);
    const ChanceFamily& fam = out.families[f];
    const auto& margin = out.max_margin[f];
    if (fam.samples[k].size() != 1 || margin[k] <= 1e-9) continue;
    int count = 0;
    for (int j = 0; j < k_count && count < budget; ++j) {
      if (j == k || margin[j] <= 1e-9) continue;
      if (MinMarginDifference(model, fam.samples[j][0], fam.samples[k][0]) >= 0.0) {
        ++count;
      }
    }
    out.dominators[f][k] = count;
  }
  return out;
}

}  // namespace

SaaRows GenerateSaaRows(const RobustModel& rm, const scenario::Scenario& s,
                        const battery::BatteryParams& params) {
  return GenerateSaaRowsImpl(rm, s, params, true);
}

SaaRows GenerateSaaRowsSerial(const RobustModel& rm, const scenario::Scenario& s,
                              const battery::BatteryParams& params) {
  return GenerateSaaRowsImpl(rm, s, params, false);
}

void BuildSaaConstraints(RobustModel& rm, const scenario::Scenario& s,
                         const battery::BatteryParams& params) {
  milp::MilpModel& model = rm.core.model;
  const int budget = rm.config.Budget();
  rm.budget = budget;
  const int k_count = static_cast<int>(rm.samples.size());
  SaaRows gen = GenerateSaaRows(rm, s, params);

  for (size_t f = 0; f < gen.families.size(); ++f) {
    ChanceFamily fam = std::move(gen.families[f]);
    const Group group = fam.group;
    const int i = fam.task;
    const char* gname = GroupName(group);

    // Rows that no point of the box violates.
    std::vector<char> live(k_count, 1);
    for (int k = 0; k < k_count; ++k) {
      if (rm.config.presolve && gen.max_margin[f][k] <= 1e-9) {
        live[k] = 0;
        ++rm.pruned_never_violated;
      }
    }

    // k must hold if `budget` other rows are violated whenever it is.
    std::vector<char> hard(k_count, 0);
    for (int k = 0; k < k_count; ++k) {
      if (!live[k]) continue;
      if (budget == 0) {
        hard[k] = 1;
      } else if (rm.config.presolve) {
        hard[k] = gen.dominators[f][k] >= budget;
      }
    }

    // Enforce hard rows, skipping those implied by another hard row.
    for (int k = 0; k < k_count; ++k) {
      if (!live[k] || !hard[k]) continue;
      fam.hardened[k] = 1;
      bool implied = false;
      if (rm.config.presolve && fam.samples[k].size() == 1) {
        for (int j = 0; j < k_count && !implied; ++j) {
          if (j == k || !live[j] || !hard[j]) continue;
          const double diff = MinMarginDifference(model, fam.samples[j][0],
                                                  fam.samples[k][0]);
          const bool reverse = MinMarginDifference(model, fam.samples[k][0],
                                                   fam.samples[j][0]) >= 0.0;
          // Ties keep the lower index.
          implied = diff >= 0.0 && (!reverse || j < k);
        }
      }
      if (implied) {
        ++rm.pruned_dominated;
        continue;
      }
      for (size_t q = 0; q < fam.samples[k].size(); ++q) {
        const Side& side = fam.samples[k][q];
        model.AddRow(Name(std::string("hard_") + gname + (q ? "_hi" : ""), i, k),
                     side.terms, Sense::kGreaterEqual, side.rhs,
                     GroupTag(group));
      }
    }

    std::vector<int> soft;
    for (int k = 0; k < k_count; ++k) {
      if (live[k] && !hard[k]) soft.push_back(k);
    }
    if (rm.config.presolve && static_cast<int>(soft.size()) <= budget) {
      // Every one of them can be relaxed at once.
      rm.pruned_free += static_cast<int>(soft.size());
      rm.families.push_back(std::move(fam));
      continue;
    }
    std::vector<Term> budget_terms;
    for (int k : soft) {
      const int g = model.AddBinary(Name(std::string("g_") + gname, i, k),
                                    tags::kSampleSelector);
      fam.selector[k] = g;
      budget_terms.push_back({g, 1.0});
      for (size_t q = 0; q < fam.samples[k].size(); ++q) {
        const Side& side = fam.samples[k][q];
        const double need = std::max(0.0, MaxMargin(model, side));
        double m = need * 1.01 + 1e-9;
        if (rm.config.big_m_saa) {
          if (*rm.config.big_m_saa < need) {
            throw ConfigError(
                "big_m_saa " + std::to_string(*rm.config.big_m_saa) +
                " does not cover sample " + std::to_string(k) + " of " +
                gname + " row " + std::to_string(i) + " (needs " +
                std::to_string(need) + ")");
          }
          m = *rm.config.big_m_saa;
        }
        std::vector<Term> terms = side.terms;
        terms.push_back({g, m});
        model.AddRow(Name(std::string("cc_") + gname + (q ? "_hi" : ""), i, k),
                     terms, Sense::kGreaterEqual, side.rhs, GroupTag(group));
      }
    }
    fam.budget_row = model.AddRow(Name(std::string("budget_") + gname, i, 0),
                                  budget_terms, Sense::kLessEqual, budget,
                                  tags::kChanceBudget);
    rm.families.push_back(std::move(fam));
  }
}

void DualizeHardConstraints(RobustModel& rm, const scenario::Scenario& s) {
  milp::MilpModel& model = rm.core.model;
  const auto& block = rm.core.mccormick;
  const int n = s.n;
  bool any = false;
  for (int i = 0; i < n && !any; ++i) {
    for (int w = 0; w < 2; ++w) {
      any = any || GainMagnitude(model, Ws(rm.recourse, i, w)) > 0.0;
    }
  }
  if (!any) return;  // the rows carry no uncertain term
  if (!s.uncertainty) throw ConfigError("robust planning needs an uncertainty model");
  const DenseMatrix& u = s.uncertainty->polytope_u;
  const std::vector<double>& t = s.uncertainty->polytope_t;
  const auto box = PolytopeBox(u, t);
  auto reach = [&](int j) { return std::max(std::abs(box[j].lo), std::abs(box[j].hi)); };

  const int cells = static_cast<int>(block.cells.size());
  for (int i = 0; i < n; ++i) {
    const GainRef gx = Ws(rm.recourse, i, 0);
    const GainRef gd = Ws(rm.recourse, i, 1);
    const double swing = GainMagnitude(model, gx) * reach(i) +
                         GainMagnitude(model, gd) * reach(n + i);
    if (swing == 0.0) continue;
    for (int l = 0; l < cells; ++l) {
      const core::CellBounds& cb = block.cells[l];
      const int z = block.z_vars[i][l];
      for (int kind = 0; kind < core::kEnvelopeRowsPerCell; ++kind) {
        const int r = block.envelope_rows[i][l][kind];
        const bool lower = kind < 2;
        const double tk = (kind == 0 || kind == 2) ? cb.t_lo : cb.t_hi;
        // The row holds  -tk * (s_bar + ws . delta)  on its left-hand side.
        const double cx = -tk;
        if (cx == 0.0) continue;
        const double sign = lower ? -cx : cx;
        UncertainRow ur;
        ur.name = Name("env", i, l) + "_" + std::to_string(kind);
        ur.a_terms.assign(2 * n, {});
        ur.a_const.assign(2 * n, 0.0);
        if (gx.var >= 0) {
          ur.a_terms[i].push_back({gx.var, sign});
        } else {
          ur.a_const[i] = sign * gx.value;
        }
        if (gd.var >= 0) {
          ur.a_terms[n + i].push_back({gd.var, sign});
        } else {
          ur.a_const[n + i] = sign * gd.value;
        }
        const DualCore dc = AddDualCore(model, ur, u, tags::kSupportDual);
        // Fold t^T lambda into the envelope row itself.
        for (size_t q = 0; q < dc.lambda_vars.size(); ++q) {
          const double coef = t[dc.polytope_rows[q]];
          model.AddTermToRow(r, dc.lambda_vars[q], lower ? -coef : coef);
        }
        // Enlarge M by the worst support value so z = 0 still relaxes it.
        const double extra = std::abs(cx) * swing;
        model.AddTermToRow(r, z, lower ? -extra : extra);
        model.SetRhs(r, model.row(r).rhs + (lower ? -extra : extra));
        DualBlock db;
        db.lambda_vars = dc.lambda_vars;
        db.polytope_rows = dc.polytope_rows;
        db.equality_rows = dc.equality_rows;
        db.bound_row = r;
        rm.duals.push_back(std::move(db));
      }
    }
  }
}

RobustModel AssembleRobust(const scenario::Scenario& s,
                           const battery::BatteryParams& params,
                           const core::McCormickConfig& mccormick,
                           const RobustConfig& config) {
  if (!s.uncertainty) {
    throw ConfigError("robust planning needs an uncertainty model");
  }
  config.Validate();
  auto samples = scenario::SampleUncertainty(
      *s.uncertainty, config.k_samples, DeriveSeed(s.uncertainty->seed, "saa"));
  return AssembleRobust(s, params, mccormick, config, std::move(samples));
}

RobustModel AssembleRobust(const scenario::Scenario& s,
                           const battery::BatteryParams& params,
                           const core::McCormickConfig& mccormick,
                           const RobustConfig& config,
                           std::vector<std::vector<double>> samples) {
  s.Validate();
  config.Validate();
  if (params.kc < 0.0 || params.ks < 0.0) {
    throw ConfigError("kc and ks must be nonnegative");
  }
  if (samples.empty()) throw ConfigError("robust planning needs samples");
  for (const auto& d : samples) {
    if (static_cast<int>(d.size()) != 2 * s.n) {
      throw ConfigError("uncertainty samples must have 2N components");
    }
  }
  RobustModel rm;
  rm.config = config;
  rm.config.k_samples = static_cast<int>(samples.size());
  rm.samples = std::move(samples);
  const int n = s.n;

  // Reach of each uncertainty component: polytope box when available,
  // otherwise the sample extremes.
  std::vector<double> reach(static_cast<size_t>(2 * n), 0.0);
  if (s.uncertainty && s.uncertainty->dim() == 2 * n &&
      !s.uncertainty->polytope_u.empty()) {
    const auto box = PolytopeBox(s.uncertainty->polytope_u,
                                 s.uncertainty->polytope_t);
    for (int j = 0; j < 2 * n; ++j) {
      reach[j] = std::max(std::abs(box[j].lo), std::abs(box[j].hi));
    }
  }
  for (const auto& d : rm.samples) {
    for (int j = 0; j < 2 * n; ++j) reach[j] = std::max(reach[j], std::abs(d[j]));
  }

  milp::MilpModel& model = rm.core.model;
  rm.core.vars = core::AddCoreVariables(model, s, params.kv);
  auto& vars = rm.core.vars;

  // Gains.
  auto& rv = rm.recourse;
  if (config.recourse == RecourseMode::kFixed && config.fixed_gains) {
    rv.fixed = *config.fixed_gains;
    for (const GainTable* table : {&rv.fixed.ws, &rv.fixed.wv, &rv.fixed.wc}) {
      if (!table->empty() && static_cast<int>(table->size()) != n) {
        throw ConfigError("robust.fixed_gains tables need one pair per task");
      }
    }
  }
  if (config.recourse == RecourseMode::kOptimize) {
    const std::array<double, 3> widths = {s.s_bounds.width(), s.v_bounds.width(),
                                          s.c_bounds.width()};
    const std::array<const char*, 3> names = {"ws", "wv", "wc"};
    std::array<std::vector<std::array<int, 2>>*, 3> tables = {&rv.ws, &rv.wv,
                                                             &rv.wc};
    for (int f = 0; f < 3; ++f) {
      tables[f]->assign(n, {-1, -1});
      for (int i = 0; i < n; ++i) {
        const double span = reach[i] + reach[n + i];
        // Adjustments stay within twice the control box width.
        double bound = span > 0.0 ? 2.0 * widths[f] / span : 0.0;
        if (config.w_max) bound = *config.w_max;
        for (int w = 0; w < 2; ++w) {
          if ((w == 0 ? reach[i] : reach[n + i]) == 0.0) continue;
          (*tables[f])[i][w] = model.AddContinuous(
              std::string(names[f]) + (w == 0 ? "_xi_" : "_d_") +
                  std::to_string(i),
              -bound, bound, tags::kRecourseGain);
        }
      }
    }
  }

  // Lateness bounds must admit the slowest sampled realization.
  std::vector<double> extra(static_cast<size_t>(n), 0.0);
  for (int i = 0; i + 1 < n; ++i) {
    const Expr t0 = TravelTime(s, vars, rv, i, 0.0, 0.0);
    const Expr c0 = ChargeTime(s, params.kv, vars, rv, i, 0.0, 0.0);
    const double nominal = t0.constant + MaxOverBox(model, t0.terms) +
                           c0.constant + MaxOverBox(model, c0.terms);
    for (const auto& d : rm.samples) {
      const Expr t = TravelTime(s, vars, rv, i, d[i], d[n + i]);
      const Expr c = ChargeTime(s, params.kv, vars, rv, i, d[i], d[n + i]);
      const double slow = t.constant + MaxOverBox(model, Normalize(t.terms)) +
                          c.constant + MaxOverBox(model, Normalize(c.terms));
      extra[i] = std::max(extra[i], slow - nominal - d[i]);
    }
  }
  const auto late = core::LatenessBounds(s, params.kv, extra);
  for (int i = 0; i < n; ++i) model.SetBounds(vars.dt[i], 0.0, late[i]);

  core::BuildScheduleConstraints(model, s, params.kv, vars);
  rm.core.mccormick = core::BuildMcCormick(model, s, vars, mccormick);
  core::AddDeterministicObjective(model, s, params, vars, rm.core.mccormick,
                                  mccormick.charging_cost);

  // Second-stage cost.
  const double inv_k = 1.0 / static_cast<double>(rm.samples.size());
  if (config.second_stage_cost == SecondStageCost::kLiteral) {
    double c = 0.0;
    for (const auto& d : rm.samples) {
      for (int j = 0; j < 2 * n; ++j) c += s.beta[j] * d[j];
    }
    model.AddObjectiveConstant(c * inv_k);
  } else {
    for (size_t k = 0; k < rm.samples.size(); ++k) {
      const auto& d = rm.samples[k];
      for (int i = 0; i < n; ++i) {
        const std::array<std::pair<GainRef, GainRef>, 3> fams = {
            std::pair{Ws(rv, i, 0), Ws(rv, i, 1)},
            std::pair{Wv(rv, i, 0), Wv(rv, i, 1)},
            std::pair{Wc(rv, i, 0), Wc(rv, i, 1)}};
        for (int f = 0; f < 3; ++f) {
          const double price = (f == 0 ? s.beta[i] : s.beta[n + i]) * inv_k;
          if (price == 0.0) continue;
          Expr adj;
          AddGain(adj, fams[f].first, d[i]);
          AddGain(adj, fams[f].second, d[n + i]);
          if (adj.terms.empty()) {
            model.AddObjectiveConstant(price * std::abs(adj.constant));
            continue;
          }
          const int a = model.AddContinuous(
              Name("adj" + std::to_string(f), i, static_cast<int>(k)), 0.0,
              milp::kInf, tags::kRecourseCost);
          std::vector<Term> pos = adj.terms, neg;
          pos.push_back({a, -1.0});
          for (const Term& term : adj.terms) neg.push_back({term.var, -term.coef});
          neg.push_back({a, -1.0});
          model.AddRow(Name("adjp" + std::to_string(f), i, static_cast<int>(k)),
                       pos, Sense::kLessEqual, -adj.constant, tags::kRecourseCost);
          model.AddRow(Name("adjn" + std::to_string(f), i, static_cast<int>(k)),
                       neg, Sense::kLessEqual, adj.constant, tags::kRecourseCost);
          model.AddObjectiveTerm(a, price);
        }
      }
    }
  }

  BuildSaaConstraints(rm, s, params);
  DualizeHardConstraints(rm, s);
  model.Validate();
  spdlog::debug(
      "robust model: {} rows, {} columns, {} binaries; presolve dropped {} "
      "never-violated, {} dominated, {} free sample rows",
      model.num_rows(), model.num_variables(), model.num_binaries(),
      rm.pruned_never_violated, rm.pruned_dominated, rm.pruned_free);
  if (AllPointMass(rm.samples)) spdlog::debug("all samples are zero");
  return rm;
}

scenario::Decision ExtractDecision(const RobustModel& rm,
                                   const std::vector<double>& x) {
  scenario::Decision d = core::ExtractDecision(rm.core.vars, x);
  if (rm.config.recourse == RecourseMode::kOff) return d;
  const int n = static_cast<int>(rm.core.vars.t.size());
  DiagonalGains g = ZeroGains(n);
  for (int i = 0; i < n; ++i) {
    for (int w = 0; w < 2; ++w) {
      g.ws[i][w] = GainValue(Ws(rm.recourse, i, w), x);
      g.wv[i][w] = GainValue(Wv(rm.recourse, i, w), x);
      g.wc[i][w] = GainValue(Wc(rm.recourse, i, w), x);
    }
  }
  auto r = GainsToRecourse(g);
  // All-zero gains act like no recourse.
  if (!(r.ws.AllZero() && r.wv.AllZero() && r.wc.AllZero())) d.recourse = std::move(r);
  return d;
}

std::vector<FamilyAudit> AuditChanceConstraints(const RobustModel& rm,
                                                const std::vector<double>& x,
                                                double tol) {
  std::vector<FamilyAudit> out;
  for (const ChanceFamily& fam : rm.families) {
    FamilyAudit a;
    a.group = fam.group;
    a.task = fam.task;
    a.consistent = true;
    for (size_t k = 0; k < fam.samples.size(); ++k) {
      bool violated = false;
      for (const Side& side : fam.samples[k]) {
        violated = violated ||
                   SideMargin(side, x) > tol * std::max(1.0, std::abs(side.rhs));
      }
      if (!violated) continue;
      ++a.violated;
      const int g = fam.selector[k];
      if (g >= 0 && x[g] > 0.5) {
        ++a.selected;
      } else if (g >= 0 || fam.hardened[k]) {
        a.consistent = false;
      }
    }
    a.within_budget = a.violated <= rm.budget;
    out.push_back(a);
  }
  return out;
}

DiagonalGains ZeroGains(int n) {
  const GainTable zero(static_cast<size_t>(n), {0.0, 0.0});
  return DiagonalGains{zero, zero, zero};
}

scenario::Recourse GainsToRecourse(const DiagonalGains& g) {
  const int n = static_cast<int>(g.ws.size());
  scenario::Recourse r{DenseMatrix(n, 2 * n), DenseMatrix(n, 2 * n),
                       DenseMatrix(n, 2 * n)};
  auto fill = [n](DenseMatrix& m, const GainTable& table) {
    for (int i = 0; i < static_cast<int>(table.size()); ++i) {
      m(i, i) = table[i][0];
      m(i, n + i) = table[i][1];
    }
  };
  fill(r.ws, g.ws);
  fill(r.wv, g.wv);
  fill(r.wc, g.wc);
  return r;
}

AdjustedControls ApplyRecourse(const scenario::Scenario& s,
                               const scenario::Decision& decision,
                               std::span<const double> delta) {
  if (!decision.recourse) {
    throw ConfigError("decision carries no recourse gains");
  }
  const int n = s.n;
  if (static_cast<int>(delta.size()) != 2 * n) {
    throw DomainError("uncertainty vector must have 2N components");
  }
  const auto& r = *decision.recourse;
  for (const DenseMatrix* m : {&r.ws, &r.wv, &r.wc}) {
    if (m->rows() != n || m->cols() != 2 * n) {
      throw ConfigError("recourse gains must be N x 2N matrices");
    }
  }
  AdjustedControls out;
  out.controls = scenario::Broadcast(decision, n);
  auto adjust = [&](std::vector<double>& values, const DenseMatrix& m,
                    const scenario::Interval& box) {
    for (int i = 0; i < n; ++i) {
      const double raw = values[i] + m.RowDot(i, delta);
      values[i] = box.clamp(raw);
      if (values[i] != raw) ++out.clipped;
    }
  };
  adjust(out.controls.s_bar, r.ws, s.s_bounds);
  adjust(out.controls.v, r.wv, s.v_bounds);
  adjust(out.controls.c, r.wc, s.c_bounds);
  return out;
}

}  // namespace amrplan::robust
