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

// amrplan command-line driver.
//
//   amrplan fit         --battery B --out DIR
//   amrplan plan        --scenario S [--battery B] --out DIR
//   amrplan plan-robust --scenario S --epsilon E --samples K --out DIR
//   amrplan evaluate    --scenario S --decision D --out DIR
//   amrplan compare     --scenario S --decision D --out DIR
//   amrplan export-lp   --scenario S [--robust] --out DIR
//
// Exit codes: 0 ok, 2 configuration / input, 3 infeasible, 4 numeric,
// 5 solver limit reached.

#include <openssl/evp.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "amrplan/battery.hpp"
#include "amrplan/errors.hpp"
#include "amrplan/evaluate.hpp"
#include "amrplan/model_core.hpp"
#include "amrplan/robust.hpp"
#include "amrplan/scenario.hpp"
#include "amrplan/solver.hpp"
#include "nlohmann/json.hpp"
#include "spdlog/sinks/stdout_color_sinks.h"
#include "spdlog/spdlog.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace amrplan;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode {
  kOk = 0,
  kConfig = 2,
  kInfeasible = 3,
  kNumeric = 4,
  kLimit = 5,
};

struct Options {
  std::string command;
  std::string scenario;
  std::string battery = "config/battery_default.json";
  std::string out = "out";
  std::string decision;
  std::optional<uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<int> samples;
  int ns = 4;
  int nt = 4;
  std::optional<double> big_m;
  double gap = 1e-6;
  std::optional<double> time_limit;
  long nodes = 2'000'000;
  int threads = 1;
  bool emit_plotdata = false;
  std::optional<std::string> recourse;
  std::string charging_cost = "taylor";
  int mc_samples = 10000;
  bool robust = false;
  bool verbose = false;
};

// Raised for solver outcomes that end the run with a specific exit code.
struct SolveFailure {
  ExitCode code;
  std::string message;
};

std::string Sha256(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericError("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class RunDir {
 public:
  explicit RunDir(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create " + dir_ + ": " + ec.message());
  }

  void Write(const std::string& name, const std::string& content) {
    const std::string path = (fs::path(dir_) / name).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw IoError("cannot write " + path);
    hashes_[name] = Sha256(content);
    spdlog::info("wrote {}", path);
  }
  void WriteJson(const std::string& name, const json& j) {
    Write(name, j.dump(2) + "\n");
  }
  // Picks up the plot_*.csv files WritePlotData produced.
  void AdoptPlots() {
    for (const auto& e : fs::directory_iterator(dir_)) {
      const std::string name = e.path().filename().string();
      if (name.rfind("plot_", 0) == 0) hashes_[name] = Sha256(ReadText(e.path().string()));
    }
  }

  const std::string& path() const { return dir_; }
  const std::map<std::string, std::string>& hashes() const { return hashes_; }

 private:
  std::string dir_;
  std::map<std::string, std::string> hashes_;
};

json Nullable(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

core::McCormickConfig McConfig(const Options& o) {
  core::McCormickConfig c;
  c.ns = o.ns;
  c.nt = o.nt;
  c.big_m = o.big_m;
  if (o.charging_cost == "taylor") {
    c.charging_cost = core::ChargingCost::kTaylor;
  } else if (o.charging_cost == "constant") {
    c.charging_cost = core::ChargingCost::kConstant;
  } else {
    throw ConfigError("--charging-cost must be taylor or constant");
  }
  if (c.ns < 1 || c.nt < 1) throw ConfigError("--ns and --nt must be >= 1");
  return c;
}

solver::SolveOptions SolverOptions(const Options& o) {
  solver::SolveOptions s;
  s.gap_tol = o.gap;
  if (o.time_limit) s.time_limit = *o.time_limit;
  s.node_limit = o.nodes;
  s.threads = o.threads;
  s.log = o.verbose;
  if (!(s.gap_tol >= 0.0)) throw ConfigError("--gap must be >= 0");
  if (s.threads < 1) throw ConfigError("--threads must be >= 1");
  return s;
}

scenario::Scenario LoadScenario(const Options& o) {
  if (o.scenario.empty()) throw ConfigError(o.command + " needs --scenario");
  auto s = scenario::LoadScenario(o.scenario);
  if (o.seed && s.uncertainty) s.uncertainty->seed = *o.seed;
  return s;
}

battery::BatteryParams LoadBattery(const Options& o) {
  return battery::LoadParams(o.battery);
}

uint64_t RootSeed(const Options& o, const scenario::Scenario& s) {
  if (o.seed) return *o.seed;
  return s.uncertainty ? s.uncertainty->seed : 1;
}

json SolverJson(const Options& o) {
  return {{"gap", o.gap},
          {"time_limit", Nullable(o.time_limit)},
          {"nodes", o.nodes},
          {"threads", o.threads}};
}

json McJson(const Options& o) {
  return {{"ns", o.ns},
          {"nt", o.nt},
          {"big_m", Nullable(o.big_m)},
          {"charging_cost", o.charging_cost}};
}

// Run configuration that determines every artifact.
json BaseConfig(const Options& o, const scenario::Scenario* s,
                const battery::BatteryParams& p) {
  json c;
  c["command"] = o.command;
  if (s) c["scenario"] = scenario::ScenarioToJson(*s);
  c["battery"] = battery::ParamsToJson(p);
  return c;
}

void WriteManifest(RunDir& dir, const Options& o, uint64_t seed,
                   const json& config, int argc, char** argv) {
  json m;
  m["tool"] = "amrplan";
  m["command"] = o.command;
  m["seed"] = seed;
  m["config_hash"] = "sha256:" + Sha256(config.dump());
  m["config"] = config;
  std::vector<std::string> args(argv + 1, argv + argc);
  m["argv"] = args;
  m["inputs"] = json::object();
  for (const std::string* path : {&o.scenario, &o.battery, &o.decision}) {
    if (!path->empty() && fs::exists(*path)) {
      m["inputs"][*path] = "sha256:" + Sha256(ReadText(*path));
    }
  }
  m["artifacts"] = json::object();
  for (const auto& [name, hash] : dir.hashes()) m["artifacts"][name] = "sha256:" + hash;
  m["versions"] = {
      {"amrplan", kVersion},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
      {"spdlog", std::to_string(SPDLOG_VER_MAJOR) + "." +
                     std::to_string(SPDLOG_VER_MINOR) + "." +
                     std::to_string(SPDLOG_VER_PATCH)},
      {"compiler", __VERSION__},
      {"cxx_standard", static_cast<long>(__cplusplus)},
  };
  dir.WriteJson("manifest.json", m);
}

// Fails on statuses without a usable solution; returns the exit code
// for the remaining ones.
ExitCode CheckStatus(const solver::SolveResult& r) {
  using solver::Status;
  switch (r.status) {
    case Status::kOptimal:
    case Status::kGapLimit:
      return kOk;
    case Status::kInfeasible:
      throw SolveFailure{kInfeasible, "model is infeasible"};
    case Status::kUnbounded:
      throw SolveFailure{kNumeric, "model is unbounded"};
    case Status::kNodeLimit:
    case Status::kTimeLimit:
      if (!r.has_solution()) {
        throw SolveFailure{kLimit, std::string(solver::StatusName(r.status)) +
                                       " reached without a solution"};
      }
      spdlog::warn("{} reached; writing the incumbent", solver::StatusName(r.status));
      return kLimit;
  }
  return kNumeric;
}

json SolveJson(const solver::SolveResult& r) {
  return {{"status", solver::StatusName(r.status)},
          {"objective", r.objective},
          {"bound", r.bound},
          {"gap", r.gap()},
          {"nodes", r.nodes},
          {"lp_iterations", r.lp_iterations}};
}

solver::SolveResult RunSolver(const milp::MilpModel& m, const Options& o) {
  spdlog::info("solving: {} columns ({} binary), {} rows", m.num_variables(),
               m.num_binaries(), m.num_rows());
  auto r = solver::SolveMilp(m, SolverOptions(o));
  spdlog::info("{} objective {:.9g} nodes {} in {:.2f} s",
               solver::StatusName(r.status), r.objective, r.nodes, r.wall_time);
  return r;
}

int CmdFit(const Options& o, int argc, char** argv) {
  auto p = LoadBattery(o);
  const auto fit = battery::FitAndStore(p);
  RunDir dir(o.out);
  dir.WriteJson("battery.json", battery::ParamsToJson(p));
  dir.WriteJson("summary.json", {{"command", "fit"},
                                 {"kc", fit.kc},
                                 {"ks", fit.ks},
                                 {"charge_rates", fit.charge_rates},
                                 {"idle_rates", fit.idle_rates}});
  WriteManifest(dir, o, 0, BaseConfig(o, nullptr, p), argc, argv);
  return kOk;
}

int CmdPlan(const Options& o, int argc, char** argv) {
  const auto s = LoadScenario(o);
  const auto p = LoadBattery(o);
  const auto mc = McConfig(o);
  const auto pm = core::AssembleDeterministic(s, p, mc);
  const auto r = RunSolver(pm.model, o);
  const ExitCode code = CheckStatus(r);
  const auto d = core::ExtractDecision(pm.vars, r.x);
  const auto rep = evaluate::SimulateSchedule(s, p, d);
  const uint64_t seed = RootSeed(o, s);
  const auto cmp = evaluate::CompareToBaseline(s, p, d, 0, seed);

  RunDir dir(o.out);
  dir.WriteJson("decision.json", scenario::DecisionToJson(d));
  dir.Write("report.csv", evaluate::ReportCsv(rep));
  dir.WriteJson("summary.json", {{"command", "plan"},
                                 {"solve", SolveJson(r)},
                                 {"decision", scenario::DecisionToJson(d)},
                                 {"evaluation", evaluate::ReportJson(rep)},
                                 {"baseline_comparison", evaluate::ComparisonJson(cmp)}});
  if (o.emit_plotdata) {
    evaluate::WritePlotData(dir.path(), s, rep, std::nullopt, cmp);
    dir.AdoptPlots();
  }
  json config = BaseConfig(o, &s, p);
  config["mccormick"] = McJson(o);
  config["solver"] = SolverJson(o);
  WriteManifest(dir, o, seed, config, argc, argv);
  return code;
}

robust::RobustConfig RobustConfigFor(const Options& o, const scenario::Scenario& s) {
  auto cfg = robust::ConfigFromScenario(s);
  if (o.epsilon) cfg.epsilon = *o.epsilon;
  if (o.samples) cfg.k_samples = *o.samples;
  if (o.recourse) cfg.recourse = robust::RecourseModeFromName(*o.recourse);
  if (cfg.recourse != robust::RecourseMode::kFixed) cfg.fixed_gains.reset();
  cfg.Validate();
  return cfg;
}

int CmdPlanRobust(const Options& o, int argc, char** argv) {
  const auto s = LoadScenario(o);
  if (!s.uncertainty) throw ConfigError("plan-robust needs an uncertainty model in the scenario");
  const auto p = LoadBattery(o);
  const auto mc = McConfig(o);
  const auto cfg = RobustConfigFor(o, s);
  if (o.mc_samples < 1) throw ConfigError("--mc-samples must be >= 1");
  const auto rm = robust::AssembleRobust(s, p, mc, cfg);
  spdlog::info("budget {} per row family; presolve removed {} + {} + {} sampled rows",
               rm.budget, rm.pruned_never_violated, rm.pruned_dominated,
               rm.pruned_free);
  const auto r = RunSolver(rm.core.model, o);
  const ExitCode code = CheckStatus(r);
  const auto d = robust::ExtractDecision(rm, r.x);

  json audit = json::array();
  bool budget_ok = true;
  for (const auto& a : robust::AuditChanceConstraints(rm, r.x)) {
    budget_ok = budget_ok && a.within_budget && a.consistent;
    if (a.violated == 0) continue;
    audit.push_back({{"group", robust::GroupName(a.group)},
                     {"task", a.task},
                     {"violated", a.violated},
                     {"selected", a.selected},
                     {"within_budget", a.within_budget}});
  }
  const uint64_t seed = RootSeed(o, s);
  const auto nominal = evaluate::SimulateSchedule(s, p, d);
  const auto val = evaluate::MonteCarloValidate(s, p, d, o.mc_samples, seed);
  const auto cmp = evaluate::CompareToBaseline(s, p, d, o.mc_samples, seed);

  RunDir dir(o.out);
  dir.WriteJson("decision.json", scenario::DecisionToJson(d));
  dir.Write("report.csv", evaluate::ReportCsv(nominal, val.violation_freq));
  dir.WriteJson("summary.json",
                {{"command", "plan-robust"},
                 {"epsilon", cfg.epsilon},
                 {"k_samples", cfg.k_samples},
                 {"budget", rm.budget},
                 {"solve", SolveJson(r)},
                 {"decision", scenario::DecisionToJson(d)},
                 {"presolve", {{"never_violated", rm.pruned_never_violated},
                               {"dominated", rm.pruned_dominated},
                               {"free", rm.pruned_free}}},
                 {"budget_respected", budget_ok},
                 {"sampled_violations", audit},
                 {"nominal", evaluate::ReportJson(nominal)},
                 {"validation", evaluate::MonteCarloJson(val)},
                 {"baseline_comparison", evaluate::ComparisonJson(cmp)}});
  if (o.emit_plotdata) {
    evaluate::WritePlotData(dir.path(), s, nominal, val, cmp);
    dir.AdoptPlots();
  }
  json config = BaseConfig(o, &s, p);
  config["mccormick"] = McJson(o);
  config["solver"] = SolverJson(o);
  config["robust"] = robust::ConfigToJson(cfg);
  config["mc_samples"] = o.mc_samples;
  WriteManifest(dir, o, seed, config, argc, argv);
  if (!budget_ok) throw SolveFailure{kNumeric, "solution breaks a chance budget"};
  return code;
}

scenario::Decision LoadDecision(const Options& o) {
  if (o.decision.empty()) throw ConfigError(o.command + " needs --decision");
  json j;
  try {
    j = json::parse(ReadText(o.decision));
  } catch (const json::exception& e) {
    throw ParseError(o.decision + ": " + e.what());
  }
  // Accept a bare decision or a summary that holds one.
  if (j.contains("decision")) j = j.at("decision");
  return scenario::DecisionFromJson(j);
}

int CmdEvaluate(const Options& o, int argc, char** argv, bool compare) {
  const auto s = LoadScenario(o);
  const auto p = LoadBattery(o);
  const auto d = LoadDecision(o);
  if (o.mc_samples < 0) throw ConfigError("--mc-samples must be >= 0");
  if (o.mc_samples < 100) {
    spdlog::warn("{} Monte-Carlo samples; frequencies will be coarse", o.mc_samples);
  }
  const uint64_t seed = RootSeed(o, s);
  const auto nominal = evaluate::SimulateSchedule(s, p, d);

  RunDir dir(o.out);
  json summary = {{"command", o.command}, {"decision", scenario::DecisionToJson(d)},
                  {"nominal", evaluate::ReportJson(nominal)}};
  std::optional<evaluate::MonteCarloReport> val;
  std::optional<evaluate::Comparison> cmp;
  if (compare) {
    cmp = evaluate::CompareToBaseline(s, p, d, o.mc_samples, seed);
    summary["comparison"] = evaluate::ComparisonJson(*cmp);
    if (o.mc_samples > 0) val = cmp->decision;
  } else {
    val = evaluate::MonteCarloValidate(s, p, d, std::max(o.mc_samples, 1), seed);
    summary["validation"] = evaluate::MonteCarloJson(*val);
  }
  dir.WriteJson("decision.json", scenario::DecisionToJson(d));
  dir.Write("report.csv", val ? evaluate::MonteCarloCsv(*val)
                              : evaluate::ReportCsv(nominal));
  dir.WriteJson("summary.json", summary);
  if (o.emit_plotdata) {
    evaluate::WritePlotData(dir.path(), s, nominal, val, cmp);
    dir.AdoptPlots();
  }
  json config = BaseConfig(o, &s, p);
  config["decision"] = scenario::DecisionToJson(d);
  config["mc_samples"] = o.mc_samples;
  WriteManifest(dir, o, seed, config, argc, argv);
  return kOk;
}

int CmdExportLp(const Options& o, int argc, char** argv) {
  const auto s = LoadScenario(o);
  const auto p = LoadBattery(o);
  const auto mc = McConfig(o);
  json config = BaseConfig(o, &s, p);
  config["mccormick"] = McJson(o);
  milp::MilpModel model;
  if (o.robust) {
    if (!s.uncertainty) throw ConfigError("--robust needs an uncertainty model");
    const auto cfg = RobustConfigFor(o, s);
    model = robust::AssembleRobust(s, p, mc, cfg).core.model;
    config["robust"] = robust::ConfigToJson(cfg);
  } else {
    model = core::AssembleDeterministic(s, p, mc).model;
  }
  std::ostringstream lp;
  solver::WriteLp(model, lp);
  RunDir dir(o.out);
  dir.Write("model.lp", lp.str());
  json tags = json::object();
  for (const auto& [tag, count] : model.RowCountsByTag()) tags[tag] = count;
  dir.WriteJson("summary.json", {{"command", "export-lp"},
                                 {"columns", model.num_variables()},
                                 {"binaries", model.num_binaries()},
                                 {"rows", model.num_rows()},
                                 {"rows_by_tag", tags}});
  WriteManifest(dir, o, RootSeed(o, s), config, argc, argv);
  return kOk;
}

int ExitFor(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kNumeric:
      return kNumeric;
    case ErrorKind::kDomain:
    case ErrorKind::kConfig:
    case ErrorKind::kFit:
    case ErrorKind::kParse:
    case ErrorKind::kIo:
      return kConfig;
  }
  return kConfig;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("amrplan");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  Options o;
  CLI::App app{"Degradation-aware charging and speed planning for a mobile robot"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto common = [&](CLI::App* c, bool needs_scenario) {
    auto* sc = c->add_option("--scenario", o.scenario, "scenario JSON");
    if (needs_scenario) sc->required();
    c->add_option("--battery", o.battery, "battery parameter JSON")->capture_default_str();
    c->add_option("--out", o.out, "output directory")->capture_default_str();
    c->add_option("--seed", o.seed, "root seed (default: the scenario's)");
    c->add_flag("-v,--verbose", o.verbose, "debug logging and solver progress");
  };
  auto modelling = [&](CLI::App* c) {
    c->add_option("--ns", o.ns, "McCormick cells along the target SOC")->capture_default_str();
    c->add_option("--nt", o.nt, "McCormick cells along the idle time")->capture_default_str();
    c->add_option("--big-m", o.big_m, "envelope big-M (default: per-row analytic)");
    c->add_option("--charging-cost", o.charging_cost, "taylor or constant")
        ->check(CLI::IsMember({"taylor", "constant"}))
        ->capture_default_str();
  };
  auto solving = [&](CLI::App* c) {
    c->add_option("--gap", o.gap, "relative optimality gap")->capture_default_str();
    c->add_option("--time-limit", o.time_limit, "seconds");
    c->add_option("--nodes", o.nodes, "branch-and-bound node limit")->capture_default_str();
    c->add_option("--threads", o.threads, "solver worker threads")->capture_default_str();
  };
  auto robust_opts = [&](CLI::App* c) {
    c->add_option("--epsilon", o.epsilon, "violation probability");
    c->add_option("--samples", o.samples, "SAA sample count K");
    c->add_option("--recourse", o.recourse, "off, fixed or optimize")
        ->check(CLI::IsMember({"off", "fixed", "optimize"}));
  };
  auto validation = [&](CLI::App* c) {
    c->add_option("--mc-samples", o.mc_samples, "out-of-sample draws")->capture_default_str();
    c->add_flag("--emit-plotdata", o.emit_plotdata, "write plot_*.csv series");
  };

  auto* fit = app.add_subcommand("fit", "fit kc and ks into a battery file");
  common(fit, false);
  auto* plan = app.add_subcommand("plan", "deterministic plan");
  common(plan, true);
  modelling(plan);
  solving(plan);
  plan->add_flag("--emit-plotdata", o.emit_plotdata, "write plot_*.csv series");
  auto* pr = app.add_subcommand("plan-robust", "chance-constrained plan");
  common(pr, true);
  modelling(pr);
  solving(pr);
  robust_opts(pr);
  validation(pr);
  auto* ev = app.add_subcommand("evaluate", "Monte-Carlo validation of a decision");
  common(ev, true);
  ev->add_option("--decision", o.decision, "decision.json")->required();
  validation(ev);
  auto* cmp = app.add_subcommand("compare", "compare a decision with the baseline");
  common(cmp, true);
  cmp->add_option("--decision", o.decision, "decision.json")->required();
  validation(cmp);
  auto* lp = app.add_subcommand("export-lp", "write the planning model as LP text");
  common(lp, true);
  modelling(lp);
  robust_opts(lp);
  lp->add_flag("--robust", o.robust, "export the chance-constrained model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  spdlog::set_level(o.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (fit->parsed()) {
      o.command = "fit";
      return CmdFit(o, argc, argv);
    }
    if (plan->parsed()) {
      o.command = "plan";
      return CmdPlan(o, argc, argv);
    }
    if (pr->parsed()) {
      o.command = "plan-robust";
      return CmdPlanRobust(o, argc, argv);
    }
    if (ev->parsed()) {
      o.command = "evaluate";
      return CmdEvaluate(o, argc, argv, false);
    }
    if (cmp->parsed()) {
      o.command = "compare";
      return CmdEvaluate(o, argc, argv, true);
    }
    o.command = "export-lp";
    return CmdExportLp(o, argc, argv);
  } catch (const SolveFailure& f) {
    spdlog::error("{}", f.message);
    return f.code;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return ExitFor(e);
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("malformed input: {}", e.what());
    return kConfig;
  }
}
