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

#include "amrplan/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "amrplan/errors.hpp"
#include "amrplan/rng.hpp"
#include "amrplan/robust.hpp"

namespace amrplan::evaluate {
namespace {

using Json = nlohmann::json;

// Distances exactly at the SOC budget must not flag through rounding.
constexpr double kSocSlack = 1e-9;

std::string Num(double x) { return fmt::format("{}", x); }

double GridPoint(const scenario::Interval& box, int k, int count) {
  if (count == 1) return box.lo;
  if (k == count - 1) return box.hi;
  return box.lo + box.width() * k / (count - 1);
}

struct GridCandidate {
  double objective = std::numeric_limits<double>::infinity();
  long index = -1;
  bool Better(const GridCandidate& other) const {
    if (index < 0) return false;
    if (other.index < 0) return true;
    return objective < other.objective ||
           (objective == other.objective && index < other.index);
  }
};

double EvaluateGridPoint(const scenario::Scenario& s,
                         const battery::BatteryParams& p,
                         const std::array<int, 3>& res, long flat) {
  const int kc = static_cast<int>(flat % res[2]);
  const int kv = static_cast<int>((flat / res[2]) % res[1]);
  const int ks = static_cast<int>(flat / (static_cast<long>(res[2]) * res[1]));
  const scenario::Decision d{GridPoint(s.s_bounds, ks, res[0]),
                             GridPoint(s.v_bounds, kv, res[1]),
                             GridPoint(s.c_bounds, kc, res[2]), std::nullopt};
  const EvaluationReport r = SimulateSchedule(s, p, d);
  return r.soc_violations > 0 ? std::numeric_limits<double>::infinity()
                              : r.objective;
}

GridResult MakeGridResult(const scenario::Scenario& s,
                          const std::array<int, 3>& res,
                          const GridCandidate& best, long total) {
  GridResult out;
  out.evaluated = total;
  if (best.index < 0) {
    out.feasible = false;
    out.objective = best.objective;
    return out;
  }
  const long flat = best.index;
  out.index = {static_cast<int>(flat / (static_cast<long>(res[2]) * res[1])),
               static_cast<int>((flat / res[2]) % res[1]),
               static_cast<int>(flat % res[2])};
  out.decision = {GridPoint(s.s_bounds, out.index[0], res[0]),
                  GridPoint(s.v_bounds, out.index[1], res[1]),
                  GridPoint(s.c_bounds, out.index[2], res[2]), std::nullopt};
  out.objective = best.objective;
  return out;
}

long GridSize(const std::array<int, 3>& res) {
  for (int r : res) {
    if (r < 2) throw DomainError("grid resolution must be at least 2 per axis");
  }
  return static_cast<long>(res[0]) * res[1] * res[2];
}

// Per-sample metrics, one row of `stride` doubles per sample.
struct SampleTable {
  int n = 0;
  int m = 0;
  // 4 totals, then per task: violation, t, tc, tw, dt, eta_c, eta_s
  static constexpr int kTotals = 4;
  static constexpr int kPerTask = 7;
  int stride() const { return kTotals + kPerTask * n; }
  std::vector<double> data;
  std::vector<int> clipped;

  void Store(int k, const EvaluationReport& r) {
    double* row = data.data() + static_cast<size_t>(k) * stride();
    row[0] = r.cycling;
    row[1] = r.calendar;
    row[2] = r.waiting;
    row[3] = r.objective;
    for (int i = 0; i < n; ++i) {
      const TaskOutcome& t = r.tasks[i];
      double* cell = row + kTotals + kPerTask * i;
      cell[0] = t.soc_violation ? 1.0 : 0.0;
      cell[1] = t.t;
      cell[2] = t.tc;
      cell[3] = t.tw;
      cell[4] = t.dt;
      cell[5] = t.eta_c;
      cell[6] = t.eta_s;
    }
    clipped[k] = r.clipped;
  }

  double ColumnMean(int col) const {
    std::vector<double> column(static_cast<size_t>(m));
    for (int k = 0; k < m; ++k) column[k] = data[static_cast<size_t>(k) * stride() + col];
    return PairwiseSum(column) / m;
  }
};

MonteCarloReport Reduce(const SampleTable& table, const scenario::Decision& d) {
  MonteCarloReport out;
  out.samples = table.m;
  out.cycling = table.ColumnMean(0);
  out.calendar = table.ColumnMean(1);
  out.waiting = table.ColumnMean(2);
  out.objective = table.ColumnMean(3);
  for (int i = 0; i < table.n; ++i) {
    const int base = SampleTable::kTotals + SampleTable::kPerTask * i;
    out.violation_freq.push_back(table.ColumnMean(base));
    TaskOutcome t;
    t.t = table.ColumnMean(base + 1);
    t.tc = table.ColumnMean(base + 2);
    t.tw = table.ColumnMean(base + 3);
    t.dt = table.ColumnMean(base + 4);
    t.eta_c = table.ColumnMean(base + 5);
    t.eta_s = table.ColumnMean(base + 6);
    t.s_bar = d.s_bar;
    t.v = d.v;
    t.c = d.c;
    out.mean_tasks.push_back(t);
  }
  for (int c : table.clipped) out.clipped += c;
  return out;
}

MonteCarloReport RunMonteCarlo(const scenario::Scenario& s,
                               const battery::BatteryParams& p,
                               const scenario::Decision& d, int m,
                               uint64_t seed, bool parallel) {
  const auto samples = ValidationSamples(s, m, seed);
  if (m < 100) spdlog::warn("Monte Carlo with only {} samples", m);
  SampleTable table;
  table.n = s.n;
  table.m = m;
  table.data.assign(static_cast<size_t>(m) * table.stride(), 0.0);
  table.clipped.assign(static_cast<size_t>(m), 0);
  if (parallel) {
    // Exceptions may not leave an OpenMP region; carry the first one out.
    std::string error;
    bool domain = false;
#pragma omp parallel for schedule(static)
    for (int k = 0; k < m; ++k) {
      try {
        table.Store(k, SimulateSchedule(s, p, d, samples[k]));
      } catch (const Error& e) {
#pragma omp critical(amrplan_mc_error)
        if (error.empty()) {
          error = e.what();
          domain = e.kind() == ErrorKind::kDomain;
        }
      }
    }
    if (!error.empty()) {
      if (domain) throw DomainError(error);
      throw ConfigError(error);
    }
  } else {
    for (int k = 0; k < m; ++k) table.Store(k, SimulateSchedule(s, p, d, samples[k]));
  }
  return Reduce(table, d);
}

std::optional<double> Reduction(double baseline, double value) {
  if (baseline == 0.0) return std::nullopt;
  return (baseline - value) / baseline * 100.0;
}

MonteCarloReport Nominal(const scenario::Scenario& s,
                         const battery::BatteryParams& p,
                         const scenario::Decision& d) {
  SampleTable table;
  table.n = s.n;
  table.m = 1;
  table.data.assign(static_cast<size_t>(table.stride()), 0.0);
  table.clipped.assign(1, 0);
  table.Store(0, SimulateSchedule(s, p, d));
  return Reduce(table, d);
}

Json OptionalJson(const std::optional<double>& v) {
  return v ? Json(*v) : Json("n/a");
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

EvaluationReport SimulateControls(const scenario::Scenario& s,
                                  const battery::BatteryParams& p,
                                  const scenario::TaskControls& ctl,
                                  std::span<const double> delta) {
  const int n = s.n;
  if (static_cast<int>(ctl.s_bar.size()) != n ||
      static_cast<int>(ctl.v.size()) != n || static_cast<int>(ctl.c.size()) != n) {
    throw DomainError("task controls must have one entry per task");
  }
  const scenario::PerturbedTasks real = scenario::Perturb(s, delta);
  EvaluationReport r;
  r.tasks.resize(n);
  for (int i = 0; i < n; ++i) {
    TaskOutcome& o = r.tasks[i];
    o.s_bar = ctl.s_bar[i];
    o.v = ctl.v[i];
    o.c = ctl.c[i];
    if (!(o.v > 0.0)) throw DomainError("speed must be positive");
    if (!(o.c > 0.0)) throw DomainError("C-rate must be positive");
    const double d = real.d[i];
    if (d < 0.0) throw DomainError("realized distance is negative");
    o.t = d / o.v;
    o.tc = p.kv * d / o.c;
    o.soc_violation = p.kv * d > o.s_bar - s.s_lower + kSocSlack;
    if (o.soc_violation) ++r.soc_violations;
  }
  // dt_{i+1} - tw_{i+1} = dt_i + t_i + tc_i - xi_i, both parts nonnegative.
  r.tasks[0].dt = 0.0;
  r.tasks[0].tw = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const TaskOutcome& cur = r.tasks[i];
    const double over = cur.dt + cur.t + cur.tc - real.xi[i];
    r.tasks[i + 1].dt = std::max(0.0, over);
    r.tasks[i + 1].tw = std::max(0.0, -over);
  }
  for (TaskOutcome& o : r.tasks) {
    o.eta_c = p.kc * o.c * o.tc;
    o.eta_s = p.ks * o.s_bar * o.tw;
    r.cycling += o.eta_c;
    r.calendar += o.eta_s;
    r.waiting += o.dt;
  }
  r.objective = r.cycling + r.calendar + s.lambda * r.waiting;
  return r;
}

EvaluationReport SimulateSchedule(const scenario::Scenario& s,
                                  const battery::BatteryParams& p,
                                  const scenario::Decision& d,
                                  std::span<const double> delta) {
  if (d.recourse && !delta.empty()) {
    const auto adjusted = robust::ApplyRecourse(s, d, delta);
    EvaluationReport r = SimulateControls(s, p, adjusted.controls, delta);
    r.clipped = adjusted.clipped;
    return r;
  }
  return SimulateControls(s, p, scenario::Broadcast(d, s.n), delta);
}

GridResult GridOracle(const scenario::Scenario& s,
                      const battery::BatteryParams& p,
                      std::array<int, 3> res) {
  const long total = GridSize(res);
  GridCandidate best;
#pragma omp parallel
  {
    GridCandidate local;
#pragma omp for schedule(static)
    for (long flat = 0; flat < total; ++flat) {
      const double obj = EvaluateGridPoint(s, p, res, flat);
      const GridCandidate cand{obj, std::isfinite(obj) ? flat : -1};
      if (cand.Better(local)) local = cand;
    }
#pragma omp critical(amrplan_grid_best)
    if (local.Better(best)) best = local;
  }
  return MakeGridResult(s, res, best, total);
}

GridResult GridOracle(const scenario::Scenario& s,
                      const battery::BatteryParams& p, int resolution) {
  return GridOracle(s, p, {resolution, resolution, resolution});
}

GridResult GridOracleSerial(const scenario::Scenario& s,
                            const battery::BatteryParams& p,
                            std::array<int, 3> res) {
  const long total = GridSize(res);
  GridCandidate best;
  for (long flat = 0; flat < total; ++flat) {
    const double obj = EvaluateGridPoint(s, p, res, flat);
    const GridCandidate cand{obj, std::isfinite(obj) ? flat : -1};
    if (cand.Better(best)) best = cand;
  }
  return MakeGridResult(s, res, best, total);
}

std::vector<std::vector<double>> ValidationSamples(
    const scenario::Scenario& s, int m, uint64_t seed) {
  if (m < 1) throw DomainError("Monte Carlo needs at least one sample");
  if (!s.uncertainty) {
    return std::vector<std::vector<double>>(
        static_cast<size_t>(m), std::vector<double>(2 * static_cast<size_t>(s.n), 0.0));
  }
  return scenario::SampleUncertainty(*s.uncertainty, m, DeriveSeed(seed, "validate"));
}

MonteCarloReport MonteCarloValidate(const scenario::Scenario& s,
                                    const battery::BatteryParams& p,
                                    const scenario::Decision& d, int m,
                                    uint64_t seed) {
  return RunMonteCarlo(s, p, d, m, seed, true);
}

MonteCarloReport MonteCarloValidateSerial(const scenario::Scenario& s,
                                          const battery::BatteryParams& p,
                                          const scenario::Decision& d, int m,
                                          uint64_t seed) {
  return RunMonteCarlo(s, p, d, m, seed, false);
}

Comparison CompareToBaseline(const scenario::Scenario& s,
                             const battery::BatteryParams& p,
                             const scenario::Decision& d, int m,
                             uint64_t seed) {
  const scenario::Decision base = scenario::BaselineDecision(s);
  Comparison out;
  if (m == 0) {
    out.decision = Nominal(s, p, d);
    out.baseline = Nominal(s, p, base);
  } else {
    out.decision = MonteCarloValidate(s, p, d, m, seed);
    out.baseline = MonteCarloValidate(s, p, base, m, seed);
  }
  out.calendar_reduction_pct = Reduction(out.baseline.calendar, out.decision.calendar);
  out.cycling_reduction_pct = Reduction(out.baseline.cycling, out.decision.cycling);
  out.objective_reduction_pct =
      Reduction(out.baseline.objective, out.decision.objective);
  out.added_waiting = out.decision.waiting - out.baseline.waiting;
  return out;
}

double PairwiseSum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const size_t half = v.size() / 2;
  return PairwiseSum(v.first(half)) + PairwiseSum(v.subspan(half));
}

std::string ReportCsv(const EvaluationReport& r,
                      const std::vector<double>& freq) {
  std::string out = "task,s_bar,v,c,t,tc,tw,dt,eta_c,eta_s,soc_violation,violation_freq\n";
  for (size_t i = 0; i < r.tasks.size(); ++i) {
    const TaskOutcome& t = r.tasks[i];
    const double f = freq.empty() ? (t.soc_violation ? 1.0 : 0.0) : freq[i];
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", i, Num(t.s_bar),
                       Num(t.v), Num(t.c), Num(t.t), Num(t.tc), Num(t.tw),
                       Num(t.dt), Num(t.eta_c), Num(t.eta_s),
                       t.soc_violation ? 1 : 0, Num(f));
  }
  return out;
}

std::string MonteCarloCsv(const MonteCarloReport& r) {
  std::string out = "task,t,tc,tw,dt,eta_c,eta_s,violation_freq\n";
  for (size_t i = 0; i < r.mean_tasks.size(); ++i) {
    const TaskOutcome& t = r.mean_tasks[i];
    out += fmt::format("{},{},{},{},{},{},{},{}\n", i, Num(t.t), Num(t.tc),
                       Num(t.tw), Num(t.dt), Num(t.eta_c), Num(t.eta_s),
                       Num(r.violation_freq[i]));
  }
  return out;
}

Json ReportJson(const EvaluationReport& r) {
  return Json{{"cycling_degradation", r.cycling},
              {"calendar_degradation", r.calendar},
              {"total_waiting", r.waiting},
              {"objective", r.objective},
              {"soc_violations", r.soc_violations},
              {"clipped", r.clipped}};
}

Json MonteCarloJson(const MonteCarloReport& r) {
  double worst = 0.0;
  for (double f : r.violation_freq) worst = std::max(worst, f);
  return Json{{"samples", r.samples},
              {"cycling_degradation", r.cycling},
              {"calendar_degradation", r.calendar},
              {"total_waiting", r.waiting},
              {"objective", r.objective},
              {"violation_freq", r.violation_freq},
              {"max_violation_freq", worst},
              {"clipped", r.clipped}};
}

Json ComparisonJson(const Comparison& c) {
  return Json{{"decision", MonteCarloJson(c.decision)},
              {"baseline", MonteCarloJson(c.baseline)},
              {"calendar_reduction_pct", OptionalJson(c.calendar_reduction_pct)},
              {"cycling_reduction_pct", OptionalJson(c.cycling_reduction_pct)},
              {"objective_reduction_pct", OptionalJson(c.objective_reduction_pct)},
              {"added_waiting_h", c.added_waiting}};
}

void WritePlotData(const std::string& dir, const scenario::Scenario& s,
                   const EvaluationReport& nominal,
                   const std::optional<MonteCarloReport>& validation,
                   const std::optional<Comparison>& comparison) {
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  std::string sched = "task,xi,d,t,tc,tw,dt\n";
  for (int i = 0; i < s.n; ++i) {
    const TaskOutcome& t = nominal.tasks[i];
    sched += fmt::format("{},{},{},{},{},{},{}\n", i, Num(s.xi[i]), Num(s.d[i]),
                         Num(t.t), Num(t.tc), Num(t.tw), Num(t.dt));
  }
  WriteFile(root / "plot_schedule.csv", sched);
  if (validation) {
    const double eps = s.uncertainty ? s.uncertainty->epsilon : 0.0;
    const int m = validation->samples;
    const double slack = m > 0 ? 3.0 * std::sqrt(eps * (1.0 - eps) / m) : 0.0;
    std::string viol = "task,violation_freq,epsilon,limit\n";
    for (int i = 0; i < s.n; ++i) {
      viol += fmt::format("{},{},{},{}\n", i, Num(validation->violation_freq[i]),
                          Num(eps), Num(eps + slack));
    }
    WriteFile(root / "plot_violation.csv", viol);
  }
  if (comparison) {
    std::string deg =
        "task,eta_c,eta_s,dt,baseline_eta_c,baseline_eta_s,baseline_dt\n";
    for (int i = 0; i < s.n; ++i) {
      const TaskOutcome& a = comparison->decision.mean_tasks[i];
      const TaskOutcome& b = comparison->baseline.mean_tasks[i];
      deg += fmt::format("{},{},{},{},{},{},{}\n", i, Num(a.eta_c), Num(a.eta_s),
                         Num(a.dt), Num(b.eta_c), Num(b.eta_s), Num(b.dt));
    }
    WriteFile(root / "plot_degradation.csv", deg);
  }
}

}  // namespace amrplan::evaluate
