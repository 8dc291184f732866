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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "amrplan/errors.hpp"
#include "amrplan/solver.hpp"

namespace amrplan::solver {
namespace {

constexpr int kTermsPerLine = 8;
constexpr const char* kImportTag = "imported";

std::string Num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteTerms(std::ostream& out, const std::vector<milp::Term>& terms,
                const milp::MilpModel& model) {
  int on_line = 0;
  for (const auto& t : terms) {
    if (on_line == kTermsPerLine) {
      out << "\n   ";
      on_line = 0;
    }
    out << (t.coef < 0 ? " - " : " + ") << Num(std::abs(t.coef)) << ' '
        << model.variable(t.var).name;
    ++on_line;
  }
}

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

enum class Section { kNone, kObjective, kRows, kBounds, kBinaries, kEnd };

bool IsNumber(const std::string& tok, double& value) {
  const std::string low = Lower(tok);
  if (low == "inf" || low == "+inf" || low == "infinity" || low == "+infinity") {
    value = milp::kInf;
    return true;
  }
  if (low == "-inf" || low == "-infinity") {
    value = -milp::kInf;
    return true;
  }
  char* end = nullptr;
  value = std::strtod(tok.c_str(), &end);
  return end != tok.c_str() && *end == '\0';
}

bool IsRelation(const std::string& tok) {
  return tok == "<=" || tok == "=<" || tok == "<" || tok == ">=" ||
         tok == "=>" || tok == ">" || tok == "=";
}

milp::Sense SenseOf(const std::string& tok) {
  if (tok == "=") return milp::Sense::kEqual;
  if (tok[0] == '>' || tok == "=>") return milp::Sense::kGreaterEqual;
  return milp::Sense::kLessEqual;
}

// Token stream with one-line lookahead for section keywords.
class Tokens {
 public:
  explicit Tokens(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
      const auto comment = line.find('\\');
      if (comment != std::string::npos) {
        const std::string text = line.substr(comment + 1);
        std::istringstream c(text);
        std::string kw, row, tag;
        if (c >> kw >> row >> tag && kw == "tag") tags_[row] = tag;
        line.resize(comment);
      }
      std::istringstream ls(line);
      // Two-word section headers are folded into one token.
      std::string tok;
      std::vector<std::string> raw;
      while (ls >> tok) raw.push_back(tok);
      for (size_t i = 0; i < raw.size(); ++i) {
        const std::string a = Lower(raw[i]);
        if ((a == "subject" || a == "such") && i + 1 < raw.size() &&
            Lower(raw[i + 1]) == (a == "subject" ? "to" : "that")) {
          toks_.push_back("subject to");
          ++i;
        } else {
          toks_.push_back(raw[i]);
        }
      }
    }
  }
  bool done() const { return pos_ >= toks_.size(); }
  const std::string& peek() const { return toks_[pos_]; }
  std::string next() { return toks_[pos_++]; }
  const std::map<std::string, std::string>& tags() const { return tags_; }

 private:
  std::vector<std::string> toks_;
  size_t pos_ = 0;
  std::map<std::string, std::string> tags_;
};

Section SectionOf(const std::string& tok) {
  const std::string s = Lower(tok);
  if (s == "minimize" || s == "minimise" || s == "min") return Section::kObjective;
  if (s == "maximize" || s == "maximise" || s == "max") {
    throw ParseError("maximization LP files are not supported");
  }
  if (s == "subject to" || s == "st" || s == "s.t.") return Section::kRows;
  if (s == "bounds" || s == "bound") return Section::kBounds;
  if (s == "binaries" || s == "binary" || s == "bin") return Section::kBinaries;
  if (s == "generals" || s == "general" || s == "gen") {
    throw ParseError("general integer variables are not supported");
  }
  if (s == "end") return Section::kEnd;
  return Section::kNone;
}

struct ParsedVar {
  double lower = 0.0;
  double upper = milp::kInf;
  bool binary = false;
};

struct ParsedRow {
  std::string name;
  std::vector<std::pair<std::string, double>> terms;
  milp::Sense sense = milp::Sense::kLessEqual;
  double rhs = 0.0;
};

}  // namespace

void WriteLp(const milp::MilpModel& model, std::ostream& out) {
  out << "\\ amrplan model: " << model.num_variables() << " variables, "
      << model.num_rows() << " rows, " << model.num_binaries()
      << " binaries\n";
  out << "Minimize\n obj:";
  std::vector<milp::Term> obj;
  for (int j = 0; j < model.num_variables(); ++j) {
    if (model.objective()[j] != 0.0) obj.push_back({j, model.objective()[j]});
  }
  WriteTerms(out, obj, model);
  const double constant = model.objective_constant();
  if (constant != 0.0 || obj.empty()) {
    out << (constant < 0 ? " - " : " + ") << Num(std::abs(constant));
  }
  out << '\n';
  if (model.num_rows() > 0) {
    out << "Subject To\n";
    for (int r = 0; r < model.num_rows(); ++r) {
      const auto& row = model.row(r);
      out << "\\ tag " << row.name << ' ' << model.row_tag(r) << '\n';
      out << ' ' << row.name << ':';
      WriteTerms(out, row.terms, model);
      if (row.terms.empty()) out << " 0 " << model.variable(0).name;
      switch (row.sense) {
        case milp::Sense::kLessEqual:
          out << " <= ";
          break;
        case milp::Sense::kGreaterEqual:
          out << " >= ";
          break;
        case milp::Sense::kEqual:
          out << " = ";
          break;
      }
      out << Num(row.rhs) << '\n';
    }
  }
  out << "Bounds\n";
  for (const auto& v : model.variables()) {
    if (std::isinf(v.lower) && std::isinf(v.upper)) {
      out << ' ' << v.name << " free\n";
    } else if (v.lower == v.upper) {
      out << ' ' << v.name << " = " << Num(v.lower) << '\n';
    } else {
      out << ' ' << Num(v.lower) << " <= " << v.name << " <= " << Num(v.upper)
          << '\n';
    }
  }
  bool header = false;
  int on_line = 0;
  for (const auto& v : model.variables()) {
    if (v.kind != milp::VarKind::kBinary) continue;
    if (!header) {
      out << "Binaries\n";
      header = true;
    }
    out << ' ' << v.name;
    if (++on_line == kTermsPerLine) {
      out << '\n';
      on_line = 0;
    }
  }
  if (on_line) out << '\n';
  out << "End\n";
}

void ExportLpFile(const milp::MilpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  WriteLp(model, out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

milp::MilpModel ReadLp(std::istream& in) {
  Tokens toks(in);
  std::vector<std::string> order;
  std::map<std::string, ParsedVar> vars;
  auto declare = [&](const std::string& name) -> ParsedVar& {
    auto [it, inserted] = vars.try_emplace(name);
    if (inserted) order.push_back(name);
    return it->second;
  };
  std::vector<std::string> bound_order;
  std::vector<std::pair<std::string, double>> objective;
  double constant = 0.0;
  std::vector<ParsedRow> rows;

  // Reads "[+|-] [coef] [name]" terms until a relation or section keyword.
  auto read_terms = [&](std::vector<std::pair<std::string, double>>& terms,
                        double* constant_out) {
    while (!toks.done()) {
      const std::string& tok = toks.peek();
      if (IsRelation(tok) || SectionOf(tok) != Section::kNone) return;
      if (tok.back() == ':') return;
      double sign = 1.0;
      std::string t = toks.next();
      if (t == "+" || t == "-") {
        sign = t == "-" ? -1.0 : 1.0;
        if (toks.done()) throw ParseError("dangling sign in LP file");
        t = toks.next();
      }
      double coef = 1.0;
      double value;
      if (IsNumber(t, value)) {
        coef = value;
        if (toks.done() || IsRelation(toks.peek()) ||
            SectionOf(toks.peek()) != Section::kNone ||
            toks.peek() == "+" || toks.peek() == "-") {
          if (constant_out == nullptr) {
            throw ParseError("constant term inside a constraint");
          }
          *constant_out += sign * coef;
          continue;
        }
        t = toks.next();
      }
      declare(t);
      terms.emplace_back(t, sign * coef);
    }
  };

  Section section = Section::kNone;
  while (!toks.done()) {
    const Section s = SectionOf(toks.peek());
    if (s != Section::kNone) {
      toks.next();
      section = s;
      if (s == Section::kEnd) break;
      continue;
    }
    switch (section) {
      case Section::kObjective: {
        if (toks.peek().back() == ':') toks.next();
        read_terms(objective, &constant);
        break;
      }
      case Section::kRows: {
        ParsedRow row;
        if (toks.peek().back() == ':') {
          row.name = toks.next();
          row.name.pop_back();
        } else {
          row.name = "r" + std::to_string(rows.size());
        }
        read_terms(row.terms, nullptr);
        if (toks.done() || !IsRelation(toks.peek())) {
          throw ParseError("row '" + row.name + "' has no relation");
        }
        row.sense = SenseOf(toks.next());
        std::string rhs = toks.next();
        double sign = 1.0;
        if (rhs == "-" || rhs == "+") {
          sign = rhs == "-" ? -1.0 : 1.0;
          rhs = toks.next();
        }
        double value;
        if (!IsNumber(rhs, value)) {
          throw ParseError("row '" + row.name + "' has a non-numeric rhs");
        }
        row.rhs = sign * value;
        rows.push_back(std::move(row));
        break;
      }
      case Section::kBounds: {
        std::string a = toks.next();
        double value;
        if (IsNumber(a, value)) {
          const std::string op = toks.next();
          const std::string name = toks.next();
          ParsedVar& v = declare(name);
          bound_order.push_back(name);
          if (SenseOf(op) == milp::Sense::kLessEqual) {
            v.lower = value;
          } else if (SenseOf(op) == milp::Sense::kGreaterEqual) {
            v.upper = value;
          } else {
            v.lower = v.upper = value;
          }
          if (!toks.done() && IsRelation(toks.peek())) {
            toks.next();
            double hi;
            if (!IsNumber(toks.next(), hi)) throw ParseError("bad bound");
            v.upper = hi;
          }
        } else {
          ParsedVar& v = declare(a);
          bound_order.push_back(a);
          const std::string op = toks.next();
          if (Lower(op) == "free") {
            v.lower = -milp::kInf;
            v.upper = milp::kInf;
            break;
          }
          if (!IsNumber(toks.next(), value)) throw ParseError("bad bound");
          const milp::Sense sense = SenseOf(op);
          if (sense == milp::Sense::kEqual) {
            v.lower = v.upper = value;
          } else if (sense == milp::Sense::kLessEqual) {
            v.upper = value;
          } else {
            v.lower = value;
          }
        }
        break;
      }
      case Section::kBinaries: {
        ParsedVar& v = declare(toks.next());
        v.binary = true;
        break;
      }
      default:
        throw ParseError("unexpected token '" + toks.peek() + "'");
    }
  }

  // Variables listed in the bounds section keep that order.
  std::vector<std::string> names = bound_order;
  std::set<std::string> seen(names.begin(), names.end());
  for (const auto& name : order) {
    if (seen.insert(name).second) names.push_back(name);
  }
  milp::MilpModel model;
  std::map<std::string, int> index;
  for (const auto& name : names) {
    const ParsedVar& v = vars.at(name);
    index[name] = model.AddVariable(
        name, v.binary ? milp::VarKind::kBinary : milp::VarKind::kContinuous,
        v.lower, v.upper, kImportTag);
  }
  for (const auto& [name, coef] : objective) {
    model.AddObjectiveTerm(index.at(name), coef);
  }
  model.AddObjectiveConstant(constant);
  for (const auto& row : rows) {
    std::vector<milp::Term> terms;
    for (const auto& [name, coef] : row.terms) {
      terms.push_back({index.at(name), coef});
    }
    auto tag = toks.tags().find(row.name);
    model.AddRow(row.name, std::move(terms), row.sense, row.rhs,
                 tag == toks.tags().end() ? kImportTag : tag->second);
  }
  return model;
}

milp::MilpModel ImportLpFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return ReadLp(in);
}

}  // namespace amrplan::solver
