#pragma once

// Explicit constraint rows of a compiled model, writers for LP and OPB text,
// and a verifier that replays every row against an imported solution.
//
// Variable order: z_<arc index> for every arc (fixed arcs pinned by rows),
// then f_<k> per transit arc sequence, then d_<k> per adoption entry. OPB
// names the same variables x1..xN in that order and scales the budget row to
// integer cents.

#include <cmath>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tnd/optimizer/model.hpp"
#include "tnd/optimizer/replay.hpp"
#include "tnd/text_io.hpp"

namespace tnd {

enum class Sense { le, ge, eq };

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Row {
  std::string family;
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

inline constexpr std::string_view kFamilies[] = {"adoption or",  "path and upper", "path and lower", "core serving",
                                                 "budget",       "fixed arcs",     "flow balance",   "pair-mode"};

struct VariableSpace {
  int arcs = 0, paths = 0, entries = 0;

  explicit VariableSpace(const CompiledModel& m)
      : arcs(static_cast<int>(m.graph->arcs().size())),
        paths(static_cast<int>(m.paths.size())),
        entries(static_cast<int>(m.entries.size())) {}

  int z(int arc) const { return arc; }
  int f(int path) const { return arcs + path; }
  int d(int entry) const { return arcs + paths + entry; }
  int size() const { return arcs + paths + entries; }

  std::string name(int v) const {
    if (v < arcs) return fmt::format("z_{}", v);
    if (v < arcs + paths) return fmt::format("f_{}", v - arcs);
    return fmt::format("d_{}", v - arcs - paths);
  }
  std::optional<int> parse(std::string_view name) const {
    if (name.size() < 3 || name[1] != '_') return std::nullopt;
    long long k = 0;
    try {
      k = parse_int(name.substr(2));
    } catch (const ParseError&) {
      return std::nullopt;
    }
    if (k < 0) return std::nullopt;
    const int i = static_cast<int>(k);
    switch (name[0]) {
      case 'z': return i < arcs ? std::optional<int>(z(i)) : std::nullopt;
      case 'f': return i < paths ? std::optional<int>(f(i)) : std::nullopt;
      case 'd': return i < entries ? std::optional<int>(d(i)) : std::nullopt;
      default: return std::nullopt;
    }
  }
};

/// Objective coefficients (riders per entry, summed over scenarios) and the constant core part.
inline std::vector<Term> objective_terms(const CompiledModel& m) {
  VariableSpace vs(m);
  std::vector<Term> out;
  for (std::size_t e = 0; e < m.entries.size(); ++e)
    out.push_back({vs.d(static_cast<int>(e)), static_cast<double>(m.entries[e].riders)});
  return out;
}

inline std::vector<Row> model_rows(const CompiledModel& m) {
  const TransitGraph& g = *m.graph;
  VariableSpace vs(m);
  std::vector<Row> rows;
  for (std::size_t e = 0; e < m.entries.size(); ++e) {
    const auto& entry = m.entries[e];
    const int d = vs.d(static_cast<int>(e));
    if (entry.walk_served) {
      rows.push_back({"adoption or", fmt::format("or_{}", e), {{d, 1.0}}, Sense::ge, 1.0});
      continue;
    }
    Row upper{"adoption or", fmt::format("or_{}", e), {{d, 1.0}}, Sense::le, 0.0};
    for (int p : entry.paths) upper.terms.push_back({vs.f(p), -1.0});
    rows.push_back(std::move(upper));
    for (int p : entry.paths)
      rows.push_back({"adoption or", fmt::format("or_{}_{}", e, p), {{d, 1.0}, {vs.f(p), -1.0}}, Sense::ge, 0.0});
  }
  for (std::size_t p = 0; p < m.paths.size(); ++p) {
    const auto& arcs = m.paths[p].arcs;
    std::set<int> distinct(arcs.begin(), arcs.end());
    const int f = vs.f(static_cast<int>(p));
    for (int a : distinct)
      rows.push_back({"path and upper", fmt::format("and_{}_{}", p, a), {{f, 1.0}, {vs.z(a), -1.0}}, Sense::le, 0.0});
    Row lower{"path and lower", fmt::format("and_{}", p), {{f, 1.0}}, Sense::ge,
              1.0 - static_cast<double>(distinct.size())};
    for (int a : distinct) lower.terms.push_back({vs.z(a), -1.0});
    rows.push_back(std::move(lower));
  }
  for (std::size_t c = 0; c < m.core.size(); ++c) {
    const auto& row = m.core[c];
    if (row.walk_served) continue;
    Row r{"core serving", fmt::format("core_{}", c), {}, Sense::ge, 1.0};
    for (int p : row.paths) r.terms.push_back({vs.f(p), 1.0});
    rows.push_back(std::move(r));
  }
  Row budget{"budget", "budget", {}, Sense::le, m.budget};
  for (std::size_t a = 0; a < g.arcs().size(); ++a)
    if (g.arcs()[a].cost != 0.0) budget.terms.push_back({vs.z(static_cast<int>(a)), g.arcs()[a].cost});
  rows.push_back(std::move(budget));
  for (std::size_t a = 0; a < g.arcs().size(); ++a)
    if (g.arcs()[a].is_fixed)
      rows.push_back({"fixed arcs", fmt::format("fixed_{}", a), {{vs.z(static_cast<int>(a)), 1.0}}, Sense::eq, 1.0});
  for (std::size_t k = 0; k < m.balance.size(); ++k) {
    const auto& key = m.balance[k];
    Row r{"flow balance", fmt::format("flow_{}_{}", key.node, key.mode), {}, Sense::eq, 0.0};
    for (int a : g.out_arcs(key.node, key.mode)) r.terms.push_back({vs.z(a), static_cast<double>(g.arcs()[a].frequency)});
    for (int a : g.in_arcs(key.node, key.mode)) r.terms.push_back({vs.z(a), -static_cast<double>(g.arcs()[a].frequency)});
    rows.push_back(std::move(r));
  }
  for (const auto& [key, group] : g.index().pair_groups) {
    if (group.size() < 2) continue;
    Row r{"pair-mode", fmt::format("pair_{}_{}_{}", std::get<0>(key), std::get<1>(key), std::get<2>(key)), {},
          Sense::le, 1.0};
    for (int a : group) r.terms.push_back({vs.z(a), 1.0});
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace detail {

inline std::string lp_terms(const std::vector<Term>& terms, const VariableSpace& vs) {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double c = terms[i].coef;
    if (i > 0) out += c < 0 ? " - " : " + ";
    else if (c < 0) out += "-";
    if (std::abs(c) != 1.0) out += format_double(std::abs(c)) + " ";
    out += vs.name(terms[i].var);
  }
  return out.empty() ? "0 " + vs.name(0) : out;
}

inline std::string_view lp_sense(Sense s) { return s == Sense::le ? "<=" : s == Sense::ge ? ">=" : "="; }

}  // namespace detail

/// CPLEX-style LP text. The objective omits the constant core part, which is recorded in a comment.
inline std::string write_lp(const CompiledModel& m, const Provenance& provenance = {}) {
  VariableSpace vs(m);
  std::string out;
  for (const auto& [k, v] : provenance.entries) out += fmt::format("\\ {}={}\n", k, v);
  out += fmt::format("\\ scenarios={}\n\\ objective_constant={}\n\\ objective_divisor={}\n", m.scenario_count,
                     m.core_constant, m.scenario_count);
  for (std::size_t a = 0; a < m.graph->arcs().size(); ++a)
    out += fmt::format("\\ z_{} arc {}\n", a, m.graph->arcs()[a].id);
  out += "Maximize\n obj: ";
  auto obj = objective_terms(m);
  out += obj.empty() ? "0 " + vs.name(0) : detail::lp_terms(obj, vs);
  out += "\nSubject To\n";
  for (const Row& r : model_rows(m))
    out += fmt::format(" {}: {} {} {}\n", r.name, detail::lp_terms(r.terms, vs), detail::lp_sense(r.sense),
                       format_double(r.rhs));
  out += "Binaries\n";
  for (int v = 0; v < vs.size(); ++v) out += fmt::format(" {}\n", vs.name(v));
  out += "End\n";
  return out;
}

inline long long to_cents(double amount) { return std::llround(amount * 100.0); }

/// Pseudo-Boolean OPB text: minimize the negated objective, >= / = rows only.
inline std::string write_opb(const CompiledModel& m, const Provenance& provenance = {}) {
  VariableSpace vs(m);
  auto rows = model_rows(m);
  std::string out = fmt::format("* #variable= {} #constraint= {}\n", vs.size(), rows.size());
  for (const auto& [k, v] : provenance.entries) out += fmt::format("* {}={}\n", k, v);
  out += fmt::format("* objective_constant={} objective_divisor={} budget_units=cents\n", m.core_constant,
                     m.scenario_count);
  auto x = [](int v) { return fmt::format("x{}", v + 1); };
  out += "min:";
  for (const Term& t : objective_terms(m)) out += fmt::format(" -{} {}", static_cast<long long>(t.coef), x(t.var));
  out += " ;\n";
  for (const Row& r : rows) {
    const bool cents = r.family == "budget";
    const double flip = r.sense == Sense::le ? -1.0 : 1.0;
    auto scaled = [&](double v) { return cents ? to_cents(v) : std::llround(v); };
    long long rhs = scaled(r.rhs);
    if (cents) rhs = static_cast<long long>(std::floor(r.rhs * 100.0 + 1e-6));
    std::string line;
    for (const Term& t : r.terms) {
      const long long c = static_cast<long long>(flip) * scaled(t.coef);
      line += fmt::format("{}{} {} ", c >= 0 ? "+" : "", c, x(t.var));
    }
    out += fmt::format("{}{} {} ;\n", line, r.sense == Sense::eq ? "=" : ">=", static_cast<long long>(flip) * rhs);
  }
  return out;
}

/// Reads "name value" lines (LP names) or OPB "v x1 -x2 ..." lines. Missing variables default to 0.
inline std::vector<int> read_solution(std::istream& in, const CompiledModel& m) {
  VariableSpace vs(m);
  std::vector<int> values(static_cast<std::size_t>(vs.size()), 0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == 'c' || t.front() == 's' || t.front() == 'o' || t.front() == '*')
      continue;
    std::istringstream fields{std::string(t)};
    if (t.front() == 'v' && (t.size() == 1 || t[1] == ' ')) {
      std::string lit;
      fields >> lit;
      while (fields >> lit) {
        const bool neg = lit.front() == '-';
        if (neg) lit.erase(0, 1);
        if (lit.size() < 2 || lit.front() != 'x') throw ParseError(fmt::format("bad literal '{}'", lit), line_no);
        const long long k = parse_int(std::string_view(lit).substr(1), line_no);
        if (k < 1 || k > vs.size()) throw ParseError(fmt::format("literal '{}' out of range", lit), line_no);
        values[static_cast<std::size_t>(k - 1)] = neg ? 0 : 1;
      }
      continue;
    }
    std::string name, value;
    if (!(fields >> name >> value)) throw ParseError("expected 'name value'", line_no);
    auto v = vs.parse(name);
    if (!v) throw ParseError(fmt::format("unknown variable '{}'", name), line_no);
    const double x = parse_double(value, line_no);
    if (std::abs(x - std::round(x)) > 1e-6 || x < -1e-6 || x > 1 + 1e-6)
      throw ParseError(fmt::format("variable '{}' is not binary", name), line_no);
    values[static_cast<std::size_t>(*v)] = static_cast<int>(std::lround(x));
  }
  return values;
}

inline std::string write_solution(const std::vector<int>& values, const CompiledModel& m) {
  VariableSpace vs(m);
  std::string out;
  for (int v = 0; v < vs.size(); ++v) out += fmt::format("{} {}\n", vs.name(v), values[static_cast<std::size_t>(v)]);
  return out;
}

/// Full variable assignment induced by a design: f = AND of its arcs, d = OR of usable adopted paths.
inline std::vector<int> assignment_of(const NetworkDesign& design, const CompiledModel& m) {
  require_same_shape(design, *m.graph);
  VariableSpace vs(m);
  std::vector<int> values(static_cast<std::size_t>(vs.size()), 0);
  for (int a = 0; a < vs.arcs; ++a) values[static_cast<std::size_t>(a)] = design.open[static_cast<std::size_t>(a)];
  for (int p = 0; p < vs.paths; ++p) {
    bool all = true;
    for (int a : m.paths[static_cast<std::size_t>(p)].arcs) all = all && design.open[static_cast<std::size_t>(a)];
    values[static_cast<std::size_t>(vs.f(p))] = all ? 1 : 0;
  }
  for (int e = 0; e < vs.entries; ++e) {
    const auto& entry = m.entries[static_cast<std::size_t>(e)];
    bool any = entry.walk_served;
    for (int p : entry.paths) any = any || values[static_cast<std::size_t>(vs.f(p))];
    values[static_cast<std::size_t>(vs.d(e))] = any ? 1 : 0;
  }
  return values;
}

struct VerificationReport {
  std::vector<std::string> violated_families;  // in kFamilies order
  std::vector<std::string> violated_rows;      // first few offending row names
  std::size_t violated_count = 0;
  NetworkDesign design;
  FeasibilityReport feasibility;
  long long objective_count = 0;  // constant + sum of d coefficients
  double objective = 0.0;

  bool accepted() const { return violated_count == 0 && feasibility.feasible(); }
};

inline VerificationReport verify_solution(const std::vector<int>& values, const CompiledModel& m) {
  VariableSpace vs(m);
  if (values.size() != static_cast<std::size_t>(vs.size()))
    throw StructuralError(fmt::format("solution has {} variables, model has {}", values.size(), vs.size()));
  VerificationReport report;
  std::set<std::string> families;
  for (const Row& r : model_rows(m)) {
    double lhs = 0.0;
    for (const Term& t : r.terms) lhs += t.coef * values[static_cast<std::size_t>(t.var)];
    const double tol = 1e-9 * std::max(1.0, std::abs(r.rhs));
    const bool ok = r.sense == Sense::le ? lhs <= r.rhs + tol
                    : r.sense == Sense::ge ? lhs >= r.rhs - tol
                                           : std::abs(lhs - r.rhs) <= tol;
    if (ok) continue;
    ++report.violated_count;
    families.insert(r.family);
    if (report.violated_rows.size() < 20) report.violated_rows.push_back(r.name);
  }
  for (auto f : kFamilies)
    if (families.count(std::string(f))) report.violated_families.emplace_back(f);
  report.design.open.resize(static_cast<std::size_t>(vs.arcs));
  for (int a = 0; a < vs.arcs; ++a)
    report.design.open[static_cast<std::size_t>(a)] = static_cast<std::uint8_t>(values[static_cast<std::size_t>(a)]);
  report.feasibility = check_design_feasibility(report.design, *m.graph, m.budget);
  report.objective_count = m.core_constant;
  for (const Term& t : objective_terms(m))
    report.objective_count += static_cast<long long>(t.coef) * values[static_cast<std::size_t>(t.var)];
  report.objective = m.to_objective(report.objective_count);
  return report;
}

}  // namespace tnd
