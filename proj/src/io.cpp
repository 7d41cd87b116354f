#include "stochsplit/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "stochsplit/error.hpp"

namespace stochsplit::io {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw Error(ErrorCode::ValidationError, where + ": " + msg);
}

std::string at(const std::string& where, std::string_view key) { return where + "/" + std::string(key); }
std::string at(const std::string& where, std::size_t index) { return where + "/" + std::to_string(index); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      fail(where, "unknown key \"" + item.key() + "\"");
  }
}

const json& field(const json& obj, std::string_view key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where, "missing key \"" + std::string(key) + "\"");
  return *it;
}

double number(const json& j, const std::string& where, bool allow_inf = false) {
  if (j.is_number()) return j.get<double>();
  if (allow_inf && j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  fail(where, allow_inf ? "expected a number or \"inf\"/\"-inf\"" : "expected a number");
}

std::size_t count(const json& j, const std::string& where) {
  if (!j.is_number_unsigned()) fail(where, "expected a non-negative integer");
  return j.get<std::size_t>();
}

Vector numbers(const json& j, const std::string& where, bool allow_inf = false) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  Vector out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], at(where, i), allow_inf));
  return out;
}

double optional_number(const json& obj, std::string_view key, const std::string& where, double fallback) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, at(where, key));
}

std::size_t optional_dim(const json& obj, const std::string& where, std::size_t fallback) {
  const auto it = obj.find("dim");
  return it == obj.end() ? fallback : count(*it, at(where, "dim"));
}

std::string type_of(const json& obj, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  const auto& t = field(obj, "type", where);
  if (!t.is_string()) fail(at(where, "type"), "expected a string");
  return t.get<std::string>();
}

CostSpec parse_cost(const json& j, const std::string& where) {
  const auto type = type_of(j, where);
  if (type == "Affine") {
    check_keys(j, where, {"type", "c", "r"});
    return AffineCost{numbers(field(j, "c", where), at(where, "c")), optional_number(j, "r", where, 0.0)};
  }
  if (type == "SeparableQuadratic") {
    check_keys(j, where, {"type", "q", "c", "r"});
    return SeparableQuadraticCost{numbers(field(j, "q", where), at(where, "q")),
                                  numbers(field(j, "c", where), at(where, "c")), optional_number(j, "r", where, 0.0)};
  }
  fail(at(where, "type"), "unknown cost type \"" + type + "\"");
}

OperatorSpec parse_operator(const json& j, const std::string& where) {
  const auto type = type_of(j, where);
  if (type == "DiagonalAffine") {
    check_keys(j, where, {"type", "a", "b"});
    return DiagonalAffine{numbers(field(j, "a", where), at(where, "a")), numbers(field(j, "b", where), at(where, "b"))};
  }
  if (type == "GradSeparableQuadratic") {
    check_keys(j, where, {"type", "q", "c"});
    return GradSeparableQuadratic{numbers(field(j, "q", where), at(where, "q")),
                                  numbers(field(j, "c", where), at(where, "c"))};
  }
  if (type == "CvarAugmented") {
    check_keys(j, where, {"type", "f", "alpha"});
    return CvarAugmented{parse_cost(field(j, "f", where), at(where, "f")),
                         number(field(j, "alpha", where), at(where, "alpha"))};
  }
  fail(at(where, "type"), "unknown operator type \"" + type + "\"");
}

BaseConstraint parse_base_constraint(const json& j, const std::string& where, std::size_t d) {
  const auto type = type_of(j, where);
  if (type == "WholeSpace") {
    check_keys(j, where, {"type", "dim"});
    return WholeSpace{optional_dim(j, where, d)};
  }
  if (type == "Box") {
    check_keys(j, where, {"type", "lo", "hi"});
    return Box{numbers(field(j, "lo", where), at(where, "lo"), true), numbers(field(j, "hi", where), at(where, "hi"), true)};
  }
  if (type == "Ball") {
    check_keys(j, where, {"type", "center", "radius"});
    return Ball{numbers(field(j, "center", where), at(where, "center")),
                number(field(j, "radius", where), at(where, "radius"))};
  }
  if (type == "Halfspace" || type == "Hyperplane") {
    check_keys(j, where, {"type", "normal", "offset"});
    auto normal = numbers(field(j, "normal", where), at(where, "normal"));
    const double offset = number(field(j, "offset", where), at(where, "offset"));
    if (type == "Halfspace") return Halfspace{std::move(normal), offset};
    return Hyperplane{std::move(normal), offset};
  }
  fail(at(where, "type"), "unknown constraint type \"" + type + "\"");
}

ConstraintSpec parse_constraint(const json& j, const std::string& where, std::size_t d) {
  if (type_of(j, where) == "Lifted") {
    check_keys(j, where, {"type", "inner"});
    return LiftedConstraint{parse_base_constraint(field(j, "inner", where), at(where, "inner"), d == 0 ? 0 : d - 1)};
  }
  return std::visit([](auto&& c) -> ConstraintSpec { return c; }, parse_base_constraint(j, where, d));
}

SubspaceSpec parse_subspace(const json& j, const std::string& where, std::size_t d) {
  const auto type = type_of(j, where);
  if (type == "Full") {
    check_keys(j, where, {"type", "dim"});
    return FullSubspace{optional_dim(j, where, d)};
  }
  if (type == "Zero") {
    check_keys(j, where, {"type", "dim"});
    return ZeroSubspace{optional_dim(j, where, d)};
  }
  if (type == "Coordinates") {
    check_keys(j, where, {"type", "dim", "indices"});
    const auto& idx = field(j, "indices", where);
    if (!idx.is_array()) fail(at(where, "indices"), "expected an array");
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < idx.size(); ++i) indices.push_back(count(idx[i], at(at(where, "indices"), i)));
    return CoordinateSubspace{optional_dim(j, where, d), std::move(indices)};
  }
  fail(at(where, "type"), "unknown subspace type \"" + type + "\"");
}

// A list with one record per scenario, or a single record shared by all.
template <class Parse>
auto per_scenario(const json& j, const std::string& where, std::size_t n, Parse parse) {
  using T = decltype(parse(j, where));
  std::vector<T> out;
  if (j.is_object()) {
    const T one = parse(j, where);
    out.assign(n, one);
    return out;
  }
  if (!j.is_array()) fail(where, "expected an array with one record per scenario, or one shared record");
  if (j.size() != n) fail(where, "expected " + std::to_string(n) + " records, got " + std::to_string(j.size()));
  for (std::size_t i = 0; i < n; ++i) out.push_back(parse(j[i], at(where, i)));
  return out;
}

ScenarioTree parse_tree(const json& doc) {
  const std::string where;
  const auto& stages = field(doc, "stages", where);
  if (!stages.is_array()) fail("/stages", "expected an array of stage dimensions");
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < stages.size(); ++k) dims.push_back(count(stages[k], at("/stages", k)));

  const auto& scenarios = field(doc, "scenarios", where);
  if (!scenarios.is_array()) fail("/scenarios", "expected an array");
  std::vector<RawScenario> raw;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const auto here = at("/scenarios", s);
    const auto& rec = scenarios[s];
    check_keys(rec, here, {"labels", "probability"});
    const auto& labels = field(rec, "labels", here);
    if (!labels.is_array()) fail(at(here, "labels"), "expected an array");
    RawScenario r;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const auto& l = labels[k];
      if (l.is_string()) {
        r.labels.push_back(l.get<std::string>());
      } else if (l.is_number()) {
        r.labels.push_back(l.dump());
      } else {
        fail(at(at(here, "labels"), k), "labels must be strings or numbers");
      }
    }
    r.probability = number(field(rec, "probability", here), at(here, "probability"));
    raw.push_back(std::move(r));
  }
  return ScenarioTree::build(raw, dims);
}

json rows(const Policy& p) {
  json out = json::array();
  for (std::size_t s = 0; s < p.num_scenarios(); ++s) {
    const auto row = p[s];
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

std::vector<std::vector<double>> parse_rows(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of rows");
  std::vector<std::vector<double>> out;
  for (std::size_t s = 0; s < j.size(); ++s) out.push_back(numbers(j[s], at(where, s)));
  return out;
}

std::string as_text(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

ProblemDocument parse_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  check_keys(doc, "", {"stages", "scenarios", "operators", "constraints", "subspaces", "cvar"});

  ProblemDocument out{parse_tree(doc), std::nullopt, {}, std::nullopt, std::nullopt, std::nullopt};
  const std::size_t n = out.tree.num_scenarios();
  const std::size_t d = out.tree.dim();

  const bool has_ops = doc.contains("operators");
  const bool has_cvar = doc.contains("cvar");
  if (has_ops == has_cvar) fail("", "exactly one of \"operators\" and \"cvar\" is required");

  if (has_ops) {
    out.operators = per_scenario(doc["operators"], "/operators", n, parse_operator);
  } else {
    const auto& cv = doc["cvar"];
    check_keys(cv, "/cvar", {"alpha", "costs"});
    if (cv.contains("alpha")) out.cvar_alpha = number(cv["alpha"], "/cvar/alpha");
    out.cvar_costs = per_scenario(field(cv, "costs", "/cvar"), "/cvar/costs", n, parse_cost);
    if (doc.contains("subspaces")) fail("/subspaces", "not allowed together with \"cvar\"");
  }

  out.constraints = per_scenario(field(doc, "constraints", ""), "/constraints", n,
                                 [d](const json& j, const std::string& w) { return parse_constraint(j, w, d); });
  if (doc.contains("subspaces")) {
    out.subspaces = per_scenario(doc["subspaces"], "/subspaces", n,
                                 [d](const json& j, const std::string& w) { return parse_subspace(j, w, d); });
  }
  return out;
}

ProblemDocument load_problem(const std::string& path) { return parse_problem(read_file(path)); }

Problem to_problem(const ProblemDocument& doc) {
  if (doc.is_cvar()) fail("", "file describes a CVaR problem (\"cvar\" section)");
  if (doc.subspaces) return Problem(doc.tree, *doc.operators, doc.constraints, *doc.subspaces);
  return Problem(doc.tree, *doc.operators, doc.constraints);
}

CvarProblem to_cvar_problem(const ProblemDocument& doc, std::optional<double> alpha_override) {
  if (!doc.is_cvar()) fail("", "file has no \"cvar\" section");
  const auto alpha = alpha_override ? alpha_override : doc.cvar_alpha;
  if (!alpha) fail("/cvar", "no alpha in the file and none given");
  return CvarProblem(doc.tree, *alpha, *doc.cvar_costs, doc.constraints);
}

std::string solution_json(const Solution& sol, const std::string& method) {
  json j;
  j["method"] = method;
  j["status"] = std::string(to_string(sol.status));
  j["residual"] = sol.residual;
  j["iterations"] = sol.iterations;
  j["x"] = rows(sol.x_bar);
  j["x_star"] = rows(sol.x_star_bar);
  j["v_star"] = rows(sol.v_star_bar);
  return as_text(j);
}

std::string cvar_solution_json(const CvarSolution& sol, double alpha, const std::string& method) {
  json j;
  j["method"] = method;
  j["status"] = std::string(to_string(sol.inner.status));
  j["residual"] = sol.inner.residual;
  j["iterations"] = sol.inner.iterations;
  j["alpha"] = alpha;
  j["objective"] = sol.objective;
  j["y"] = sol.y_bar;
  j["x"] = rows(sol.x_bar);
  j["x_star"] = rows(sol.inner.x_star_bar);
  j["v_star"] = rows(sol.inner.v_star_bar);
  return as_text(j);
}

SolutionRecord parse_solution(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  check_keys(j, "", {"method", "status", "residual", "iterations", "alpha", "objective", "y", "x", "x_star", "v_star"});
  SolutionRecord rec;
  const auto& method = field(j, "method", "");
  const auto& status = field(j, "status", "");
  if (!method.is_string()) fail("/method", "expected a string");
  if (!status.is_string()) fail("/status", "expected a string");
  rec.method = method.get<std::string>();
  rec.status = status.get<std::string>();
  if (rec.status != "Converged" && rec.status != "MaxIter") fail("/status", "unknown status \"" + rec.status + "\"");
  rec.residual = number(field(j, "residual", ""), "/residual");
  rec.iterations = count(field(j, "iterations", ""), "/iterations");
  rec.x = parse_rows(field(j, "x", ""), "/x");
  rec.x_star = parse_rows(field(j, "x_star", ""), "/x_star");
  rec.v_star = parse_rows(field(j, "v_star", ""), "/v_star");
  if (j.contains("alpha")) rec.alpha = number(j["alpha"], "/alpha");
  if (j.contains("objective")) rec.objective = number(j["objective"], "/objective");
  if (j.contains("y")) rec.y = number(j["y"], "/y");
  return rec;
}

void validate_solution(const SolutionRecord& rec, const ScenarioTree& tree) {
  // CVaR multipliers live on the augmented space: one extra leading entry.
  const std::size_t aug = rec.y ? 1 : 0;
  const auto check = [&](const std::vector<std::vector<double>>& m, const char* name, std::size_t width) {
    const std::string where = std::string("/") + name;
    if (m.size() != tree.num_scenarios())
      fail(where, "expected " + std::to_string(tree.num_scenarios()) + " rows, got " + std::to_string(m.size()));
    for (std::size_t s = 0; s < m.size(); ++s) {
      if (m[s].size() != width)
        fail(at(where, s), "expected " + std::to_string(width) + " entries, got " + std::to_string(m[s].size()));
    }
  };
  check(rec.x, "x", tree.dim());
  check(rec.x_star, "x_star", tree.dim() + aug);
  check(rec.v_star, "v_star", tree.dim() + aug);
}

void write_trace(std::ostream& out, const std::vector<IterationRecord>& trace, bool include_timing) {
  out << kTraceHeader << '\n';
  char buf[512];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%zu,%.17g\n", r.n, r.residual, r.kappa, r.tau, r.theta,
                  r.active.size(), include_timing ? r.wall_time_ms : 0.0);
    out << buf;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + path);
  out << contents;
  if (!out) throw Error(ErrorCode::ValidationError, "failed writing " + path);
}

}  // namespace stochsplit::io
