#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stochsplit/cvar.hpp"
#include "stochsplit/operators.hpp"
#include "stochsplit/scenario_tree.hpp"
#include "stochsplit/solver.hpp"

namespace stochsplit::io {

/// Contents of a problem file. Exactly one of `operators` and `cvar_costs`
/// is present; `subspaces` defaults to Full and is not allowed with a cvar
/// section.
struct ProblemDocument {
  ScenarioTree tree;
  std::optional<std::vector<OperatorSpec>> operators;
  std::vector<ConstraintSpec> constraints;
  std::optional<std::vector<SubspaceSpec>> subspaces;
  std::optional<double> cvar_alpha;
  std::optional<std::vector<CostSpec>> cvar_costs;

  bool is_cvar() const noexcept { return cvar_costs.has_value(); }
};

/// Throws ParseError for malformed JSON and ValidationError (with a
/// JSON-pointer location) for schema violations; tree errors such as
/// BadProbabilityMass propagate with their own code.
ProblemDocument parse_problem(const std::string& text);
ProblemDocument load_problem(const std::string& path);

/// Throws ValidationError if the document carries a cvar section.
Problem to_problem(const ProblemDocument& doc);
/// alpha_override wins over the file's alpha; one of them must exist.
CvarProblem to_cvar_problem(const ProblemDocument& doc, std::optional<double> alpha_override = std::nullopt);

/// Parsed solution file.
struct SolutionRecord {
  std::string method;
  std::string status;
  double residual = 0.0;
  std::size_t iterations = 0;
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> x_star;
  std::vector<std::vector<double>> v_star;
  std::optional<double> y;
  std::optional<double> objective;
  std::optional<double> alpha;
};

std::string solution_json(const Solution& sol, const std::string& method);
std::string cvar_solution_json(const CvarSolution& sol, double alpha, const std::string& method);
SolutionRecord parse_solution(const std::string& text);
/// Rows and widths of x, x* and v* must match the tree (original
/// coordinates for CVaR solutions). Throws ValidationError.
void validate_solution(const SolutionRecord& rec, const ScenarioTree& tree);

inline constexpr const char* kTraceHeader = "n,residual,kappa,tau,theta,active_block_size,wall_time_ms";

/// One CSV row per record; doubles in %.17g. With include_timing false the
/// wall_time_ms column is written as 0 so reruns are byte-identical.
void write_trace(std::ostream& out, const std::vector<IterationRecord>& trace, bool include_timing);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace stochsplit::io
