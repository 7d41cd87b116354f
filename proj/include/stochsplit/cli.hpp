#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "stochsplit/solver.hpp"

namespace stochsplit::cli {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMaxIter = 2;

struct SolveOptions {
  std::string schedule = "full";  // full | round-robin | random
  std::size_t block_size = 1;
  std::uint64_t seed = 0;
  /// Random schedule only; defaults to the number of scenarios.
  std::optional<std::size_t> cover_window;
  double gamma = 1.0;
  double mu = 1.0;
  double lambda = 1.0;
  double epsilon = 1e-3;
  double tol = 1e-8;
  std::size_t max_iter = 100000;
  std::size_t trace_every = 1;
  std::size_t threads = 1;
  std::string method = "block";  // block | ph | reduced
  std::string trace_out;
  std::string solution_out;
  std::optional<double> alpha;
  /// Write measured wall times into the trace instead of zeros.
  bool timing = false;
};

/// Throws ParameterOutOfRange for unknown schedule names.
SolverConfig make_config(const SolveOptions& opts, std::size_t num_scenarios);

/// Each command reports to `out`, writes "error: <Code>: <detail>" to `err`
/// on failure and returns the process exit code.
int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err);
int cmd_solve(const std::string& path, const SolveOptions& opts, std::ostream& out, std::ostream& err);
int cmd_solve_cvar(const std::string& path, const SolveOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace stochsplit::cli
