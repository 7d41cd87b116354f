#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "stochsplit/cli.hpp"

namespace {

void add_solve_flags(CLI::App* cmd, stochsplit::cli::SolveOptions& o) {
  cmd->add_option("--schedule", o.schedule, "Block activation: full, round-robin or random")
      ->check(CLI::IsMember({"full", "round-robin", "random"}));
  cmd->add_option("--block-size", o.block_size, "Scenarios per block for round-robin and random");
  cmd->add_option("--seed", o.seed, "Seed of the random schedule");
  cmd->add_option("--cover-window", o.cover_window, "Random schedule: forced reactivation window (default |scenarios|)");
  cmd->add_option("--gamma", o.gamma, "Resolvent step size");
  cmd->add_option("--mu", o.mu, "Constraint projection step size");
  cmd->add_option("--lambda", o.lambda, "Relaxation parameter");
  cmd->add_option("--epsilon", o.epsilon, "Admissible range margin for gamma, mu and lambda");
  cmd->add_option("--tol", o.tol, "Stop when the KKT residual is at most this");
  cmd->add_option("--max-iter", o.max_iter, "Iteration cap");
  cmd->add_option("--trace-every", o.trace_every, "Record every k-th iteration in the trace");
  cmd->add_option("--threads", o.threads, "Worker threads for the scenario updates");
  cmd->add_option("--method", o.method, "block, ph or reduced")->check(CLI::IsMember({"block", "ph", "reduced"}));
  cmd->add_option("--trace-out", o.trace_out, "Trace CSV path");
  cmd->add_option("--solution-out", o.solution_out, "Solution JSON path");
  cmd->add_flag("--timing", o.timing, "Write measured wall times into the trace");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario-decomposition solver for multistage stochastic equilibrium and CVaR problems"};
  app.require_subcommand(1);

  std::string path;
  stochsplit::cli::SolveOptions opts;

  auto* validate = app.add_subcommand("validate", "Check a problem file and print a summary");
  validate->add_option("problem", path, "Problem file")->required();

  auto* solve = app.add_subcommand("solve", "Solve an equilibrium problem");
  solve->add_option("problem", path, "Problem file")->required();
  add_solve_flags(solve, opts);

  auto* solve_cvar = app.add_subcommand("solve-cvar", "Minimize the CVaR of the scenario costs");
  solve_cvar->add_option("problem", path, "Problem file")->required();
  add_solve_flags(solve_cvar, opts);
  solve_cvar->add_option("--alpha", opts.alpha, "CVaR level, overrides the file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : stochsplit::cli::kExitError;
  }

  if (validate->parsed()) return stochsplit::cli::cmd_validate(path, std::cout, std::cerr);
  if (solve->parsed()) return stochsplit::cli::cmd_solve(path, opts, std::cout, std::cerr);
  return stochsplit::cli::cmd_solve_cvar(path, opts, std::cout, std::cerr);
}
