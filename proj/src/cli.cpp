#include "stochsplit/cli.hpp"

#include <exception>
#include <ostream>
#include <sstream>

#include "stochsplit/cvar.hpp"
#include "stochsplit/error.hpp"
#include "stochsplit/io.hpp"

namespace stochsplit::cli {

namespace {

ActivationSchedule make_schedule(const SolveOptions& opts, std::size_t num_scenarios) {
  if (opts.schedule == "full") return FullSchedule{};
  if (opts.schedule == "round-robin") return RoundRobinSchedule{opts.block_size};
  if (opts.schedule == "random")
    return SeededRandomSchedule{opts.block_size, opts.cover_window.value_or(num_scenarios), opts.seed};
  throw Error(ErrorCode::ParameterOutOfRange, "unknown schedule \"" + opts.schedule + "\"");
}

Solution run(const Problem& problem, const SolveOptions& opts) {
  if (opts.method == "block") return solve(problem, make_config(opts, problem.tree().num_scenarios()));
  if (opts.method == "reduced") return solve_reduced(problem, make_config(opts, problem.tree().num_scenarios()));
  if (opts.method == "ph") {
    ProgressiveHedgingOptions ph;
    ph.gamma = opts.gamma;
    ph.tol = opts.tol;
    ph.max_iter = opts.max_iter;
    ph.trace_every = opts.trace_every;
    return progressive_hedging_solve(problem, ph);
  }
  throw Error(ErrorCode::ParameterOutOfRange, "unknown method \"" + opts.method + "\"");
}

void write_outputs(const SolveOptions& opts, const std::string& solution_text, const Solution& sol) {
  if (!opts.solution_out.empty()) io::write_file(opts.solution_out, solution_text);
  if (!opts.trace_out.empty()) {
    std::ostringstream trace;
    io::write_trace(trace, sol.trace, opts.timing);
    io::write_file(opts.trace_out, trace.str());
  }
}

void report(std::ostream& out, const Solution& sol) {
  out << "status: " << to_string(sol.status) << "\n"
      << "iterations: " << sol.iterations << "\n"
      << "residual: " << sol.residual << "\n";
}

int exit_code(const Solution& sol) {
  return sol.status == SolveStatus::Converged ? kExitConverged : kExitMaxIter;
}

template <class Body>
int guarded(std::ostream& err, Body body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

void describe_tree(std::ostream& out, const ScenarioTree& tree) {
  out << "scenarios: " << tree.num_scenarios() << "\n"
      << "stages: " << tree.num_stages() << "\n"
      << "dimension: " << tree.dim() << "\n"
      << "stage dims:";
  for (std::size_t d : tree.stage_dims()) out << ' ' << d;
  out << "\nclasses per stage:";
  for (std::size_t k = 0; k < tree.num_stages(); ++k) out << ' ' << tree.equivalence_classes(k).size();
  out << "\n";
}

void describe_range(std::ostream& out, const Problem& problem) {
  // Problem's constructor already rejected violations; list what was checked.
  for (std::size_t s = 0; s < problem.tree().num_scenarios(); ++s) {
    out << "range condition scenario " << s << ": (" << kind_name(problem.constraint(s)) << ", "
        << kind_name(problem.subspace(s)) << ") ok\n";
  }
}

}  // namespace

SolverConfig make_config(const SolveOptions& opts, std::size_t num_scenarios) {
  SolverConfig config;
  config.epsilon = opts.epsilon;
  config.gamma = constant_step(opts.gamma);
  config.mu = constant_step(opts.mu);
  config.lambda = constant_relaxation(opts.lambda);
  config.schedule = make_schedule(opts, num_scenarios);
  config.tol = opts.tol;
  config.max_iter = opts.max_iter;
  config.trace_every = opts.trace_every;
  config.threads = opts.threads;
  return config;
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto doc = io::load_problem(path);
    if (doc.is_cvar()) {
      out << "kind: cvar\n";
      describe_tree(out, doc.tree);
      if (doc.cvar_alpha) {
        const auto aug = augment(io::to_cvar_problem(doc));
        out << "alpha: " << *doc.cvar_alpha << "\n";
        describe_range(out, aug.base);
      } else {
        out << "alpha: not set (pass --alpha to solve-cvar)\n";
      }
    } else {
      const auto problem = io::to_problem(doc);
      out << "kind: equilibrium\n";
      describe_tree(out, problem.tree());
      describe_range(out, problem);
    }
    out << "valid\n";
    return kExitConverged;
  });
}

int cmd_solve(const std::string& path, const SolveOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto problem = io::to_problem(io::load_problem(path));
    const auto sol = run(problem, opts);
    write_outputs(opts, io::solution_json(sol, opts.method), sol);
    report(out, sol);
    return exit_code(sol);
  });
}

int cmd_solve_cvar(const std::string& path, const SolveOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cp = io::to_cvar_problem(io::load_problem(path), opts.alpha);
    const auto aug = augment(cp);
    const auto sol = extract_solution(aug, run(aug.base, opts));
    write_outputs(opts, io::cvar_solution_json(sol, cp.alpha(), opts.method), sol.inner);
    report(out, sol.inner);
    out << "objective: " << sol.objective << "\n"
        << "y: " << sol.y_bar << "\n";
    return exit_code(sol.inner);
  });
}

}  // namespace stochsplit::cli
