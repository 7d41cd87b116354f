#include "stochsplit/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "stochsplit/error.hpp"

namespace stochsplit {

namespace {

void require_in_range(double value, double lo, double hi, const char* what, std::size_t n) {
  if (!(value >= lo && value <= hi)) {
    throw Error(ErrorCode::ParameterOutOfRange, std::string(what) + " = " + std::to_string(value) +
                                                    " at iteration " + std::to_string(n) + " is outside [" +
                                                    std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

void validate_config(const SolverConfig& config) {
  if (!(config.epsilon > 0.0 && config.epsilon < 1.0))
    throw Error(ErrorCode::ParameterOutOfRange, "epsilon must lie in (0, 1)");
  if (!(config.tol >= 0.0)) throw Error(ErrorCode::ToleranceError, "tol must be >= 0");
  if (config.max_iter == 0) throw Error(ErrorCode::ParameterOutOfRange, "max_iter must be >= 1");
  if (config.trace_every == 0) throw Error(ErrorCode::ParameterOutOfRange, "trace_every must be >= 1");
  if (config.threads == 0) throw Error(ErrorCode::ParameterOutOfRange, "threads must be >= 1");
  if (!config.gamma || !config.mu || !config.lambda)
    throw Error(ErrorCode::ParameterOutOfRange, "step rules must be set");
}

// Per-thread buffer for the shifted points fed to resolvents and projectors.
struct Scratch {
  Vector l;
  Vector z;
};

void update_slot(SolverState& st, const Problem& problem, std::size_t s, double gamma, double mu, Scratch& scratch) {
  const std::size_t d = problem.tree().dim();
  scratch.l.resize(d);
  scratch.z.resize(d);
  const auto x = st.x[s];
  const auto xs = st.x_star[s];
  const auto vs = st.v_star[s];
  auto a = st.a[s];
  auto as = st.a_star[s];
  auto b = st.b[s];
  auto bs = st.b_star[s];

  for (std::size_t i = 0; i < d; ++i) {
    scratch.l[i] = xs[i] + vs[i];
    scratch.z[i] = x[i] - gamma * scratch.l[i];
  }
  resolvent_into(problem.op(s), gamma, scratch.z, a);
  for (std::size_t i = 0; i < d; ++i) as[i] = (x[i] - a[i]) / gamma - scratch.l[i];

  for (std::size_t i = 0; i < d; ++i) scratch.z[i] = x[i] + mu * xs[i];
  project_constraint_into(problem.constraint(s), scratch.z, b);
  for (std::size_t i = 0; i < d; ++i) bs[i] = xs[i] + (x[i] - b[i]) / mu;

  for (std::size_t i = 0; i < d; ++i) scratch.z[i] = b[i] - a[i];
  project_subspace_into(problem.subspace(s), scratch.z, st.u[s]);
}

std::vector<SubspaceSpec> full_subspaces(const std::vector<OperatorSpec>& ops) {
  std::vector<SubspaceSpec> out;
  out.reserve(ops.size());
  for (const auto& op : ops) out.emplace_back(FullSubspace{dim(op)});
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Problem::Problem(ScenarioTree tree, std::vector<OperatorSpec> operators, std::vector<ConstraintSpec> constraints,
                 std::vector<SubspaceSpec> subspaces)
    : tree_(std::move(tree)),
      operators_(std::move(operators)),
      constraints_(std::move(constraints)),
      subspaces_(std::move(subspaces)) {
  const std::size_t n = tree_.num_scenarios();
  if (operators_.size() != n || constraints_.size() != n || subspaces_.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "expected one operator, constraint and subspace per scenario (" +
                                              std::to_string(n) + ")");
  }
  const std::size_t d = tree_.dim();
  for (std::size_t s = 0; s < n; ++s) {
    const std::string where = "scenario " + std::to_string(s);
    validate(operators_[s]);
    validate(constraints_[s]);
    validate(subspaces_[s]);
    if (dim(operators_[s]) != d || dim(constraints_[s]) != d || dim(subspaces_[s]) != d) {
      throw Error(ErrorCode::DimensionMismatch, where + ": spec dimension differs from tree dimension " +
                                                    std::to_string(d));
    }
    if (!validate_range_condition(constraints_[s], subspaces_[s])) {
      throw Error(ErrorCode::RangeConditionViolated,
                  "range condition violated for " + where + " (" + std::string(kind_name(constraints_[s])) + ", " +
                      std::string(kind_name(subspaces_[s])) + ")");
    }
  }
}

Problem::Problem(ScenarioTree tree, std::vector<OperatorSpec> operators, std::vector<ConstraintSpec> constraints)
    : Problem(std::move(tree), operators, std::move(constraints), full_subspaces(operators)) {}

StepRule constant_step(double value) {
  return [value](std::size_t, std::size_t) { return value; };
}

StepRule per_scenario_steps(std::vector<double> values) {
  return [values = std::move(values)](std::size_t scenario, std::size_t) { return values.at(scenario); };
}

RelaxationRule constant_relaxation(double value) {
  return [value](std::size_t) { return value; };
}

std::string_view to_string(SolveStatus status) noexcept {
  return status == SolveStatus::Converged ? "Converged" : "MaxIter";
}

// ---------------------------------------------------------------------------

SolverState init_state(const Problem& problem, const std::optional<Policy>& x0,
                       const std::optional<Policy>& x0_star, const std::optional<Policy>& v0_star) {
  const auto& tree = problem.tree();
  SolverState st;
  st.x = Policy(tree);
  st.x_star = Policy(tree);
  st.v_star = Policy(tree);
  st.a = Policy(tree);
  st.a_star = Policy(tree);
  st.b = Policy(tree);
  st.b_star = Policy(tree);
  st.u = Policy(tree);
  st.last_activated.assign(tree.num_scenarios(), 0);

  if (x0) st.x = project_nonanticipative(tree, *x0);
  if (v0_star) st.v_star = project_nonanticipative_complement(tree, *v0_star);
  if (x0_star) {
    check_shape(tree, *x0_star);
    for (std::size_t s = 0; s < tree.num_scenarios(); ++s)
      project_subspace_into(problem.subspace(s), (*x0_star)[s], st.x_star[s]);
  }
  return st;
}

ScenarioPoints scenario_update(const SolverState& state, const Problem& problem, std::size_t scenario, double gamma,
                               double mu) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::NonPositiveGamma, "gamma must be positive");
  if (!(mu > 0.0)) throw Error(ErrorCode::NonPositiveGamma, "mu must be positive");
  SolverState scratch_state = state;
  Scratch scratch;
  update_slot(scratch_state, problem, scenario, gamma, mu, scratch);
  auto row = [&](const Policy& p) {
    const auto r = p[scenario];
    return Vector(r.begin(), r.end());
  };
  return {row(scratch_state.a), row(scratch_state.a_star), row(scratch_state.b), row(scratch_state.b_star),
          row(scratch_state.u)};
}

namespace {

// <x,t*> - <a,a*> + <u,x*> - <b,b*> + <t,v*>, regrouped with x in V,
// v* in V-perp and x*(xi) in U(xi) into
//   sum_xi pi(xi) [<x - a, a* + x* + v*> + <x - b, b* - x*>].
// The direct form cancels O(1) terms down to the size of tau and loses all
// precision near a solution; here every product has two small factors.
double separator_value(const ScenarioTree& tree, const SolverState& st) {
  const std::size_t d = tree.dim();
  double total = 0.0;
  for (std::size_t s = 0; s < tree.num_scenarios(); ++s) {
    const auto x = st.x[s], a = st.a[s], as = st.a_star[s], b = st.b[s], bs = st.b_star[s];
    const auto ms = st.x_star[s], vs = st.v_star[s];
    double local = 0.0;
    for (std::size_t i = 0; i < d; ++i) local += (x[i] - a[i]) * (as[i] + ms[i] + vs[i]) + (x[i] - b[i]) * (bs[i] - ms[i]);
    total += tree.probability(s) * local;
  }
  return total;
}

// Below this the hyperplane normal is rounding error in a, b, a*, b* and
// kappa / tau blows that error up into an arbitrary step.
bool normal_is_noise(const ScenarioTree& tree, const SolverState& st, double tau) {
  constexpr double kNoise = 16.0 * std::numeric_limits<double>::epsilon();
  const double scale = inner(tree, st.a, st.a) + inner(tree, st.b, st.b) + inner(tree, st.a_star, st.a_star) +
                       inner(tree, st.b_star, st.b_star);
  return tau <= kNoise * kNoise * scale;
}

}  // namespace

CoordinationResult coordination_step(SolverState& st, const Problem& problem, double lambda) {
  const auto& tree = problem.tree();

  Policy t_star = st.a_star + st.b_star;
  project_nonanticipative_into(tree, t_star, t_star);
  // t = -proj_{V-perp} a = proj_V a - a
  Policy t = project_nonanticipative(tree, st.a);
  t -= st.a;

  CoordinationResult r;
  r.tau = inner(tree, t_star, t_star) + inner(tree, st.u, st.u) + inner(tree, t, t);
  if (r.tau > 0.0) {
    r.kappa = separator_value(tree, st);
    if (!normal_is_noise(tree, st, r.tau)) r.theta = lambda * std::max(r.kappa, 0.0) / r.tau;
  }
  if (r.theta > 0.0) {
    st.x.add_scaled(-r.theta, t_star);
    st.x_star.add_scaled(-r.theta, st.u);
    st.v_star.add_scaled(-r.theta, t);
  }
  ++st.n;
  return r;
}

IterationRecord iterate(SolverState& st, const Problem& problem, const SolverConfig& config,
                        BlockSelector& selector) {
  const std::size_t n = st.n;
  const double eps = config.epsilon;
  const double lambda = config.lambda(n);
  require_in_range(lambda, eps, 2.0 - eps, "lambda", n);

  IterationRecord rec;
  rec.n = n;
  rec.active = selector.next(n, st.last_activated);

  std::vector<double> gammas(rec.active.size());
  std::vector<double> mus(rec.active.size());
  for (std::size_t j = 0; j < rec.active.size(); ++j) {
    const std::size_t s = rec.active[j];
    gammas[j] = config.gamma(s, n);
    mus[j] = config.mu(s, n);
    require_in_range(gammas[j], eps, 1.0 / eps, "gamma", n);
    require_in_range(mus[j], eps, 1.0 / eps, "mu", n);
  }

  const std::size_t workers = std::min(config.threads, rec.active.size());
  if (workers <= 1) {
    Scratch scratch;
    for (std::size_t j = 0; j < rec.active.size(); ++j) update_slot(st, problem, rec.active[j], gammas[j], mus[j], scratch);
  } else {
    // Each worker writes only the rows of its own scenarios.
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            Scratch scratch;
            for (std::size_t j = w; j < rec.active.size(); j += workers)
              update_slot(st, problem, rec.active[j], gammas[j], mus[j], scratch);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (std::size_t s : rec.active) st.last_activated[s] = n;

  const auto c = coordination_step(st, problem, lambda);
  rec.kappa = c.kappa;
  rec.tau = c.tau;
  rec.theta = c.theta;
  rec.residual = kkt_residual(problem, st.x, st.x_star, st.v_star);
  return rec;
}

double kkt_residual(const Problem& problem, const Policy& x, const Policy& x_star, const Policy& v_star) {
  const auto& tree = problem.tree();
  check_shape(tree, x);
  check_shape(tree, x_star);
  check_shape(tree, v_star);
  const std::size_t d = tree.dim();
  Vector z(d);
  Vector p(d);
  double total = 0.0;
  for (std::size_t s = 0; s < tree.num_scenarios(); ++s) {
    const auto xs = x[s];
    const auto ms = x_star[s];
    const auto vs = v_star[s];
    double local = 0.0;
    for (std::size_t i = 0; i < d; ++i) z[i] = xs[i] - ms[i] - vs[i];
    resolvent_into(problem.op(s), 1.0, z, p);
    for (std::size_t i = 0; i < d; ++i) local += (xs[i] - p[i]) * (xs[i] - p[i]);
    for (std::size_t i = 0; i < d; ++i) z[i] = xs[i] + ms[i];
    project_constraint_into(problem.constraint(s), z, p);
    for (std::size_t i = 0; i < d; ++i) local += (xs[i] - p[i]) * (xs[i] - p[i]);
    total += tree.probability(s) * local;
  }
  const Policy x_perp = project_nonanticipative_complement(tree, x);
  const Policy v_par = project_nonanticipative(tree, v_star);
  total += inner(tree, x_perp, x_perp) + inner(tree, v_par, v_par);
  return std::sqrt(total);
}

// ---------------------------------------------------------------------------

Solution solve(const Problem& problem, const SolverConfig& config, const IterationObserver& observer) {
  return solve(problem, config, init_state(problem), observer);
}

Solution solve(const Problem& problem, const SolverConfig& config, SolverState state,
               const IterationObserver& observer) {
  validate_config(config);
  const auto& tree = problem.tree();
  check_shape(tree, state.x);
  check_shape(tree, state.x_star);
  check_shape(tree, state.v_star);

  BlockSelector selector(config.schedule, tree.num_scenarios());
  const auto start = std::chrono::steady_clock::now();

  Solution sol;
  for (std::size_t it = 0; it < config.max_iter; ++it) {
    auto rec = iterate(state, problem, config, selector);
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (observer) observer(state, rec);

    const bool done = rec.residual <= config.tol;
    const bool last = done || it + 1 == config.max_iter;
    sol.residual = rec.residual;
    if (rec.n % config.trace_every == 0 || last) sol.trace.push_back(std::move(rec));
    if (done) {
      sol.status = SolveStatus::Converged;
      break;
    }
  }
  sol.iterations = state.n;
  sol.x_bar = std::move(state.x);
  sol.x_star_bar = std::move(state.x_star);
  sol.v_star_bar = std::move(state.v_star);
  return sol;
}

Solution solve_reduced(const Problem& problem, const SolverConfig& config, const IterationObserver& observer) {
  std::vector<SubspaceSpec> zero;
  zero.reserve(problem.tree().num_scenarios());
  for (std::size_t s = 0; s < problem.tree().num_scenarios(); ++s) {
    if (!std::holds_alternative<WholeSpace>(problem.constraint(s))) {
      throw Error(ErrorCode::NonTrivialConstraint, "scenario " + std::to_string(s) + " has a " +
                                                       std::string(kind_name(problem.constraint(s))) +
                                                       " constraint");
    }
    zero.emplace_back(ZeroSubspace{problem.tree().dim()});
  }
  const Problem reduced(problem.tree(), problem.operators(), problem.constraints(), std::move(zero));
  SolverConfig cfg = config;
  cfg.mu = constant_step(1.0);

  auto check = [&](const SolverState& st, const IterationRecord& rec) {
    const auto zero_policy = [](const Policy& p) {
      return std::all_of(p.data().begin(), p.data().end(), [](double v) { return v == 0.0; });
    };
    if (!zero_policy(st.x_star) || !zero_policy(st.u))
      throw std::logic_error("reduced iteration produced a nonzero x* or u at iteration " + std::to_string(rec.n));
    if (observer) observer(st, rec);
  };
  return solve(reduced, cfg, init_state(reduced), check);
}

// ---------------------------------------------------------------------------

Solution progressive_hedging_solve(const Problem& problem, const ProgressiveHedgingOptions& options) {
  const auto& tree = problem.tree();
  const double gamma = options.gamma;
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::NonPositiveGamma, "gamma must be positive");
  if (!(options.tol >= 0.0)) throw Error(ErrorCode::ToleranceError, "tol must be >= 0");
  if (options.max_iter == 0) throw Error(ErrorCode::ParameterOutOfRange, "max_iter must be >= 1");
  if (options.trace_every == 0) throw Error(ErrorCode::ParameterOutOfRange, "trace_every must be >= 1");
  for (std::size_t s = 0; s < tree.num_scenarios(); ++s) {
    if (!supports_composite(problem.op(s), problem.constraint(s))) {
      throw Error(ErrorCode::UnsupportedComposite,
                  "scenario " + std::to_string(s) + ": no closed-form composite resolvent for " +
                      std::string(kind_name(problem.op(s))) + " with " +
                      std::string(kind_name(problem.constraint(s))));
    }
  }

  const std::size_t d = tree.dim();
  Policy x(tree);
  Policy v_star(tree);
  Policy a(tree);
  Policy x_star(tree);
  Vector z(d);
  std::vector<std::size_t> all(tree.num_scenarios());
  for (std::size_t s = 0; s < all.size(); ++s) all[s] = s;

  const auto start = std::chrono::steady_clock::now();
  Solution sol;
  std::size_t n = 0;
  while (n < options.max_iter) {
    for (std::size_t s = 0; s < tree.num_scenarios(); ++s) {
      const auto xs = x[s];
      const auto vs = v_star[s];
      for (std::size_t i = 0; i < d; ++i) z[i] = xs[i] - gamma * vs[i];
      const auto as = composite_resolvent(problem.op(s), problem.constraint(s), gamma, z);
      std::copy(as.begin(), as.end(), a[s].begin());
      // (x - a)/gamma - v* lies in (A + N_C)(a); remove A(a) to get the
      // normal-cone part.
      const auto grad = apply_operator(problem.op(s), as);
      auto ms = x_star[s];
      for (std::size_t i = 0; i < d; ++i) ms[i] = (xs[i] - as[i]) / gamma - vs[i] - grad[i];
    }
    Policy a_par = project_nonanticipative(tree, a);
    Policy a_perp = a - a_par;
    x = std::move(a_par);
    v_star.add_scaled(1.0 / gamma, a_perp);

    IterationRecord rec;
    rec.n = n;
    rec.active = all;
    rec.residual = kkt_residual(problem, x, x_star, v_star);
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    ++n;

    const bool done = rec.residual <= options.tol;
    const bool last = done || n == options.max_iter;
    sol.residual = rec.residual;
    if (rec.n % options.trace_every == 0 || last) sol.trace.push_back(std::move(rec));
    if (done) {
      sol.status = SolveStatus::Converged;
      break;
    }
  }
  sol.iterations = n;
  sol.x_bar = std::move(x);
  sol.x_star_bar = std::move(x_star);
  sol.v_star_bar = std::move(v_star);
  return sol;
}

}  // namespace stochsplit
