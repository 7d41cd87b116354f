#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "stochsplit/operators.hpp"
#include "stochsplit/policy_space.hpp"
#include "stochsplit/scenario_tree.hpp"
#include "stochsplit/schedule.hpp"

namespace stochsplit {

/// Stochastic equilibrium problem: find x in V and v* in V-perp with
/// -v*(xi) in A(xi, x(xi)) + N_C(xi)(x(xi)) for every scenario.
///
/// U(xi) are the subspaces holding the constraint multipliers x*(xi); the
/// constructor rejects pairs (C, U) whose range condition cannot be certified.
class Problem {
 public:
  /// Throws ShapeMismatch (wrong number of specs), DimensionMismatch,
  /// InvalidSpec / BadAlpha and RangeConditionViolated.
  Problem(ScenarioTree tree, std::vector<OperatorSpec> operators, std::vector<ConstraintSpec> constraints,
          std::vector<SubspaceSpec> subspaces);

  /// Same, with U(xi) = R^d everywhere.
  Problem(ScenarioTree tree, std::vector<OperatorSpec> operators, std::vector<ConstraintSpec> constraints);

  const ScenarioTree& tree() const noexcept { return tree_; }
  const std::vector<OperatorSpec>& operators() const noexcept { return operators_; }
  const std::vector<ConstraintSpec>& constraints() const noexcept { return constraints_; }
  const std::vector<SubspaceSpec>& subspaces() const noexcept { return subspaces_; }

  const OperatorSpec& op(std::size_t s) const { return operators_[s]; }
  const ConstraintSpec& constraint(std::size_t s) const { return constraints_[s]; }
  const SubspaceSpec& subspace(std::size_t s) const { return subspaces_[s]; }

 private:
  ScenarioTree tree_;
  std::vector<OperatorSpec> operators_;
  std::vector<ConstraintSpec> constraints_;
  std::vector<SubspaceSpec> subspaces_;
};

/// gamma_{xi,n} and mu_{xi,n} as a function of (scenario, iteration).
using StepRule = std::function<double(std::size_t scenario, std::size_t n)>;
/// lambda_n as a function of the iteration.
using RelaxationRule = std::function<double(std::size_t n)>;

StepRule constant_step(double value);
StepRule per_scenario_steps(std::vector<double> values);
RelaxationRule constant_relaxation(double value);

struct SolverConfig {
  /// Admissible step sizes lie in [epsilon, 1/epsilon], relaxations in
  /// [epsilon, 2 - epsilon]. Values outside raise ParameterOutOfRange.
  double epsilon = 1e-3;
  StepRule gamma = constant_step(1.0);
  StepRule mu = constant_step(1.0);
  RelaxationRule lambda = constant_relaxation(1.0);
  ActivationSchedule schedule = FullSchedule{};
  /// Stop when kkt_residual <= tol. tol = 0 runs to max_iter unless the
  /// residual vanishes exactly.
  double tol = 1e-8;
  std::size_t max_iter = 100000;
  /// Keep every k-th iteration in Solution::trace (the last one is always kept).
  std::size_t trace_every = 1;
  /// Worker threads for the per-scenario updates inside one iteration.
  std::size_t threads = 1;
};

/// Iterate of the block-activated projective splitting method together with
/// the per-scenario points (a, a*), (b, b*) and u, which persist unchanged for
/// scenarios left out of a block.
struct SolverState {
  std::size_t n = 0;
  Policy x;       // in V
  Policy x_star;  // x*(xi) in U(xi)
  Policy v_star;  // in V-perp
  Policy a;
  Policy a_star;
  Policy b;
  Policy b_star;
  Policy u;
  std::vector<std::size_t> last_activated;
};

struct IterationRecord {
  std::size_t n = 0;  // iteration that produced this record (0-based)
  double kappa = 0.0;
  double tau = 0.0;
  double theta = 0.0;
  double residual = 0.0;  // kkt_residual after the update
  std::vector<std::size_t> active;
  double wall_time_ms = 0.0;
};

enum class SolveStatus { Converged, MaxIter };
std::string_view to_string(SolveStatus status) noexcept;

struct Solution {
  Policy x_bar;
  Policy x_star_bar;
  Policy v_star_bar;
  SolveStatus status = SolveStatus::MaxIter;
  double residual = 0.0;
  std::size_t iterations = 0;
  std::vector<IterationRecord> trace;
};

/// Called after every iteration with the updated state.
using IterationObserver = std::function<void(const SolverState&, const IterationRecord&)>;

/// x <- proj_V x0, v* <- proj_{V-perp} v0*, x*(xi) <- proj_U(xi) x0*(xi);
/// missing inputs are zero. Throws ShapeMismatch.
SolverState init_state(const Problem& problem, const std::optional<Policy>& x0 = std::nullopt,
                       const std::optional<Policy>& x0_star = std::nullopt,
                       const std::optional<Policy>& v0_star = std::nullopt);

struct ScenarioPoints {
  Vector a;
  Vector a_star;
  Vector b;
  Vector b_star;
  Vector u;
};

/// Resolvent and projection step for one scenario, computed from the current
/// (x, x*, v*) without touching the state.
ScenarioPoints scenario_update(const SolverState& state, const Problem& problem, std::size_t scenario,
                               double gamma, double mu);

struct CoordinationResult {
  double kappa = 0.0;
  double tau = 0.0;
  double theta = 0.0;
};

/// Builds the separating half-space from the stored per-scenario points and
/// projects (x, x*, v*) onto it with relaxation lambda; advances n.
CoordinationResult coordination_step(SolverState& state, const Problem& problem, double lambda);

/// One full iteration: block selection, scenario updates, coordination.
/// Validates gamma, mu and lambda against config.epsilon.
IterationRecord iterate(SolverState& state, const Problem& problem, const SolverConfig& config,
                        BlockSelector& selector);

/// Fixed-point residual of the coupled inclusions; zero exactly at solutions:
/// sqrt( sum_xi pi(xi) [ |x - J_A(x - x* - v*)|^2 + |x - proj_C(x + x*)|^2 ]
///       + |proj_{V-perp} x|^2 + |proj_V v*|^2 ).
double kkt_residual(const Problem& problem, const Policy& x, const Policy& x_star, const Policy& v_star);

Solution solve(const Problem& problem, const SolverConfig& config, const IterationObserver& observer = {});
Solution solve(const Problem& problem, const SolverConfig& config, SolverState initial,
               const IterationObserver& observer = {});

/// Variant for problems whose constraints are all WholeSpace: U = {0},
/// x0* = 0 and mu = 1, so u_n = x*_n = 0 throughout. Throws
/// NonTrivialConstraint otherwise.
Solution solve_reduced(const Problem& problem, const SolverConfig& config, const IterationObserver& observer = {});

struct ProgressiveHedgingOptions {
  double gamma = 1.0;
  double tol = 1e-8;
  std::size_t max_iter = 100000;
  std::size_t trace_every = 1;
};

/// Classical progressive hedging with the composite resolvent
/// J_{gamma (A + N_C)}. The reported x_star_bar is the normal-cone part of the
/// last composite step. Throws UnsupportedComposite.
Solution progressive_hedging_solve(const Problem& problem, const ProgressiveHedgingOptions& options);

}  // namespace stochsplit
