#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stochsplit/operators.hpp"
#include "stochsplit/policy_space.hpp"
#include "stochsplit/scenario_tree.hpp"
#include "stochsplit/solver.hpp"

namespace stochsplit {

/// Minimize CVaR_alpha of the scenario costs f(xi, x(xi)) over nonanticipative
/// policies with x(xi) in C(xi).
///
/// A point of {x in V : x(xi) in ri C(xi)} is assumed to exist; it is not
/// checked.
class CvarProblem {
 public:
  /// Throws BadAlpha, ShapeMismatch, DimensionMismatch and InvalidSpec (also
  /// for already lifted constraints).
  CvarProblem(ScenarioTree tree, double alpha, std::vector<CostSpec> costs, std::vector<ConstraintSpec> constraints);

  const ScenarioTree& tree() const noexcept { return tree_; }
  double alpha() const noexcept { return alpha_; }
  const std::vector<CostSpec>& costs() const noexcept { return costs_; }
  const std::vector<ConstraintSpec>& constraints() const noexcept { return constraints_; }

 private:
  ScenarioTree tree_;
  double alpha_;
  std::vector<CostSpec> costs_;
  std::vector<ConstraintSpec> constraints_;
};

/// Smallest minimizer of y + E[max{loss - y, 0}] / (1 - alpha): the smallest
/// loss whose cumulative probability reaches alpha. Throws BadAlpha.
double cvar_threshold(const ScenarioTree& tree, double alpha, std::span<const double> losses);
/// CVaR_alpha of the per-scenario losses, computed exactly. Throws BadAlpha
/// and ShapeMismatch.
double cvar_value(const ScenarioTree& tree, double alpha, std::span<const double> losses);

/// Per-scenario losses f(xi, x(xi)).
std::vector<double> scenario_losses(const CvarProblem& cp, const Policy& x);

/// Layout of the augmented decision vector: the threshold y comes first,
/// followed by the original coordinates in order.
struct CoordinateMapping {
  std::size_t threshold_index = 0;
  std::size_t original_dim = 0;

  std::size_t augmented_index(std::size_t original) const { return original + 1; }
};

struct AugmentedProblem {
  Problem base;
  CoordinateMapping mapping;
  CvarProblem source;
};

/// Equilibrium problem on R x R^d with first-stage block (y, x_[1]):
/// operators CvarAugmented{f, alpha}, constraints R x C(xi), U = full.
AugmentedProblem augment(const CvarProblem& cp);

AugmentedPolicy split_augmented(const CoordinateMapping& mapping, const Policy& augmented);
Policy join_augmented(const CoordinateMapping& mapping, const AugmentedPolicy& yx);

/// Projection onto (constants) x V: y is replaced by its expectation and x by
/// proj_V x.
AugmentedPolicy project_augmented_nonanticipative(const ScenarioTree& tree, const AugmentedPolicy& yx);

struct CvarSolution {
  Policy x_bar;
  double y_bar = 0.0;
  double objective = 0.0;
  Solution inner;
};

/// Splits an augmented solution into (y, x) and recomputes the objective.
/// Throws ShapeMismatch, and NonConstantThreshold when y differs across
/// scenarios by more than 1e-6.
CvarSolution extract_solution(const AugmentedProblem& aug, Solution sol);

CvarSolution solve_cvar(const CvarProblem& cp, const SolverConfig& config, const IterationObserver& observer = {});

}  // namespace stochsplit
