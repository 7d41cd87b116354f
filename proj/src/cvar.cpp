#include "stochsplit/cvar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "stochsplit/error.hpp"

namespace stochsplit {

namespace {

constexpr double kThresholdSpread = 1e-6;

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::BadAlpha, "alpha = " + std::to_string(alpha) + " not in (0, 1)");
}

void require_losses(const ScenarioTree& tree, std::span<const double> losses) {
  if (losses.size() != tree.num_scenarios()) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(tree.num_scenarios()) + " losses, got " +
                                              std::to_string(losses.size()));
  }
}

ScenarioTree augmented_tree(const ScenarioTree& tree) {
  std::vector<RawScenario> raw;
  raw.reserve(tree.num_scenarios());
  for (const auto& s : tree.scenarios()) raw.push_back({s.labels, s.probability});
  auto dims = tree.stage_dims();
  dims.front() += 1;
  return ScenarioTree::build(raw, dims);
}

}  // namespace

CvarProblem::CvarProblem(ScenarioTree tree, double alpha, std::vector<CostSpec> costs,
                         std::vector<ConstraintSpec> constraints)
    : tree_(std::move(tree)), alpha_(alpha), costs_(std::move(costs)), constraints_(std::move(constraints)) {
  require_alpha(alpha_);
  const std::size_t n = tree_.num_scenarios();
  if (costs_.size() != n || constraints_.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "expected one cost and one constraint per scenario");
  for (std::size_t s = 0; s < n; ++s) {
    validate(costs_[s]);
    validate(constraints_[s]);
    if (std::holds_alternative<LiftedConstraint>(constraints_[s]))
      throw Error(ErrorCode::InvalidSpec, "scenario " + std::to_string(s) + ": constraint is already lifted");
    if (dim(costs_[s]) != tree_.dim() || dim(constraints_[s]) != tree_.dim()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "scenario " + std::to_string(s) + ": spec dimension differs from tree dimension");
    }
  }
}

double cvar_threshold(const ScenarioTree& tree, double alpha, std::span<const double> losses) {
  require_alpha(alpha);
  require_losses(tree, losses);
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return losses[i] < losses[j]; });
  double cumulative = 0.0;
  for (std::size_t i : order) {
    cumulative += tree.probability(i);
    if (cumulative >= alpha) return losses[i];
  }
  return losses[order.back()];
}

double cvar_value(const ScenarioTree& tree, double alpha, std::span<const double> losses) {
  const double y = cvar_threshold(tree, alpha, losses);
  double tail = 0.0;
  for (std::size_t s = 0; s < losses.size(); ++s) tail += tree.probability(s) * std::max(losses[s] - y, 0.0);
  return y + tail / (1.0 - alpha);
}

std::vector<double> scenario_losses(const CvarProblem& cp, const Policy& x) {
  check_shape(cp.tree(), x);
  std::vector<double> losses(cp.tree().num_scenarios());
  for (std::size_t s = 0; s < losses.size(); ++s) losses[s] = evaluate(cp.costs()[s], x[s]);
  return losses;
}

AugmentedProblem augment(const CvarProblem& cp) {
  auto tree = augmented_tree(cp.tree());
  const std::size_t n = tree.num_scenarios();
  std::vector<OperatorSpec> ops;
  std::vector<ConstraintSpec> constraints;
  ops.reserve(n);
  constraints.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    ops.emplace_back(CvarAugmented{cp.costs()[s], cp.alpha()});
    const auto& c = cp.constraints()[s];
    BaseConstraint inner = std::visit(
        [](const auto& v) -> BaseConstraint {
          if constexpr (std::is_same_v<std::decay_t<decltype(v)>, LiftedConstraint>) {
            throw Error(ErrorCode::InvalidSpec, "constraint is already lifted");
          } else {
            return v;
          }
        },
        c);
    constraints.emplace_back(LiftedConstraint{std::move(inner)});
  }
  Problem base(std::move(tree), std::move(ops), std::move(constraints));
  return AugmentedProblem{std::move(base), CoordinateMapping{0, cp.tree().dim()}, cp};
}

AugmentedPolicy split_augmented(const CoordinateMapping& mapping, const Policy& augmented) {
  if (augmented.dim() != mapping.original_dim + 1)
    throw Error(ErrorCode::ShapeMismatch, "augmented policy has dimension " + std::to_string(augmented.dim()));
  AugmentedPolicy out{std::vector<double>(augmented.num_scenarios()),
                      Policy(augmented.num_scenarios(), mapping.original_dim)};
  for (std::size_t s = 0; s < augmented.num_scenarios(); ++s) {
    const auto row = augmented[s];
    out.scalar[s] = row[mapping.threshold_index];
    auto base = out.base[s];
    for (std::size_t i = 0; i < mapping.original_dim; ++i) base[i] = row[mapping.augmented_index(i)];
  }
  return out;
}

Policy join_augmented(const CoordinateMapping& mapping, const AugmentedPolicy& yx) {
  if (yx.base.dim() != mapping.original_dim || yx.scalar.size() != yx.base.num_scenarios())
    throw Error(ErrorCode::ShapeMismatch, "augmented parts disagree in shape");
  Policy out(yx.base.num_scenarios(), mapping.original_dim + 1);
  for (std::size_t s = 0; s < out.num_scenarios(); ++s) {
    auto row = out[s];
    row[mapping.threshold_index] = yx.scalar[s];
    const auto base = yx.base[s];
    for (std::size_t i = 0; i < mapping.original_dim; ++i) row[mapping.augmented_index(i)] = base[i];
  }
  return out;
}

AugmentedPolicy project_augmented_nonanticipative(const ScenarioTree& tree, const AugmentedPolicy& yx) {
  if (yx.scalar.size() != tree.num_scenarios()) throw Error(ErrorCode::ShapeMismatch, "scalar part has wrong length");
  double mean = 0.0;
  for (std::size_t s = 0; s < yx.scalar.size(); ++s) mean += tree.probability(s) * yx.scalar[s];
  return {std::vector<double>(yx.scalar.size(), mean), project_nonanticipative(tree, yx.base)};
}

CvarSolution extract_solution(const AugmentedProblem& aug, Solution sol) {
  const auto& tree = aug.source.tree();
  if (sol.x_bar.num_scenarios() != tree.num_scenarios())
    throw Error(ErrorCode::ShapeMismatch, "solution does not belong to the augmented problem");
  auto yx = split_augmented(aug.mapping, sol.x_bar);

  double y_bar = 0.0;
  for (std::size_t s = 0; s < yx.scalar.size(); ++s) y_bar += tree.probability(s) * yx.scalar[s];
  for (double y : yx.scalar) {
    if (std::abs(y - y_bar) > kThresholdSpread) {
      throw Error(ErrorCode::NonConstantThreshold,
                  "threshold varies across scenarios by " + std::to_string(std::abs(y - y_bar)));
    }
  }

  CvarSolution out;
  out.x_bar = std::move(yx.base);
  out.y_bar = y_bar;
  out.objective = cvar_value(tree, aug.source.alpha(), scenario_losses(aug.source, out.x_bar));
  out.inner = std::move(sol);
  return out;
}

CvarSolution solve_cvar(const CvarProblem& cp, const SolverConfig& config, const IterationObserver& observer) {
  const auto aug = augment(cp);
  return extract_solution(aug, solve(aug.base, config, observer));
}

}  // namespace stochsplit
