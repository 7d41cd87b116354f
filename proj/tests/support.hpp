#pragma once

// Random instance generators and small helpers shared by the test binaries.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "stochsplit/error.hpp"
#include "stochsplit/operators.hpp"
#include "stochsplit/policy_space.hpp"
#include "stochsplit/scenario_tree.hpp"
#include "stochsplit/solver.hpp"

namespace testing {

using namespace stochsplit;

/// Code of the Error thrown by f, or nullopt when nothing is thrown.
template <class F>
std::optional<ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  std::size_t index(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(gen_); }
  bool coin() { return index(0, 1) == 1; }

  Vector vec(std::size_t d, double lo, double hi) {
    Vector v(d);
    for (auto& e : v) e = uniform(lo, hi);
    return v;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline std::vector<double> random_probabilities(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) total += (x = rng.uniform(0.2, 1.0));
  for (auto& x : w) x /= total;
  return w;
}

/// Distinct label paths over a 3-letter alphabet per stage.
inline ScenarioTree random_tree(Rng& rng, std::size_t scenarios, std::vector<std::size_t> dims) {
  std::set<std::vector<std::string>> seen;
  std::vector<RawScenario> raw;
  const auto p = random_probabilities(rng, scenarios);
  while (raw.size() < scenarios) {
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < dims.size(); ++k) labels.push_back(std::string(1, static_cast<char>('a' + rng.index(0, 2))));
    if (!seen.insert(labels).second) continue;
    raw.push_back({labels, 0.0});
  }
  for (std::size_t s = 0; s < scenarios; ++s) raw[s].probability = p[s];
  return ScenarioTree::build(raw, dims);
}

/// 2-8 scenarios, 2-3 stages, stage dims 1-2.
inline ScenarioTree random_small_tree(Rng& rng) {
  const std::size_t stages = rng.index(2, 3);
  std::vector<std::size_t> dims(stages);
  for (auto& d : dims) d = rng.index(1, 2);
  return random_tree(rng, rng.index(2, 8), dims);
}

inline Policy random_policy(Rng& rng, const ScenarioTree& tree, double scale = 1.0) {
  Policy x(tree);
  for (double& v : x.data()) v = rng.uniform(-scale, scale);
  return x;
}

/// Strongly monotone catalog operator.
inline OperatorSpec random_operator(Rng& rng, std::size_t d) {
  if (rng.coin()) return DiagonalAffine{rng.vec(d, 0.5, 2.0), rng.vec(d, -1.0, 1.0)};
  return GradSeparableQuadratic{rng.vec(d, 0.5, 2.0), rng.vec(d, -1.5, 1.5)};
}

/// Constraint with the origin in its relative interior, so the intersection
/// with V is never empty.
inline ConstraintSpec random_constraint(Rng& rng, std::size_t d) {
  switch (rng.index(0, 4)) {
    case 0:
      return WholeSpace{d};
    case 1:
      return Box{rng.vec(d, -1.0, -0.1), rng.vec(d, 0.1, 1.0)};
    case 2: {
      auto c = rng.vec(d, -0.3, 0.3);
      return Ball{c, rng.uniform(0.5, 1.5)};
    }
    case 3:
      return Halfspace{rng.vec(d, 0.2, 1.0), rng.uniform(0.1, 1.0)};
    default:
      return Hyperplane{rng.vec(d, 0.2, 1.0), 0.0};
  }
}

inline Problem random_problem(Rng& rng, const ScenarioTree& tree) {
  std::vector<OperatorSpec> ops;
  std::vector<ConstraintSpec> cs;
  for (std::size_t s = 0; s < tree.num_scenarios(); ++s) {
    ops.push_back(random_operator(rng, tree.dim()));
    cs.push_back(random_constraint(rng, tree.dim()));
  }
  return Problem(tree, std::move(ops), std::move(cs));
}

/// GradSeparableQuadratic + Box instance (the oracle's domain).
inline Problem random_quadratic_box(Rng& rng, const ScenarioTree& tree) {
  std::vector<OperatorSpec> ops;
  std::vector<ConstraintSpec> cs;
  const std::size_t d = tree.dim();
  for (std::size_t s = 0; s < tree.num_scenarios(); ++s) {
    ops.push_back(GradSeparableQuadratic{rng.vec(d, 0.5, 2.0), rng.vec(d, -1.0, 2.0)});
    cs.push_back(Box{Vector(d, 0.0), Vector(d, 1.0)});
  }
  return Problem(tree, std::move(ops), std::move(cs));
}

inline double max_abs_diff(const Policy& a, const Policy& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double dist(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// The (a,u)/(b,w) two-scenario quadratic-box instance: stage 1 shared,
/// stage 2 separate.
inline ScenarioTree two_scenario_tree() {
  return ScenarioTree::build({{{"a", "u"}, 0.5}, {{"b", "w"}, 0.5}}, {1, 1});
}

inline Problem two_scenario_problem() {
  return Problem(two_scenario_tree(),
                 {GradSeparableQuadratic{{1, 1}, {0, 0.2}}, GradSeparableQuadratic{{1, 1}, {1, 0.8}}},
                 {Box{{0, 0}, {1, 1}}, Box{{0, 0}, {1, 1}}});
}

}  // namespace testing
