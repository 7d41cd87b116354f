#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stochsplit/scenario_tree.hpp"

namespace stochsplit {

/// A decision mapping x: scenario -> R^d, stored row-major (one row of
/// length d per scenario). Primal iterates, multipliers and all per-scenario
/// intermediates of the solvers share this shape.
class Policy {
 public:
  Policy() = default;
  Policy(std::size_t num_scenarios, std::size_t dim, double fill = 0.0)
      : num_scenarios_(num_scenarios), dim_(dim), data_(num_scenarios * dim, fill) {}
  /// Zero policy shaped for `tree`.
  explicit Policy(const ScenarioTree& tree) : Policy(tree.num_scenarios(), tree.dim()) {}

  std::size_t num_scenarios() const noexcept { return num_scenarios_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<double> operator[](std::size_t scenario) noexcept {
    return {data_.data() + scenario * dim_, dim_};
  }
  std::span<const double> operator[](std::size_t scenario) const noexcept {
    return {data_.data() + scenario * dim_, dim_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Policy& other) const noexcept {
    return num_scenarios_ == other.num_scenarios_ && dim_ == other.dim_;
  }

  Policy& operator+=(const Policy& other);
  Policy& operator-=(const Policy& other);
  Policy& operator*=(double s);
  /// this += s * other
  Policy& add_scaled(double s, const Policy& other);

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::size_t num_scenarios_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

Policy operator+(Policy lhs, const Policy& rhs);
Policy operator-(Policy lhs, const Policy& rhs);
Policy operator*(double s, Policy x);

/// Element (y, x) of the augmented space used by the CVaR reformulation.
struct AugmentedPolicy {
  std::vector<double> scalar;
  Policy base;
};

/// Throws ShapeMismatch unless x has one length-d row per scenario of tree.
void check_shape(const ScenarioTree& tree, const Policy& x);

/// Expectation scalar product sum_xi pi(xi) <x(xi), y(xi)>.
double inner(const ScenarioTree& tree, const Policy& x, const Policy& y);
double norm(const ScenarioTree& tree, const Policy& x);

/// proj_V: stage block k of every scenario is replaced by the
/// probability-weighted average of that block over its stage-k class.
Policy project_nonanticipative(const ScenarioTree& tree, const Policy& x);
/// Writes proj_V x into out (reshaped as needed). out may alias x.
void project_nonanticipative_into(const ScenarioTree& tree, const Policy& x, Policy& out);

/// x - proj_V x.
Policy project_nonanticipative_complement(const ScenarioTree& tree, const Policy& x);

/// ||x - proj_V x|| <= tol * (1 + ||x||). Throws ToleranceError when tol <= 0.
bool is_nonanticipative(const ScenarioTree& tree, const Policy& x, double tol);

}  // namespace stochsplit
