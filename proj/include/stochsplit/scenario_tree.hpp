#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stochsplit {

/// One realization of the stage-wise information process. Labels are opaque
/// tokens; only their equality matters.
struct Scenario {
  std::size_t id = 0;
  std::vector<std::string> labels;
  double probability = 0.0;
};

struct RawScenario {
  std::vector<std::string> labels;
  double probability = 0.0;
};

using ScenarioClass = std::vector<std::size_t>;
using Partition = std::vector<ScenarioClass>;

/// Finite N-stage scenario tree with the information-equivalence structure
/// that defines nonanticipativity.
///
/// Stages are indexed from 0. Two scenarios share a stage-k class when their
/// label prefixes of length k agree, so stage 0 always has a single class.
/// Classes are ordered by their smallest member and members are ascending.
/// Immutable once built.
class ScenarioTree {
 public:
  static constexpr double kMassTolerance = 1e-12;

  /// Throws Error with EmptyTree, NonPositiveProbability, BadProbabilityMass,
  /// DuplicateScenario or InvalidSpec (bad stage_dims or label lengths).
  static ScenarioTree build(const std::vector<RawScenario>& raw,
                            const std::vector<std::size_t>& stage_dims);

  std::size_t num_scenarios() const noexcept { return scenarios_.size(); }
  std::size_t num_stages() const noexcept { return stage_dims_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  const std::vector<Scenario>& scenarios() const noexcept { return scenarios_; }
  const Scenario& scenario(std::size_t i) const { return scenarios_.at(i); }
  double probability(std::size_t i) const { return scenarios_[i].probability; }

  const std::vector<std::size_t>& stage_dims() const noexcept { return stage_dims_; }
  std::size_t stage_dim(std::size_t k) const { return stage_dims_.at(k); }
  /// First coordinate of stage k inside a full decision vector.
  std::size_t stage_offset(std::size_t k) const { return stage_offsets_.at(k); }

  /// Partition of scenario indices by ~_k. Throws StageOutOfRange.
  const Partition& equivalence_classes(std::size_t k) const;
  std::size_t class_of(std::size_t k, std::size_t scenario) const;
  /// Total probability of class c at stage k (always > 0).
  double class_probability(std::size_t k, std::size_t c) const;

 private:
  ScenarioTree() = default;

  std::vector<Scenario> scenarios_;
  std::vector<std::size_t> stage_dims_;
  std::vector<std::size_t> stage_offsets_;
  std::size_t dim_ = 0;
  std::vector<Partition> classes_;
  std::vector<std::vector<std::size_t>> class_of_;
  std::vector<std::vector<double>> class_mass_;
};

/// Free-function form of ScenarioTree::equivalence_classes.
const Partition& equivalence_classes(const ScenarioTree& tree, std::size_t k);

}  // namespace stochsplit
