#include "stochsplit/scenario_tree.hpp"

#include <cmath>
#include <map>
#include <set>

#include "stochsplit/error.hpp"

namespace stochsplit {

ScenarioTree ScenarioTree::build(const std::vector<RawScenario>& raw,
                                 const std::vector<std::size_t>& stage_dims) {
  if (raw.empty()) throw Error(ErrorCode::EmptyTree, "scenario list is empty");
  if (stage_dims.empty()) throw Error(ErrorCode::InvalidSpec, "stage_dims is empty");
  for (std::size_t k = 0; k < stage_dims.size(); ++k) {
    if (stage_dims[k] == 0)
      throw Error(ErrorCode::InvalidSpec, "stage " + std::to_string(k) + " has dimension 0");
  }

  const std::size_t num_stages = stage_dims.size();
  ScenarioTree tree;
  tree.stage_dims_ = stage_dims;
  tree.stage_offsets_.resize(num_stages);
  for (std::size_t k = 0; k < num_stages; ++k) {
    tree.stage_offsets_[k] = tree.dim_;
    tree.dim_ += stage_dims[k];
  }

  double mass = 0.0;
  std::set<std::vector<std::string>> seen;
  tree.scenarios_.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& r = raw[i];
    if (r.labels.size() != num_stages) {
      throw Error(ErrorCode::InvalidSpec, "scenario " + std::to_string(i) + " has " +
                                              std::to_string(r.labels.size()) +
                                              " labels, expected " + std::to_string(num_stages));
    }
    if (!(r.probability > 0.0)) {
      throw Error(ErrorCode::NonPositiveProbability,
                  "scenario " + std::to_string(i) + " has probability " + std::to_string(r.probability));
    }
    if (r.probability > 1.0) {
      throw Error(ErrorCode::BadProbabilityMass,
                  "scenario " + std::to_string(i) + " has probability above 1");
    }
    if (!seen.insert(r.labels).second)
      throw Error(ErrorCode::DuplicateScenario, "scenario " + std::to_string(i) + " repeats a label sequence");
    mass += r.probability;
    tree.scenarios_.push_back(Scenario{i, r.labels, r.probability});
  }
  if (std::abs(mass - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::BadProbabilityMass, "probabilities sum to " + std::to_string(mass));
  }

  // Stage-k classes group scenarios by their first k labels. Iterating in
  // scenario order makes class order follow the smallest member.
  const std::size_t n = raw.size();
  tree.classes_.resize(num_stages);
  tree.class_of_.assign(num_stages, std::vector<std::size_t>(n));
  tree.class_mass_.resize(num_stages);
  for (std::size_t k = 0; k < num_stages; ++k) {
    std::map<std::vector<std::string>, std::size_t> index;
    auto& partition = tree.classes_[k];
    for (std::size_t i = 0; i < n; ++i) {
      const auto& labels = tree.scenarios_[i].labels;
      std::vector<std::string> prefix(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(k));
      auto [it, inserted] = index.try_emplace(std::move(prefix), partition.size());
      if (inserted) {
        partition.emplace_back();
        tree.class_mass_[k].push_back(0.0);
      }
      partition[it->second].push_back(i);
      tree.class_of_[k][i] = it->second;
      tree.class_mass_[k][it->second] += tree.scenarios_[i].probability;
    }
  }
  return tree;
}

const Partition& ScenarioTree::equivalence_classes(std::size_t k) const {
  if (k >= classes_.size()) {
    throw Error(ErrorCode::StageOutOfRange,
                "stage " + std::to_string(k) + " not in [0, " + std::to_string(classes_.size()) + ")");
  }
  return classes_[k];
}

std::size_t ScenarioTree::class_of(std::size_t k, std::size_t scenario) const {
  return class_of_.at(k).at(scenario);
}

double ScenarioTree::class_probability(std::size_t k, std::size_t c) const {
  return class_mass_.at(k).at(c);
}

const Partition& equivalence_classes(const ScenarioTree& tree, std::size_t k) {
  return tree.equivalence_classes(k);
}

}  // namespace stochsplit
