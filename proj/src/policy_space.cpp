#include "stochsplit/policy_space.hpp"

#include <cmath>

#include "stochsplit/error.hpp"

namespace stochsplit {

namespace {

void require_same(const Policy& a, const Policy& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "policies differ in shape");
}

}  // namespace

Policy& Policy::operator+=(const Policy& other) {
  require_same(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Policy& Policy::operator-=(const Policy& other) {
  require_same(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Policy& Policy::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Policy& Policy::add_scaled(double s, const Policy& other) {
  require_same(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
  return *this;
}

Policy operator+(Policy lhs, const Policy& rhs) { return lhs += rhs; }
Policy operator-(Policy lhs, const Policy& rhs) { return lhs -= rhs; }
Policy operator*(double s, Policy x) { return x *= s; }

void check_shape(const ScenarioTree& tree, const Policy& x) {
  if (x.num_scenarios() != tree.num_scenarios() || x.dim() != tree.dim()) {
    throw Error(ErrorCode::ShapeMismatch,
                "policy is " + std::to_string(x.num_scenarios()) + "x" + std::to_string(x.dim()) +
                    ", tree expects " + std::to_string(tree.num_scenarios()) + "x" +
                    std::to_string(tree.dim()));
  }
}

double inner(const ScenarioTree& tree, const Policy& x, const Policy& y) {
  check_shape(tree, x);
  check_shape(tree, y);
  double total = 0.0;
  for (std::size_t s = 0; s < tree.num_scenarios(); ++s) {
    const auto xs = x[s];
    const auto ys = y[s];
    double dot = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) dot += xs[i] * ys[i];
    total += tree.probability(s) * dot;
  }
  return total;
}

double norm(const ScenarioTree& tree, const Policy& x) { return std::sqrt(inner(tree, x, x)); }

void project_nonanticipative_into(const ScenarioTree& tree, const Policy& x, Policy& out) {
  check_shape(tree, x);
  if (!out.same_shape(x)) out = Policy(tree);
  std::vector<double> avg;
  for (std::size_t k = 0; k < tree.num_stages(); ++k) {
    const std::size_t off = tree.stage_offset(k);
    const std::size_t len = tree.stage_dim(k);
    const auto& classes = tree.equivalence_classes(k);
    for (std::size_t c = 0; c < classes.size(); ++c) {
      avg.assign(len, 0.0);
      for (std::size_t s : classes[c]) {
        const double p = tree.probability(s);
        const auto row = x[s];
        for (std::size_t i = 0; i < len; ++i) avg[i] += p * row[off + i];
      }
      const double mass = tree.class_probability(k, c);
      for (auto& v : avg) v /= mass;
      for (std::size_t s : classes[c]) {
        auto row = out[s];
        for (std::size_t i = 0; i < len; ++i) row[off + i] = avg[i];
      }
    }
  }
}

Policy project_nonanticipative(const ScenarioTree& tree, const Policy& x) {
  Policy out(tree);
  project_nonanticipative_into(tree, x, out);
  return out;
}

Policy project_nonanticipative_complement(const ScenarioTree& tree, const Policy& x) {
  return x - project_nonanticipative(tree, x);
}

bool is_nonanticipative(const ScenarioTree& tree, const Policy& x, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::ToleranceError, "tolerance must be positive");
  const double gap = norm(tree, project_nonanticipative_complement(tree, x));
  return gap <= tol * (1.0 + norm(tree, x));
}

}  // namespace stochsplit
