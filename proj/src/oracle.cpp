#include "stochsplit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "stochsplit/error.hpp"

namespace stochsplit::oracle {

namespace {

constexpr double kShrink = 10.0;
constexpr std::size_t kInnerPoints = 41;
constexpr double kInnerPitchRatio = 1e-9;
constexpr std::size_t kExtraRoundsPerLevel = 4;
constexpr std::size_t kMaxFree = 3;
constexpr std::size_t kPgdIterations = 1000000;
constexpr double kPgdTol = 1e-12;

double cost_at(const CostSpec& f, std::span<const double> x) {
  if (const auto* a = std::get_if<AffineCost>(&f)) {
    double v = a->r;
    for (std::size_t i = 0; i < x.size(); ++i) v += a->c[i] * x[i];
    return v;
  }
  const auto& q = std::get<SeparableQuadraticCost>(f);
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) v += 0.5 * q.q[i] * (x[i] - q.c[i]) * (x[i] - q.c[i]);
  return v + q.r;
}

std::size_t cost_dim(const CostSpec& f) {
  if (const auto* a = std::get_if<AffineCost>(&f)) return a->c.size();
  const auto& q = std::get<SeparableQuadraticCost>(f);
  return q.q.size();
}

void require_one_dim(const CostSpec& f) {
  if (cost_dim(f) != 1) throw Error(ErrorCode::InvalidSpec, "oracle expects a one-dimensional cost");
}

// Scenario groups per stage, keyed by label prefix, in order of first
// appearance.
std::vector<std::vector<std::vector<std::size_t>>> stage_groups(const ScenarioTree& tree) {
  std::vector<std::vector<std::vector<std::size_t>>> out(tree.num_stages());
  for (std::size_t k = 0; k < tree.num_stages(); ++k) {
    std::map<std::vector<std::string>, std::size_t> index;
    for (std::size_t s = 0; s < tree.num_scenarios(); ++s) {
      const auto& labels = tree.scenario(s).labels;
      std::vector<std::string> key(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(k));
      auto [it, fresh] = index.try_emplace(std::move(key), out[k].size());
      if (fresh) out[k].emplace_back();
      out[k][it->second].push_back(s);
    }
  }
  return out;
}

// One free coordinate of a nonanticipative policy: component `column` shared
// by every scenario in `members`.
struct FreeCoordinate {
  std::size_t column;
  std::vector<std::size_t> members;
};

std::vector<FreeCoordinate> free_coordinates(const ScenarioTree& tree) {
  std::vector<FreeCoordinate> out;
  const auto groups = stage_groups(tree);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < tree.num_stages(); ++k) {
    const std::size_t dk = tree.stage_dims()[k];
    for (const auto& members : groups[k]) {
      for (std::size_t i = 0; i < dk; ++i) out.push_back({offset + i, members});
    }
    offset += dk;
  }
  return out;
}

// Intersection of the per-member bounds on one coordinate; WholeSpace adds
// nothing.
std::pair<double, double> member_bounds(const std::vector<ConstraintSpec>& constraints, const FreeCoordinate& fc) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t s : fc.members) {
    if (const auto* box = std::get_if<Box>(&constraints[s])) {
      lo = std::max(lo, box->lo[fc.column]);
      hi = std::min(hi, box->hi[fc.column]);
    } else if (!std::holds_alternative<WholeSpace>(constraints[s])) {
      throw Error(ErrorCode::UnsupportedInstance, "oracle handles Box and WholeSpace constraints only");
    }
  }
  if (lo > hi) throw Error(ErrorCode::UnsupportedInstance, "empty intersection of class boxes");
  return {lo, hi};
}

}  // namespace

void validate(const GridSpec& grid) {
  if (grid.lower.empty() || grid.lower.size() != grid.upper.size())
    throw Error(ErrorCode::BadGrid, "grid bounds must be non-empty and of equal length");
  if (grid.points < 3) throw Error(ErrorCode::BadGrid, "grid needs at least 3 points per axis");
  for (std::size_t j = 0; j < grid.lower.size(); ++j) {
    if (!std::isfinite(grid.lower[j]) || !std::isfinite(grid.upper[j]) || !(grid.lower[j] < grid.upper[j]))
      throw Error(ErrorCode::BadGrid, "axis " + std::to_string(j) + ": need finite lower < upper");
  }
}

double final_pitch(const GridSpec& grid, std::size_t axis) {
  return (grid.upper.at(axis) - grid.lower.at(axis)) / static_cast<double>(grid.points - 1) /
         std::pow(kShrink, static_cast<double>(grid.rounds));
}

GridResult grid_minimize(const std::function<double(double)>& fn, double lower, double upper, std::size_t points,
                         std::size_t rounds) {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper) || points < 3)
    throw Error(ErrorCode::BadGrid, "invalid 1-D grid");
  GridResult best;
  best.value = std::numeric_limits<double>::infinity();
  double lo = lower;
  double hi = upper;
  for (std::size_t r = 0;; ++r) {
    const double h = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
      const double t = i + 1 == points ? hi : lo + static_cast<double>(i) * h;
      const double v = fn(t);
      if (v < best.value) {
        best.value = v;
        best.argmin = t;
      }
    }
    best.pitch = h;
    best.history.push_back(best.value);
    if (r == rounds) break;
    const double width = (hi - lo) / kShrink;
    lo = best.argmin - width / 2;
    hi = best.argmin + width / 2;
    if (lo < lower) {
      hi += lower - lo;
      lo = lower;
    }
    if (hi > upper) {
      lo -= hi - upper;
      hi = upper;
    }
    lo = std::max(lo, lower);
  }
  return best;
}

double oracle_prox_grid(const CostSpec& f, double gamma, double x, const GridSpec& grid, ProxMode mode) {
  validate(grid);
  require_one_dim(f);
  const auto objective = [&](double t) {
    const double ft = cost_at(f, std::span<const double>(&t, 1));
    const double g = mode == ProxMode::MaxNonneg ? std::max(ft, 0.0) : ft;
    return gamma * g + 0.5 * (t - x) * (t - x);
  };
  return grid_minimize(objective, grid.lower[0], grid.upper[0], grid.points, grid.rounds).argmin;
}

std::pair<double, double> oracle_prox_cvar_grid(const CostSpec& f, double alpha, double gamma, double y, double x,
                                                const GridSpec& grid) {
  validate(grid);
  if (grid.lower.size() != 2) throw Error(ErrorCode::BadGrid, "CVaR prox grid needs two axes (y, x)");
  require_one_dim(f);
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::BadAlpha, "alpha must lie in (0, 1)");

  const double target = kInnerPitchRatio * final_pitch(grid, 1);
  std::size_t inner_rounds = 0;
  while ((grid.upper[0] - grid.lower[0]) / static_cast<double>(kInnerPoints - 1) /
             std::pow(kShrink, static_cast<double>(inner_rounds)) >
         target)
    ++inner_rounds;

  const auto inner = [&](double xp) {
    const double fx = cost_at(f, std::span<const double>(&xp, 1));
    const auto objective = [&](double yp) {
      return gamma * (yp + std::max(fx - yp, 0.0) / (1.0 - alpha)) + 0.5 * (yp - y) * (yp - y);
    };
    return grid_minimize(objective, grid.lower[0], grid.upper[0], kInnerPoints, inner_rounds);
  };
  const auto outer = [&](double xp) { return inner(xp).value + 0.5 * (xp - x) * (xp - x); };
  const double p = grid_minimize(outer, grid.lower[1], grid.upper[1], grid.points, grid.rounds).argmin;
  return {inner(p).argmin, p};
}

Policy oracle_solve_quadratic_box(const Problem& problem) {
  const auto& tree = problem.tree();
  const std::size_t n = tree.num_scenarios();
  for (std::size_t s = 0; s < n; ++s) {
    if (!std::holds_alternative<GradSeparableQuadratic>(problem.op(s)))
      throw Error(ErrorCode::UnsupportedInstance, "oracle needs GradSeparableQuadratic operators");
    if (!std::holds_alternative<Box>(problem.constraint(s)) && !std::holds_alternative<WholeSpace>(problem.constraint(s)))
      throw Error(ErrorCode::UnsupportedInstance, "oracle needs Box constraints");
  }

  const auto coords = free_coordinates(tree);
  const std::size_t m = coords.size();
  // Reduced objective sum_j H_j z_j^2 / 2 - g_j z_j + const.
  std::vector<double> curvature(m, 0.0), linear(m, 0.0), lo(m), hi(m), z(m);
  double lipschitz = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t s : coords[j].members) {
      const auto& op = std::get<GradSeparableQuadratic>(problem.op(s));
      const double p = tree.probability(s);
      curvature[j] += p * op.q[coords[j].column];
      linear[j] += p * op.q[coords[j].column] * op.c[coords[j].column];
    }
    if (!(curvature[j] > 0.0)) throw Error(ErrorCode::UnsupportedInstance, "reduced objective is not strongly convex");
    std::tie(lo[j], hi[j]) = member_bounds(problem.constraints(), coords[j]);
    lipschitz = std::max(lipschitz, curvature[j]);
    z[j] = std::clamp(0.0, lo[j], hi[j]);
  }

  for (std::size_t it = 0; it < kPgdIterations; ++it) {
    double moved = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double grad = curvature[j] * z[j] - linear[j];
      const double next = std::clamp(z[j] - grad / lipschitz, lo[j], hi[j]);
      moved += (next - z[j]) * (next - z[j]);
      z[j] = next;
    }
    if (std::sqrt(moved) * lipschitz <= kPgdTol) break;
  }

  Policy x(n, tree.dim());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t s : coords[j].members) x[s][coords[j].column] = z[j];
  }
  return x;
}

std::size_t free_coordinate_count(const ScenarioTree& tree) { return free_coordinates(tree).size(); }

double brute_force_cvar(const std::vector<double>& probabilities, double alpha, const std::vector<double>& losses) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::BadAlpha, "alpha must lie in (0, 1)");
  if (probabilities.size() != losses.size() || losses.empty())
    throw Error(ErrorCode::ShapeMismatch, "probabilities and losses differ in length");
  double best = std::numeric_limits<double>::infinity();
  for (double y : losses) {
    double tail = 0.0;
    for (std::size_t s = 0; s < losses.size(); ++s) tail += probabilities[s] * std::max(losses[s] - y, 0.0);
    best = std::min(best, y + tail / (1.0 - alpha));
  }
  return best;
}

CvarOracleResult oracle_cvar_small(const CvarProblem& cp, const GridSpec& grid) {
  const auto& tree = cp.tree();
  const auto coords = free_coordinates(tree);
  const std::size_t m = coords.size();
  if (m > kMaxFree) {
    throw Error(ErrorCode::TooManyFreeCoordinates,
                std::to_string(m) + " free coordinates, at most " + std::to_string(kMaxFree) + " supported");
  }
  validate(grid);
  if (grid.lower.size() != m)
    throw Error(ErrorCode::BadGrid, "grid has " + std::to_string(grid.lower.size()) + " axes, need " + std::to_string(m));

  std::vector<double> lo(m), hi(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto [blo, bhi] = member_bounds(cp.constraints(), coords[j]);
    lo[j] = std::max(grid.lower[j], blo);
    hi[j] = std::min(grid.upper[j], bhi);
    if (!(lo[j] < hi[j])) throw Error(ErrorCode::BadGrid, "grid axis " + std::to_string(j) + " misses the feasible set");
  }

  const std::size_t n = tree.num_scenarios();
  std::vector<double> probabilities(n);
  for (std::size_t s = 0; s < n; ++s) probabilities[s] = tree.probability(s);

  Policy x(n, tree.dim());
  std::vector<double> losses(n);
  const auto value = [&]() {
    for (std::size_t s = 0; s < n; ++s) losses[s] = cost_at(cp.costs()[s], x[s]);
    return brute_force_cvar(probabilities, cp.alpha(), losses);
  };
  const auto set = [&](std::size_t j, double t) {
    for (std::size_t s : coords[j].members) x[s][coords[j].column] = t;
  };

  // Minimum over coordinates j.. with the earlier ones held fixed.
  std::function<GridResult(std::size_t)> level = [&](std::size_t j) {
    const auto fn = [&](double t) {
      set(j, t);
      return j + 1 == m ? value() : level(j + 1).value;
    };
    return grid_minimize(fn, lo[j], hi[j], grid.points, grid.rounds + kExtraRoundsPerLevel * j);
  };

  for (std::size_t j = 0; j < m; ++j) set(j, level(j).argmin);
  return {x, value()};
}

}  // namespace stochsplit::oracle
