#pragma once

// Brute-force reference solvers. Nothing here calls into the solver, the
// proximal formulas or the projector code; costs, CVaR and nonanticipativity
// are re-derived locally so that shared mistakes cannot cancel out.

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "stochsplit/cvar.hpp"
#include "stochsplit/operators.hpp"
#include "stochsplit/policy_space.hpp"
#include "stochsplit/solver.hpp"

namespace stochsplit::oracle {

/// Axis-aligned search box. Each refinement round shrinks every side 10x
/// around the incumbent (clamped to the original box), so the final pitch is
/// (upper - lower) / ((points - 1) * 10^rounds).
struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t points = 2001;
  std::size_t rounds = 3;
};

/// Throws BadGrid (non-finite or inverted bounds, fewer than 3 points,
/// mismatched bound lengths).
void validate(const GridSpec& grid);
double final_pitch(const GridSpec& grid, std::size_t axis = 0);

struct GridResult {
  double argmin = 0.0;
  double value = 0.0;
  double pitch = 0.0;
  /// Incumbent value after the initial pass and after every refinement.
  std::vector<double> history;
};

/// Dense scan with refinement of a 1-D function over [lower, upper].
GridResult grid_minimize(const std::function<double(double)>& fn, double lower, double upper, std::size_t points,
                         std::size_t rounds);

enum class ProxMode { MaxNonneg, Plain };

/// argmin_y gamma * g(f(y)) + (y - x)^2 / 2 over grid.lower[0]..upper[0],
/// with g = max{., 0} or identity. f must be one-dimensional.
double oracle_prox_grid(const CostSpec& f, double gamma, double x, const GridSpec& grid,
                        ProxMode mode = ProxMode::MaxNonneg);

/// argmin over (y', x') of gamma (y' + max{f(x') - y', 0} / (1 - alpha))
/// + ((y' - y)^2 + (x' - x)^2) / 2. Axis 0 of the grid is y', axis 1 is x'.
///
/// A plain 2-D scan resolves the kink along y' = f(x') too coarsely, so the
/// search is nested: x' is scanned with the given grid and, for each x', y' is
/// minimized on a 41-point grid refined until its pitch is 1e-9 times the
/// outer pitch.
std::pair<double, double> oracle_prox_cvar_grid(const CostSpec& f, double alpha, double gamma, double y, double x,
                                                const GridSpec& grid);

/// Risk-neutral program min E[f(xi, x(xi))] over nonanticipative x with
/// x(xi) in Box(xi), f(xi, .) the potential of the GradSeparableQuadratic
/// operator. Projected gradient on one vector per (stage, class); the
/// subspaces U play no role in the solution set and are ignored. Throws
/// UnsupportedInstance for other operator/constraint kinds, zero curvature
/// or empty class boxes.
Policy oracle_solve_quadratic_box(const Problem& problem);

struct CvarOracleResult {
  Policy x;
  double value = 0.0;
};

/// Nested grid over the free coordinates (one per stage, class and component
/// of that stage block, in that order); at most 3 are allowed. Coordinate j
/// is searched in [grid.lower[j], grid.upper[j]] intersected with the Box
/// constraints of the class members, and is refined 4 extra rounds per
/// nesting level. Constraints must be Box or WholeSpace. Throws
/// TooManyFreeCoordinates, UnsupportedInstance and BadGrid.
CvarOracleResult oracle_cvar_small(const CvarProblem& cp, const GridSpec& grid);

/// Number of free coordinates of a nonanticipative policy on the tree.
std::size_t free_coordinate_count(const ScenarioTree& tree);

/// CVaR by minimizing y + E[max{L - y, 0}] / (1 - alpha) over y in the
/// loss values.
double brute_force_cvar(const std::vector<double>& probabilities, double alpha, const std::vector<double>& losses);

}  // namespace stochsplit::oracle
