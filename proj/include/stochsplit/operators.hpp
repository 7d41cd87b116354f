#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace stochsplit {

using Vector = std::vector<double>;

/// Unbounded box sides are stored as +/- the largest finite double, so clamp
/// needs no special case.
inline constexpr double kInf = std::numeric_limits<double>::max();

inline constexpr double kDefaultBisectionTol = 1e-12;
inline constexpr int kMaxBisectionIterations = 200;

// ---------------------------------------------------------------------------
// Convex costs f: R^d -> R

/// f(x) = <c, x> + r
struct AffineCost {
  Vector c;
  double r = 0.0;
};

/// f(x) = 1/2 sum_i q_i (x_i - c_i)^2 + r, q >= 0
struct SeparableQuadraticCost {
  Vector q;
  Vector c;
  double r = 0.0;
};

using CostSpec = std::variant<AffineCost, SeparableQuadraticCost>;

// ---------------------------------------------------------------------------
// Maximally monotone operators A: R^d -> 2^{R^d}

/// A(x) = a .* x + b, a >= 0
struct DiagonalAffine {
  Vector a;
  Vector b;
};

/// A(x) = q .* (x - c), the gradient of 1/2 sum q_i (x_i - c_i)^2, q >= 0
struct GradSeparableQuadratic {
  Vector q;
  Vector c;
};

/// Subdifferential of (y, x) -> y + max{f(x) - y, 0} / (1 - alpha) on R x R^d.
/// The scalar y is the first coordinate.
struct CvarAugmented {
  CostSpec f;
  double alpha = 0.5;
};

using OperatorSpec = std::variant<DiagonalAffine, GradSeparableQuadratic, CvarAugmented>;

// ---------------------------------------------------------------------------
// Closed convex constraint sets

struct WholeSpace {
  std::size_t dim = 0;
};

/// lo <= x <= hi componentwise; use -kInf / kInf for free sides.
struct Box {
  Vector lo;
  Vector hi;
};

struct Ball {
  Vector center;
  double radius = 1.0;
};

/// {x : <normal, x> <= offset}
struct Halfspace {
  Vector normal;
  double offset = 0.0;
};

/// {x : <normal, x> = offset}
struct Hyperplane {
  Vector normal;
  double offset = 0.0;
};

using BaseConstraint = std::variant<WholeSpace, Box, Ball, Halfspace, Hyperplane>;

/// R x C: leaves the first coordinate free and constrains the rest by `inner`.
struct LiftedConstraint {
  BaseConstraint inner;
};

using ConstraintSpec = std::variant<WholeSpace, Box, Ball, Halfspace, Hyperplane, LiftedConstraint>;

// ---------------------------------------------------------------------------
// Vector subspaces U of R^d

struct FullSubspace {
  std::size_t dim = 0;
};

struct ZeroSubspace {
  std::size_t dim = 0;
};

/// Span of the listed coordinate axes (0-based).
struct CoordinateSubspace {
  std::size_t dim = 0;
  std::vector<std::size_t> indices;
};

using SubspaceSpec = std::variant<FullSubspace, ZeroSubspace, CoordinateSubspace>;

// ---------------------------------------------------------------------------

std::size_t dim(const CostSpec& f);
std::size_t dim(const OperatorSpec& op);
std::size_t dim(const ConstraintSpec& cs);
std::size_t dim(const SubspaceSpec& us);

std::string_view kind_name(const OperatorSpec& op);
std::string_view kind_name(const CostSpec& f);
std::string_view kind_name(const ConstraintSpec& cs);
std::string_view kind_name(const SubspaceSpec& us);

/// Structural checks (lengths, nonnegative coefficients, lo <= hi, radius > 0,
/// nonzero normals, indices in range, alpha in (0,1)). Throw InvalidSpec or
/// BadAlpha.
void validate(const CostSpec& f);
void validate(const OperatorSpec& op);
void validate(const ConstraintSpec& cs);
void validate(const SubspaceSpec& us);

double evaluate(const CostSpec& f, std::span<const double> x);
/// prox_{kappa f}(x) for kappa >= 0 (kappa = 0 gives x).
Vector prox(const CostSpec& f, double kappa, std::span<const double> x);

/// A(x) for the single-valued operators. CvarAugmented throws
/// UnsupportedComposite.
Vector apply_operator(const OperatorSpec& op, std::span<const double> x);

/// Unique p with p + gamma A(p) containing z.
Vector resolvent(const OperatorSpec& op, double gamma, std::span<const double> z,
                 double tol = kDefaultBisectionTol);

Vector project_constraint(const ConstraintSpec& cs, std::span<const double> z);
Vector project_subspace(const SubspaceSpec& us, std::span<const double> z);

// Allocation-free forms; `out` must have the same length as `z`.
void resolvent_into(const OperatorSpec& op, double gamma, std::span<const double> z, std::span<double> out,
                    double tol = kDefaultBisectionTol);
void project_constraint_into(const ConstraintSpec& cs, std::span<const double> z, std::span<double> out);
void project_subspace_into(const SubspaceSpec& us, std::span<const double> z, std::span<double> out);

/// Sound but incomplete check of ran(Id - proj_C) being contained in U.
bool validate_range_condition(const ConstraintSpec& cs, const SubspaceSpec& us);

// ---------------------------------------------------------------------------
// Proximity operators that reduce to a monotone univariate equation

enum class ProxBranch {
  Identity,   // case (i): the max term is inactive
  FullStep,   // case (ii): the max term is active on the whole step
  Bisection,  // case (iii): root of the scalar equation in theta
};

struct ProxMaxResult {
  Vector point;
  ProxBranch branch = ProxBranch::Identity;
  double theta = 0.0;
};

/// prox_{gamma max{f, 0}}(x).
ProxMaxResult prox_max_nonneg_detailed(const CostSpec& f, double gamma, std::span<const double> x,
                                       double tol = kDefaultBisectionTol);
Vector prox_max_nonneg(const CostSpec& f, double gamma, std::span<const double> x,
                       double tol = kDefaultBisectionTol);

struct CvarProxResult {
  double q = 0.0;
  Vector p;
  ProxBranch branch = ProxBranch::Identity;
  double theta = 0.0;
};

/// prox of gamma * [(y, x) -> y + max{f(x) - y, 0} / (1 - alpha)] at (y, x).
CvarProxResult prox_cvar_augmented(const CostSpec& f, double alpha, double gamma, double y,
                                   std::span<const double> x, double tol = kDefaultBisectionTol);

/// J_{gamma (A + N_C)}(z) for separable pairs: DiagonalAffine or
/// GradSeparableQuadratic with Box or WholeSpace. Anything else throws
/// UnsupportedComposite.
Vector composite_resolvent(const OperatorSpec& op, const ConstraintSpec& cs, double gamma,
                           std::span<const double> z);
bool supports_composite(const OperatorSpec& op, const ConstraintSpec& cs);

}  // namespace stochsplit
