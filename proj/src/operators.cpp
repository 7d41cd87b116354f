#include "stochsplit/operators.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "stochsplit/error.hpp"

namespace stochsplit {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_dim(std::size_t expected, std::size_t got, std::string_view what) {
  if (expected != got) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": expected dimension " +
                                                  std::to_string(expected) + ", got " +
                                                  std::to_string(got));
  }
}

void require_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw Error(ErrorCode::NonPositiveGamma, "step size must be positive and finite");
}

void require_same_length(const Vector& a, const Vector& b, std::string_view what) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidSpec, std::string(what) + ": coefficient lengths differ");
}

void require_nonnegative(const Vector& v, std::string_view what) {
  for (double x : v) {
    if (!(x >= 0.0)) throw Error(ErrorCode::InvalidSpec, std::string(what) + ": coefficients must be >= 0");
  }
}

void require_finite(const Vector& v, std::string_view what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidSpec, std::string(what) + ": non-finite coefficient");
  }
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::BadAlpha, "alpha must lie in (0, 1)");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

void project_one(const WholeSpace&, std::span<const double> z, std::span<double> out) {
  std::copy(z.begin(), z.end(), out.begin());
}

void project_one(const Box& b, std::span<const double> z, std::span<double> out) {
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::clamp(z[i], b.lo[i], b.hi[i]);
}

void project_one(const Ball& b, std::span<const double> z, std::span<double> out) {
  double dist2 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) dist2 += (z[i] - b.center[i]) * (z[i] - b.center[i]);
  const double dist = std::sqrt(dist2);
  if (dist <= b.radius) {
    std::copy(z.begin(), z.end(), out.begin());
    return;
  }
  const double scale = b.radius / dist;
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = b.center[i] + scale * (z[i] - b.center[i]);
}

void project_one(const Halfspace& h, std::span<const double> z, std::span<double> out) {
  const double excess = dot(h.normal, z) - h.offset;
  const double step = excess > 0.0 ? excess / squared_norm(h.normal) : 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - step * h.normal[i];
}

void project_one(const Hyperplane& h, std::span<const double> z, std::span<double> out) {
  const double step = (dot(h.normal, z) - h.offset) / squared_norm(h.normal);
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - step * h.normal[i];
}

void project_one(const LiftedConstraint& l, std::span<const double> z, std::span<double> out) {
  out[0] = z[0];
  std::visit([&](const auto& c) { project_one(c, z.subspan(1), out.subspan(1)); }, l.inner);
}

// Coordinates where Id - proj_C can be nonzero. `any` means the residual is not
// confined to coordinate axes.
struct ResidualSupport {
  bool any = false;
  std::set<std::size_t> axes;
};

std::set<std::size_t> nonzero_axes(const Vector& v) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) out.insert(i);
  return out;
}

ResidualSupport residual_support(const BaseConstraint& cs) {
  return std::visit(Overloaded{
                        [](const WholeSpace&) { return ResidualSupport{}; },
                        [](const Box& b) {
                          ResidualSupport s;
                          for (std::size_t i = 0; i < b.lo.size(); ++i)
                            if (b.lo[i] > -kInf || b.hi[i] < kInf) s.axes.insert(i);
                          return s;
                        },
                        [](const Ball&) { return ResidualSupport{true, {}}; },
                        [](const Halfspace& h) { return ResidualSupport{false, nonzero_axes(h.normal)}; },
                        [](const Hyperplane& h) { return ResidualSupport{false, nonzero_axes(h.normal)}; },
                    },
                    cs);
}

BaseConstraint as_base(const ConstraintSpec& cs) {
  return std::visit(Overloaded{
                        [](const LiftedConstraint& l) -> BaseConstraint { return l.inner; },
                        [](const auto& c) -> BaseConstraint { return c; },
                    },
                    cs);
}

// Bisection for the root of a continuous nonincreasing g on [0, 1] with
// g(0) >= 0 >= g(1). Returns the midpoint of the final bracket.
template <class F>
double bisect_decreasing(F&& g, double tol) {
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < kMaxBisectionIterations && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = g(mid);
    if (v > 0.0) {
      lo = mid;
    } else if (v < 0.0) {
      hi = mid;
    } else {
      return mid;
    }
  }
  return 0.5 * (lo + hi);
}

void require_tol(double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::ToleranceError, "bisection tolerance must be positive");
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t dim(const CostSpec& f) {
  return std::visit([](const auto& c) { return c.c.size(); }, f);
}

std::size_t dim(const OperatorSpec& op) {
  return std::visit(Overloaded{
                        [](const DiagonalAffine& o) { return o.a.size(); },
                        [](const GradSeparableQuadratic& o) { return o.q.size(); },
                        [](const CvarAugmented& o) { return 1 + dim(o.f); },
                    },
                    op);
}

namespace {

std::size_t dim_one(const WholeSpace& c) { return c.dim; }
std::size_t dim_one(const Box& c) { return c.lo.size(); }
std::size_t dim_one(const Ball& c) { return c.center.size(); }
std::size_t dim_one(const Halfspace& c) { return c.normal.size(); }
std::size_t dim_one(const Hyperplane& c) { return c.normal.size(); }
std::size_t dim_one(const LiftedConstraint& c) {
  return 1 + std::visit([](const auto& b) { return dim_one(b); }, c.inner);
}

}  // namespace

std::size_t dim(const ConstraintSpec& cs) {
  return std::visit([](const auto& c) { return dim_one(c); }, cs);
}

std::size_t dim(const SubspaceSpec& us) {
  return std::visit([](const auto& u) { return u.dim; }, us);
}

std::string_view kind_name(const OperatorSpec& op) {
  return std::visit(Overloaded{
                        [](const DiagonalAffine&) { return std::string_view("DiagonalAffine"); },
                        [](const GradSeparableQuadratic&) { return std::string_view("GradSeparableQuadratic"); },
                        [](const CvarAugmented&) { return std::string_view("CvarAugmented"); },
                    },
                    op);
}

std::string_view kind_name(const CostSpec& f) {
  return std::visit(Overloaded{
                        [](const AffineCost&) { return std::string_view("Affine"); },
                        [](const SeparableQuadraticCost&) { return std::string_view("SeparableQuadratic"); },
                    },
                    f);
}

std::string_view kind_name(const ConstraintSpec& cs) {
  return std::visit(Overloaded{
                        [](const WholeSpace&) { return std::string_view("WholeSpace"); },
                        [](const Box&) { return std::string_view("Box"); },
                        [](const Ball&) { return std::string_view("Ball"); },
                        [](const Halfspace&) { return std::string_view("Halfspace"); },
                        [](const Hyperplane&) { return std::string_view("Hyperplane"); },
                        [](const LiftedConstraint&) { return std::string_view("Lifted"); },
                    },
                    cs);
}

std::string_view kind_name(const SubspaceSpec& us) {
  return std::visit(Overloaded{
                        [](const FullSubspace&) { return std::string_view("Full"); },
                        [](const ZeroSubspace&) { return std::string_view("Zero"); },
                        [](const CoordinateSubspace&) { return std::string_view("Coordinates"); },
                    },
                    us);
}

// ---------------------------------------------------------------------------

void validate(const CostSpec& f) {
  std::visit(Overloaded{
                 [](const AffineCost& c) {
                   require_finite(c.c, "Affine");
                   if (!std::isfinite(c.r)) throw Error(ErrorCode::InvalidSpec, "Affine: non-finite offset");
                 },
                 [](const SeparableQuadraticCost& c) {
                   require_same_length(c.q, c.c, "SeparableQuadratic");
                   require_finite(c.q, "SeparableQuadratic");
                   require_finite(c.c, "SeparableQuadratic");
                   require_nonnegative(c.q, "SeparableQuadratic");
                   if (!std::isfinite(c.r))
                     throw Error(ErrorCode::InvalidSpec, "SeparableQuadratic: non-finite offset");
                 },
             },
             f);
}

void validate(const OperatorSpec& op) {
  std::visit(Overloaded{
                 [](const DiagonalAffine& o) {
                   require_same_length(o.a, o.b, "DiagonalAffine");
                   require_finite(o.a, "DiagonalAffine");
                   require_finite(o.b, "DiagonalAffine");
                   require_nonnegative(o.a, "DiagonalAffine");
                 },
                 [](const GradSeparableQuadratic& o) {
                   require_same_length(o.q, o.c, "GradSeparableQuadratic");
                   require_finite(o.q, "GradSeparableQuadratic");
                   require_finite(o.c, "GradSeparableQuadratic");
                   require_nonnegative(o.q, "GradSeparableQuadratic");
                 },
                 [](const CvarAugmented& o) {
                   require_alpha(o.alpha);
                   validate(o.f);
                 },
             },
             op);
}

namespace {

void validate_base(const BaseConstraint& cs) {
  std::visit(Overloaded{
                 [](const WholeSpace&) {},
                 [](const Box& b) {
                   require_same_length(b.lo, b.hi, "Box");
                   for (std::size_t i = 0; i < b.lo.size(); ++i) {
                     if (std::isnan(b.lo[i]) || std::isnan(b.hi[i]) || b.lo[i] > b.hi[i])
                       throw Error(ErrorCode::InvalidSpec, "Box: lo must not exceed hi");
                   }
                 },
                 [](const Ball& b) {
                   require_finite(b.center, "Ball");
                   if (!(b.radius > 0.0) || !std::isfinite(b.radius))
                     throw Error(ErrorCode::InvalidSpec, "Ball: radius must be positive");
                 },
                 [](const Halfspace& h) {
                   require_finite(h.normal, "Halfspace");
                   if (squared_norm(h.normal) == 0.0) throw Error(ErrorCode::InvalidSpec, "Halfspace: zero normal");
                   if (!std::isfinite(h.offset)) throw Error(ErrorCode::InvalidSpec, "Halfspace: non-finite offset");
                 },
                 [](const Hyperplane& h) {
                   require_finite(h.normal, "Hyperplane");
                   if (squared_norm(h.normal) == 0.0) throw Error(ErrorCode::InvalidSpec, "Hyperplane: zero normal");
                   if (!std::isfinite(h.offset)) throw Error(ErrorCode::InvalidSpec, "Hyperplane: non-finite offset");
                 },
             },
             cs);
}

}  // namespace

void validate(const ConstraintSpec& cs) { validate_base(as_base(cs)); }

void validate(const SubspaceSpec& us) {
  if (const auto* c = std::get_if<CoordinateSubspace>(&us)) {
    for (std::size_t i : c->indices) {
      if (i >= c->dim)
        throw Error(ErrorCode::InvalidSpec, "Coordinates: index " + std::to_string(i) + " out of range");
    }
  }
}

// ---------------------------------------------------------------------------

double evaluate(const CostSpec& f, std::span<const double> x) {
  require_dim(dim(f), x.size(), "cost");
  return std::visit(Overloaded{
                        [&](const AffineCost& c) { return dot(c.c, x) + c.r; },
                        [&](const SeparableQuadraticCost& c) {
                          double s = 0.0;
                          for (std::size_t i = 0; i < x.size(); ++i) s += c.q[i] * (x[i] - c.c[i]) * (x[i] - c.c[i]);
                          return 0.5 * s + c.r;
                        },
                    },
                    f);
}

Vector prox(const CostSpec& f, double kappa, std::span<const double> x) {
  require_dim(dim(f), x.size(), "cost");
  Vector p(x.begin(), x.end());
  std::visit(Overloaded{
                 [&](const AffineCost& c) {
                   for (std::size_t i = 0; i < p.size(); ++i) p[i] -= kappa * c.c[i];
                 },
                 [&](const SeparableQuadraticCost& c) {
                   for (std::size_t i = 0; i < p.size(); ++i)
                     p[i] = (x[i] + kappa * c.q[i] * c.c[i]) / (1.0 + kappa * c.q[i]);
                 },
             },
             f);
  return p;
}

Vector apply_operator(const OperatorSpec& op, std::span<const double> x) {
  require_dim(dim(op), x.size(), "operator");
  return std::visit(Overloaded{
                        [&](const DiagonalAffine& o) {
                          Vector out(x.size());
                          for (std::size_t i = 0; i < x.size(); ++i) out[i] = o.a[i] * x[i] + o.b[i];
                          return out;
                        },
                        [&](const GradSeparableQuadratic& o) {
                          Vector out(x.size());
                          for (std::size_t i = 0; i < x.size(); ++i) out[i] = o.q[i] * (x[i] - o.c[i]);
                          return out;
                        },
                        [](const CvarAugmented&) -> Vector {
                          throw Error(ErrorCode::UnsupportedComposite, "CvarAugmented is set-valued");
                        },
                    },
                    op);
}

void resolvent_into(const OperatorSpec& op, double gamma, std::span<const double> z, std::span<double> out,
                    double tol) {
  require_gamma(gamma);
  require_dim(dim(op), z.size(), "resolvent");
  require_dim(z.size(), out.size(), "resolvent output");
  std::visit(Overloaded{
                 [&](const DiagonalAffine& o) {
                   for (std::size_t i = 0; i < z.size(); ++i) out[i] = (z[i] - gamma * o.b[i]) / (1.0 + gamma * o.a[i]);
                 },
                 [&](const GradSeparableQuadratic& o) {
                   for (std::size_t i = 0; i < z.size(); ++i)
                     out[i] = (z[i] + gamma * o.q[i] * o.c[i]) / (1.0 + gamma * o.q[i]);
                 },
                 [&](const CvarAugmented& o) {
                   const auto r = prox_cvar_augmented(o.f, o.alpha, gamma, z[0], z.subspan(1), tol);
                   out[0] = r.q;
                   std::copy(r.p.begin(), r.p.end(), out.begin() + 1);
                 },
             },
             op);
}

Vector resolvent(const OperatorSpec& op, double gamma, std::span<const double> z, double tol) {
  Vector p(z.size());
  resolvent_into(op, gamma, z, p, tol);
  return p;
}

void project_constraint_into(const ConstraintSpec& cs, std::span<const double> z, std::span<double> out) {
  require_dim(dim(cs), z.size(), "constraint");
  require_dim(z.size(), out.size(), "constraint output");
  std::visit([&](const auto& c) { project_one(c, z, out); }, cs);
}

Vector project_constraint(const ConstraintSpec& cs, std::span<const double> z) {
  Vector p(z.size());
  project_constraint_into(cs, z, p);
  return p;
}

void project_subspace_into(const SubspaceSpec& us, std::span<const double> z, std::span<double> out) {
  require_dim(dim(us), z.size(), "subspace");
  require_dim(z.size(), out.size(), "subspace output");
  std::visit(Overloaded{
                 [&](const FullSubspace&) { std::copy(z.begin(), z.end(), out.begin()); },
                 [&](const ZeroSubspace&) { std::fill(out.begin(), out.end(), 0.0); },
                 [&](const CoordinateSubspace& c) {
                   std::fill(out.begin(), out.end(), 0.0);
                   for (std::size_t i : c.indices) out[i] = z[i];
                 },
             },
             us);
}

Vector project_subspace(const SubspaceSpec& us, std::span<const double> z) {
  Vector p(z.size());
  project_subspace_into(us, z, p);
  return p;
}

bool validate_range_condition(const ConstraintSpec& cs, const SubspaceSpec& us) {
  if (std::holds_alternative<FullSubspace>(us)) return true;

  ResidualSupport support;
  if (const auto* lifted = std::get_if<LiftedConstraint>(&cs)) {
    const auto inner = residual_support(lifted->inner);
    support.any = inner.any;
    for (std::size_t i : inner.axes) support.axes.insert(i + 1);
  } else {
    support = residual_support(as_base(cs));
  }

  if (std::holds_alternative<ZeroSubspace>(us)) return !support.any && support.axes.empty();
  const auto& coords = std::get<CoordinateSubspace>(us);
  if (support.any) return false;
  const std::set<std::size_t> allowed(coords.indices.begin(), coords.indices.end());
  return std::includes(allowed.begin(), allowed.end(), support.axes.begin(), support.axes.end());
}

// ---------------------------------------------------------------------------

ProxMaxResult prox_max_nonneg_detailed(const CostSpec& f, double gamma, std::span<const double> x,
                                       double tol) {
  require_gamma(gamma);
  require_tol(tol);
  if (evaluate(f, x) < 0.0) return {Vector(x.begin(), x.end()), ProxBranch::Identity, 0.0};

  auto full = prox(f, gamma, x);
  if (evaluate(f, full) > 0.0) return {std::move(full), ProxBranch::FullStep, 1.0};

  // theta -> f(prox_{theta gamma f} x) decreases from f(x) >= 0 to a value <= 0.
  const double theta = bisect_decreasing([&](double t) { return evaluate(f, prox(f, t * gamma, x)); }, tol);
  return {prox(f, theta * gamma, x), ProxBranch::Bisection, theta};
}

Vector prox_max_nonneg(const CostSpec& f, double gamma, std::span<const double> x, double tol) {
  return prox_max_nonneg_detailed(f, gamma, x, tol).point;
}

CvarProxResult prox_cvar_augmented(const CostSpec& f, double alpha, double gamma, double y,
                                   std::span<const double> x, double tol) {
  require_gamma(gamma);
  require_alpha(alpha);
  require_tol(tol);
  const double tau = gamma / (1.0 - alpha);

  if (evaluate(f, x) - y + gamma < 0.0) return {y - gamma, Vector(x.begin(), x.end()), ProxBranch::Identity, 0.0};

  auto full = prox(f, tau, x);
  if (evaluate(f, full) - y > tau - gamma) return {y - gamma + tau, std::move(full), ProxBranch::FullStep, 1.0};

  const double theta = bisect_decreasing(
      [&](double t) { return evaluate(f, prox(f, t * tau, x)) - y + gamma - t * tau; }, tol);
  return {y - gamma + theta * tau, prox(f, theta * tau, x), ProxBranch::Bisection, theta};
}

// ---------------------------------------------------------------------------

bool supports_composite(const OperatorSpec& op, const ConstraintSpec& cs) {
  const bool separable_op =
      std::holds_alternative<DiagonalAffine>(op) || std::holds_alternative<GradSeparableQuadratic>(op);
  const bool separable_set = std::holds_alternative<Box>(cs) || std::holds_alternative<WholeSpace>(cs);
  return separable_op && separable_set;
}

Vector composite_resolvent(const OperatorSpec& op, const ConstraintSpec& cs, double gamma,
                           std::span<const double> z) {
  if (!supports_composite(op, cs)) {
    throw Error(ErrorCode::UnsupportedComposite, "no closed form for " + std::string(kind_name(op)) +
                                                     " with " + std::string(kind_name(cs)));
  }
  require_dim(dim(op), z.size(), "composite resolvent");
  require_dim(dim(cs), z.size(), "composite resolvent");
  // Each coordinate is a 1-D monotone inclusion over an interval, so clamping
  // the unconstrained resolvent is exact.
  auto p = resolvent(op, gamma, z);
  if (const auto* box = std::get_if<Box>(&cs)) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::clamp(p[i], box->lo[i], box->hi[i]);
  }
  return p;
}

}  // namespace stochsplit
