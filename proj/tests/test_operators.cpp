#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "stochsplit/error.hpp"
#include "stochsplit/operators.hpp"
#include "support.hpp"

using namespace stochsplit;
using doctest::Approx;
using testing::error_code;

namespace {

// Feasible point of a base constraint by rejection / explicit construction.
Vector feasible_point(testing::Rng& rng, const ConstraintSpec& cs, std::size_t d) {
  if (const auto* b = std::get_if<Box>(&cs)) {
    Vector v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = rng.uniform(std::max(b->lo[i], -5.0), std::min(b->hi[i], 5.0));
    return v;
  }
  if (const auto* ball = std::get_if<Ball>(&cs)) {
    while (true) {
      auto v = rng.vec(d, -1.0, 1.0);
      if (testing::dot(v, v) <= 1.0) {
        for (std::size_t i = 0; i < d; ++i) v[i] = ball->center[i] + ball->radius * v[i];
        return v;
      }
    }
  }
  if (const auto* h = std::get_if<Halfspace>(&cs)) {
    // Slide a random point along the normal until it is strictly inside.
    auto v = rng.vec(d, -3.0, 3.0);
    const double excess = testing::dot(h->normal, v) - h->offset;
    if (excess > 0.0) {
      const double shift = (excess + rng.uniform(0.0, 1.0)) / testing::dot(h->normal, h->normal);
      for (std::size_t i = 0; i < d; ++i) v[i] -= shift * h->normal[i];
    }
    return v;
  }
  if (const auto* h = std::get_if<Hyperplane>(&cs)) {
    auto v = rng.vec(d, -3.0, 3.0);
    const double shift = (h->offset - testing::dot(h->normal, v)) / testing::dot(h->normal, h->normal);
    for (std::size_t i = 0; i < d; ++i) v[i] += shift * h->normal[i];
    return v;
  }
  return rng.vec(d, -3.0, 3.0);
}

bool is_feasible(const ConstraintSpec& cs, const Vector& p, double tol) {
  if (const auto* b = std::get_if<Box>(&cs)) {
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] < b->lo[i] - tol || p[i] > b->hi[i] + tol) return false;
    return true;
  }
  if (const auto* ball = std::get_if<Ball>(&cs)) return testing::dist(p, ball->center) <= ball->radius + tol;
  if (const auto* h = std::get_if<Halfspace>(&cs)) return testing::dot(h->normal, p) <= h->offset + tol;
  if (const auto* h = std::get_if<Hyperplane>(&cs)) return std::abs(testing::dot(h->normal, p) - h->offset) <= tol;
  return true;
}

BaseConstraint random_base_constraint(testing::Rng& rng, std::size_t d) {
  switch (rng.index(0, 4)) {
    case 0:
      return WholeSpace{d};
    case 1: {
      auto lo = rng.vec(d, -2.0, 0.0);
      auto hi = rng.vec(d, 0.0, 2.0);
      if (rng.coin()) lo[0] = -kInf;
      if (rng.coin()) hi[d - 1] = kInf;
      return Box{lo, hi};
    }
    case 2:
      return Ball{rng.vec(d, -1.0, 1.0), rng.uniform(0.1, 2.0)};
    case 3:
      return Halfspace{rng.vec(d, -1.0, 1.0), rng.uniform(-1.0, 1.0)};
    default:
      return Hyperplane{rng.vec(d, -1.0, 1.0), rng.uniform(-1.0, 1.0)};
  }
}

ConstraintSpec random_any_constraint(testing::Rng& rng, std::size_t d) {
  return std::visit([](const auto& c) -> ConstraintSpec { return c; }, random_base_constraint(rng, d));
}

CostSpec random_cost(testing::Rng& rng, std::size_t d) {
  if (rng.coin()) return AffineCost{rng.vec(d, -2.0, 2.0), rng.uniform(-1.0, 1.0)};
  return SeparableQuadraticCost{rng.vec(d, 0.0, 2.0), rng.vec(d, -2.0, 2.0), rng.uniform(-2.0, 1.0)};
}

}  // namespace

TEST_CASE("resolvent closed forms") {
  CHECK(resolvent(DiagonalAffine{{0, 0}, {0, 0}}, 3.0, Vector{1.5, -2.0}) == Vector{1.5, -2.0});
  CHECK(resolvent(DiagonalAffine{{1}, {1}}, 1.0, Vector{3}) == Vector{1});
  CHECK(resolvent(GradSeparableQuadratic{{2}, {0}}, 0.5, Vector{4}) == Vector{2});
}

TEST_CASE("resolvent errors") {
  CHECK(error_code([] { resolvent(DiagonalAffine{{1}, {1}}, 0.0, Vector{1}); }) == ErrorCode::NonPositiveGamma);
  CHECK(error_code([] { resolvent(DiagonalAffine{{1}, {1}}, 1.0, Vector{1, 2}); }) == ErrorCode::DimensionMismatch);
  CHECK(error_code([] { validate(OperatorSpec{DiagonalAffine{{-1}, {0}}}); }) == ErrorCode::InvalidSpec);
  CHECK(error_code([] { validate(OperatorSpec{GradSeparableQuadratic{{1, 1}, {0}}}); }) == ErrorCode::InvalidSpec);
  CHECK(error_code([] { validate(OperatorSpec{CvarAugmented{AffineCost{{1}, 0}, 1.0}}); }) == ErrorCode::BadAlpha);
  CHECK(error_code([] { validate(CostSpec{SeparableQuadraticCost{{-1}, {0}, 0}}); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("resolvents are firmly nonexpansive and satisfy the resolvent identity") {
  testing::Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = rng.index(1, 4);
    const double gamma = rng.uniform(0.05, 5.0);
    OperatorSpec op = rng.coin() ? OperatorSpec{DiagonalAffine{rng.vec(d, 0.0, 3.0), rng.vec(d, -2.0, 2.0)}}
                                 : OperatorSpec{GradSeparableQuadratic{rng.vec(d, 0.0, 3.0), rng.vec(d, -2.0, 2.0)}};
    const auto z = rng.vec(d, -5.0, 5.0);
    const auto w = rng.vec(d, -5.0, 5.0);
    const auto jz = resolvent(op, gamma, z);
    const auto jw = resolvent(op, gamma, w);
    Vector dz(d), dj(d);
    for (std::size_t i = 0; i < d; ++i) {
      dz[i] = z[i] - w[i];
      dj[i] = jz[i] - jw[i];
    }
    CHECK(testing::dot(dj, dj) <= testing::dot(dz, dj) + 1e-10);

    const auto a = apply_operator(op, jz);
    for (std::size_t i = 0; i < d; ++i) CHECK(jz[i] + gamma * a[i] == Approx(z[i]).epsilon(1e-10));
  }
}

TEST_CASE("CvarAugmented resolvent is firmly nonexpansive") {
  testing::Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = rng.index(1, 3);
    const OperatorSpec op = CvarAugmented{random_cost(rng, d), rng.uniform(0.05, 0.95)};
    const double gamma = rng.uniform(0.1, 3.0);
    const auto z = rng.vec(d + 1, -3.0, 3.0);
    const auto w = rng.vec(d + 1, -3.0, 3.0);
    const auto jz = resolvent(op, gamma, z);
    const auto jw = resolvent(op, gamma, w);
    Vector dz(d + 1), dj(d + 1);
    for (std::size_t i = 0; i <= d; ++i) {
      dz[i] = z[i] - w[i];
      dj[i] = jz[i] - jw[i];
    }
    CHECK(testing::dot(dj, dj) <= testing::dot(dz, dj) + 1e-9);
    CHECK(error_code([&] { apply_operator(op, z); }) == ErrorCode::UnsupportedComposite);
  }
}

TEST_CASE("constraint projections") {
  CHECK(project_constraint(Box{{0, 0}, {1, 1}}, Vector{2, -1}) == Vector{1, 0});
  const auto ball = project_constraint(Ball{{0, 0}, 1.0}, Vector{3, 4});
  CHECK(ball[0] == Approx(0.6));
  CHECK(ball[1] == Approx(0.8));
  CHECK(project_constraint(Halfspace{{1, 0}, 0.0}, Vector{-1, 5}) == Vector{-1, 5});
  CHECK(project_constraint(Halfspace{{1, 0}, 0.0}, Vector{2, 5}) == Vector{0, 5});
  CHECK(project_constraint(Hyperplane{{0, 2}, 2.0}, Vector{7, 5}) == Vector{7, 1});
  CHECK(project_constraint(WholeSpace{2}, Vector{7, 5}) == Vector{7, 5});
  CHECK(project_constraint(Box{{-kInf}, {kInf}}, Vector{1e300}) == Vector{1e300});
  CHECK(error_code([] { project_constraint(Box{{0}, {1}}, Vector{1, 2}); }) == ErrorCode::DimensionMismatch);
  CHECK(error_code([] { validate(ConstraintSpec{Box{{1}, {0}}}); }) == ErrorCode::InvalidSpec);
  CHECK(error_code([] { validate(ConstraintSpec{Ball{{0}, 0.0}}); }) == ErrorCode::InvalidSpec);
  CHECK(error_code([] { validate(ConstraintSpec{Halfspace{{0, 0}, 1.0}}); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("lifted constraint leaves the first coordinate alone") {
  testing::Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = rng.index(1, 3);
    const auto base = random_base_constraint(rng, d);
    const auto inner = std::visit([](const auto& c) -> ConstraintSpec { return c; }, base);
    const ConstraintSpec lifted = LiftedConstraint{base};
    const auto z = rng.vec(d + 1, -5.0, 5.0);
    const auto p = project_constraint(lifted, z);
    CHECK(p[0] == z[0]);
    const auto tail = project_constraint(inner, Vector(z.begin() + 1, z.end()));
    for (std::size_t i = 0; i < d; ++i) CHECK(p[i + 1] == tail[i]);
    CHECK(dim(lifted) == d + 1);
  }
}

TEST_CASE("projections are idempotent and satisfy the variational inequality") {
  testing::Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = rng.index(1, 4);
    const auto cs = random_any_constraint(rng, d);
    const auto z = rng.vec(d, -6.0, 6.0);
    const auto p = project_constraint(cs, z);
    CHECK(is_feasible(cs, p, 1e-10));
    const auto pp = project_constraint(cs, p);
    CHECK(testing::dist(p, pp) <= 1e-10 * (1.0 + testing::dist(p, Vector(d, 0.0))));
    for (int k = 0; k < 5; ++k) {
      const auto c = feasible_point(rng, cs, d);
      Vector zp(d), cp(d);
      for (std::size_t i = 0; i < d; ++i) {
        zp[i] = z[i] - p[i];
        cp[i] = c[i] - p[i];
      }
      CHECK(testing::dot(zp, cp) <= 1e-10);
    }
  }
}

TEST_CASE("subspace projections") {
  CHECK(project_subspace(FullSubspace{2}, Vector{1, 2}) == Vector{1, 2});
  CHECK(project_subspace(ZeroSubspace{2}, Vector{1, 2}) == Vector{0, 0});
  CHECK(project_subspace(CoordinateSubspace{2, {0}}, Vector{1, 2}) == Vector{1, 0});
  CHECK(error_code([] { validate(SubspaceSpec{CoordinateSubspace{2, {2}}}); }) == ErrorCode::InvalidSpec);
  CHECK(error_code([] { project_subspace(FullSubspace{2}, Vector{1}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("range condition catalog") {
  CHECK(validate_range_condition(Ball{{0, 0}, 1.0}, FullSubspace{2}));
  CHECK(validate_range_condition(Box{{0, 0}, {1, 1}}, FullSubspace{2}));
  CHECK(validate_range_condition(WholeSpace{2}, ZeroSubspace{2}));
  CHECK_FALSE(validate_range_condition(Box{{0, 0}, {1, 1}}, ZeroSubspace{2}));
  CHECK(validate_range_condition(Box{{0, -kInf}, {1, kInf}}, CoordinateSubspace{2, {0}}));
  CHECK_FALSE(validate_range_condition(Box{{0, 0}, {1, 1}}, CoordinateSubspace{2, {0}}));
  CHECK(validate_range_condition(Halfspace{{0, 3}, 1.0}, CoordinateSubspace{2, {1}}));
  CHECK_FALSE(validate_range_condition(Hyperplane{{1, 3}, 1.0}, CoordinateSubspace{2, {1}}));
  CHECK_FALSE(validate_range_condition(Ball{{0, 0}, 1.0}, CoordinateSubspace{2, {0, 1}}));
  CHECK(validate_range_condition(LiftedConstraint{Box{{0}, {1}}}, CoordinateSubspace{2, {1}}));
  CHECK_FALSE(validate_range_condition(LiftedConstraint{Box{{0}, {1}}}, CoordinateSubspace{2, {0}}));
}

TEST_CASE("range condition is sound on random pairs") {
  testing::Rng rng(123);
  int certified = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = rng.index(1, 3);
    const auto cs = random_any_constraint(rng, d);
    SubspaceSpec us = FullSubspace{d};
    switch (rng.index(0, 2)) {
      case 0:
        us = ZeroSubspace{d};
        break;
      case 1: {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < d; ++i)
          if (rng.coin()) idx.push_back(i);
        us = CoordinateSubspace{d, idx};
        break;
      }
      default:
        break;
    }
    if (!validate_range_condition(cs, us)) continue;
    ++certified;
    for (int k = 0; k < 10; ++k) {
      const auto z = rng.vec(d, -5.0, 5.0);
      const auto p = project_constraint(cs, z);
      Vector r(d);
      for (std::size_t i = 0; i < d; ++i) r[i] = z[i] - p[i];
      CHECK(testing::dist(project_subspace(us, r), r) <= 1e-12);
    }
  }
  CHECK(certified > 100);
}

TEST_CASE("prox of gamma max{f, 0}: three cases") {
  const CostSpec f = AffineCost{{1}, -1};
  auto r = prox_max_nonneg_detailed(f, 1.0, Vector{0.5});
  CHECK(r.branch == ProxBranch::Identity);
  CHECK(r.point[0] == 0.5);

  r = prox_max_nonneg_detailed(f, 1.0, Vector{3});
  CHECK(r.branch == ProxBranch::FullStep);
  CHECK(r.point[0] == Approx(2.0));

  r = prox_max_nonneg_detailed(f, 1.0, Vector{1.5});
  CHECK(r.branch == ProxBranch::Bisection);
  CHECK(r.theta == Approx(0.5).epsilon(1e-10));
  CHECK(r.point[0] == Approx(1.0).epsilon(1e-10));

  CHECK(error_code([&] { prox_max_nonneg(f, 0.0, Vector{1}); }) == ErrorCode::NonPositiveGamma);
  CHECK(error_code([&] { prox_max_nonneg(f, 1.0, Vector{1}, 0.0); }) == ErrorCode::ToleranceError);
}

TEST_CASE("prox max: boundary f(x) = 0 returns x") {
  const CostSpec f = SeparableQuadraticCost{{2}, {1}, -1};  // f(0) = 0
  const auto p = prox_max_nonneg(f, 0.7, Vector{0.0});
  CHECK(std::abs(p[0]) <= 1e-11);
}

TEST_CASE("Lemma 1 cases are mutually exclusive") {
  testing::Rng rng(4242);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = rng.index(1, 3);
    const auto f = random_cost(rng, d);
    const double gamma = rng.uniform(0.05, 3.0);
    const auto x = rng.vec(d, -3.0, 3.0);
    const bool case_i = evaluate(f, x) < 0.0;
    const bool case_ii = evaluate(f, prox(f, gamma, x)) > 0.0;
    CHECK_FALSE((case_i && case_ii));
    const auto r = prox_max_nonneg_detailed(f, gamma, x);
    if (case_i) CHECK(r.branch == ProxBranch::Identity);
    else if (case_ii) CHECK(r.branch == ProxBranch::FullStep);
    else CHECK(r.branch == ProxBranch::Bisection);
  }
}

TEST_CASE("prox max minimizes its objective") {
  // Variational check: the prox point beats random perturbations.
  testing::Rng rng(808);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = rng.index(1, 3);
    const auto f = random_cost(rng, d);
    const double gamma = rng.uniform(0.1, 3.0);
    const auto x = rng.vec(d, -3.0, 3.0);
    const auto p = prox_max_nonneg(f, gamma, x);
    const auto phi = [&](const Vector& y) {
      return gamma * std::max(evaluate(f, y), 0.0) + 0.5 * testing::dist(y, x) * testing::dist(y, x);
    };
    const double best = phi(p);
    for (int k = 0; k < 20; ++k) {
      auto y = p;
      for (auto& v : y) v += rng.uniform(-1e-3, 1e-3);
      CHECK(best <= phi(y) + 1e-12);
    }
  }
}

TEST_CASE("CVaR-augmented prox: three cases") {
  const CostSpec f = AffineCost{{1}, 0};
  auto r = prox_cvar_augmented(f, 0.5, 1.0, 5.0, Vector{1});
  CHECK(r.branch == ProxBranch::Identity);
  CHECK(r.q == Approx(4.0));
  CHECK(r.p[0] == Approx(1.0));

  r = prox_cvar_augmented(f, 0.5, 1.0, -3.0, Vector{1});
  CHECK(r.branch == ProxBranch::FullStep);
  CHECK(r.q == Approx(-2.0));
  CHECK(r.p[0] == Approx(-1.0));

  r = prox_cvar_augmented(f, 0.5, 1.0, 0.0, Vector{1});
  CHECK(r.branch == ProxBranch::Bisection);
  CHECK(r.theta == Approx(0.5).epsilon(1e-10));
  CHECK(std::abs(r.q) <= 1e-10);
  CHECK(std::abs(r.p[0]) <= 1e-10);

  CHECK(error_code([&] { prox_cvar_augmented(f, 1.0, 1.0, 0.0, Vector{1}); }) == ErrorCode::BadAlpha);
  CHECK(error_code([&] { prox_cvar_augmented(f, 0.5, -1.0, 0.0, Vector{1}); }) == ErrorCode::NonPositiveGamma);
}

TEST_CASE("CVaR prox agrees with the lifted Lemma 1 prox on affine costs") {
  // gamma y' + tau max{f(x') - y', 0}: shifting y by -gamma removes the linear
  // term, and f(x') - y' is again affine, so the Lemma 1 prox applies in R^{1+d}.
  testing::Rng rng(200);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = rng.index(1, 3);
    const auto c = rng.vec(d, -2.0, 2.0);
    const double r0 = rng.uniform(-1.0, 1.0);
    const double alpha = rng.uniform(0.05, 0.95);
    const double gamma = rng.uniform(0.1, 2.0);
    const double tau = gamma / (1.0 - alpha);
    const double y = rng.uniform(-3.0, 3.0);
    const auto x = rng.vec(d, -3.0, 3.0);

    const auto got = prox_cvar_augmented(AffineCost{c, r0}, alpha, gamma, y, x);

    Vector lifted_c{-1.0};
    lifted_c.insert(lifted_c.end(), c.begin(), c.end());
    Vector z{y - gamma};
    z.insert(z.end(), x.begin(), x.end());
    const auto ref = prox_max_nonneg(AffineCost{lifted_c, r0}, tau, z);

    CHECK(std::abs(got.q - ref[0]) <= 1e-8);
    for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(got.p[i] - ref[i + 1]) <= 1e-8);
  }
}

TEST_CASE("CVaR prox cases are mutually exclusive") {
  testing::Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = rng.index(1, 2);
    const auto f = random_cost(rng, d);
    const double alpha = rng.uniform(0.05, 0.95);
    const double gamma = rng.uniform(0.1, 2.0);
    const double tau = gamma / (1.0 - alpha);
    const double y = rng.uniform(-3.0, 3.0);
    const auto x = rng.vec(d, -3.0, 3.0);
    const bool case_i = evaluate(f, x) - y + gamma < 0.0;
    const bool case_ii = evaluate(f, prox(f, tau, x)) - y > tau - gamma;
    CHECK_FALSE((case_i && case_ii));
  }
}

TEST_CASE("composite resolvent") {
  const ConstraintSpec box = Box{{0}, {1}};
  CHECK(composite_resolvent(DiagonalAffine{{0}, {0}}, box, 1.0, Vector{3}) == Vector{1});
  CHECK(composite_resolvent(DiagonalAffine{{1}, {1}}, box, 1.0, Vector{3}) == Vector{1});
  CHECK(composite_resolvent(DiagonalAffine{{1}, {0}}, box, 1.0, Vector{-4}) == Vector{0});
  CHECK(composite_resolvent(GradSeparableQuadratic{{1}, {2}}, WholeSpace{1}, 1.0, Vector{0}) == Vector{1});
  CHECK(error_code([] {
          composite_resolvent(GradSeparableQuadratic{{1, 1}, {2, 2}}, Ball{{0, 0}, 1.0}, 1.0, Vector{0, 0});
        }) == ErrorCode::UnsupportedComposite);
  CHECK(error_code([] {
          composite_resolvent(CvarAugmented{AffineCost{{1}, 0}, 0.5}, WholeSpace{2}, 1.0, Vector{0, 0});
        }) == ErrorCode::UnsupportedComposite);
  CHECK_FALSE(supports_composite(DiagonalAffine{{1}, {1}}, Halfspace{{1}, 0}));
  CHECK(supports_composite(DiagonalAffine{{1}, {1}}, box));
}

TEST_CASE("composite resolvent solves the constrained inclusion") {
  testing::Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = rng.index(1, 4);
    const OperatorSpec op = testing::random_operator(rng, d);
    const Box box{rng.vec(d, -2.0, 0.0), rng.vec(d, 0.0, 2.0)};
    const double gamma = rng.uniform(0.1, 3.0);
    const auto z = rng.vec(d, -5.0, 5.0);
    const auto p = composite_resolvent(op, box, gamma, z);
    CHECK(is_feasible(box, p, 0.0));
    const auto a = apply_operator(op, p);
    for (int k = 0; k < 5; ++k) {
      const auto c = feasible_point(rng, box, d);
      double v = 0.0;
      for (std::size_t i = 0; i < d; ++i) v += (z[i] - p[i] - gamma * a[i]) * (c[i] - p[i]);
      CHECK(v <= 1e-10);
    }
  }
}
