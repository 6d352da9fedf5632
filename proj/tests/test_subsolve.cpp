#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "rapdb/errors.hpp"
#include "rapdb/subsolve.hpp"

using namespace rapdb;
using namespace rapdb::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 0.5||x - c||^2 written as 0.5 x'Ix - c'x + 0.5||c||^2.
SmoothObjective distance_objective(const Vector& c) {
  return quadratic_objective(DenseMatrix::Identity(c.size(), c.size()), -c, 0.5 * c.squaredNorm(),
                             1.0);
}

double value_of(const SmoothObjective& h, const Vector& x) {
  Vector g;
  return h.evaluate(x, g);
}

}  // namespace

TEST_CASE("box projection example") {
  const SmoothObjective h = distance_objective(vec({2.0, 0.0}));
  const SubsolveResult r =
      solve_strongly_convex(h, SimpleSet::uniform_box(2, -1.0, 1.0), Vector::Zero(2));
  CHECK(r.converged);
  CHECK((r.x - vec({1.0, 0.0})).norm() <= 1e-8);
  CHECK(r.residual <= 1e-9);
}

TEST_CASE("unconstrained diagonal example") {
  DenseMatrix H = DenseMatrix::Zero(2, 2);
  H(0, 0) = 1.0;
  H(1, 1) = 4.0;
  const SmoothObjective h = quadratic_objective(H, vec({-1.0, -1.0}), 0.0, 1.0);
  const SubsolveResult r = solve_strongly_convex(h, SimpleSet::free(2), vec({5.0, -3.0}));
  const Vector oracle = H.ldlt().solve(vec({1.0, 1.0}));
  CHECK(r.converged);
  CHECK((r.x - oracle).norm() <= 1e-8);
  CHECK((r.x - vec({1.0, 0.25})).norm() <= 1e-8);
}

TEST_CASE("ball example") {
  const SmoothObjective h = distance_objective(vec({2.0, 0.0}));
  const SubsolveResult r =
      solve_strongly_convex(h, SimpleSet::ball(Vector::Zero(2), 1.0), Vector::Zero(2));
  CHECK(r.converged);
  CHECK((r.x - vec({1.0, 0.0})).norm() <= 1e-8);
  // KKT with multiplier 1: x - c + 1 * x = 0.
  CHECK((r.x - vec({2.0, 0.0}) + r.x).norm() <= 1e-8);
}

TEST_CASE("objective error bound across random seeds") {
  const double tol = 1e-9;
  for (std::uint64_t s = 0; s < 50; ++s) {
    std::mt19937_64 rng(s);
    SUBCASE("box") {
      const Vector c = randn(rng, 4, 2.0);
      const SmoothObjective h = distance_objective(c);
      const SimpleSet box = SimpleSet::uniform_box(4, -1.0, 1.0);
      const SubsolveResult r = solve_strongly_convex(h, box, Vector::Zero(4), {tol});
      const Vector star = c.cwiseMax(-1.0).cwiseMin(1.0);
      const double fstar = value_of(h, star);
      const double diam = 2.0 * std::sqrt(4.0);
      CHECK(r.converged);
      CHECK(r.value - fstar <= h.strong_convexity * tol * tol / 2 + h.smoothness * tol * diam);
      CHECK(r.value - fstar >= -1e-12);
      CHECK(r.value - fstar <= r.suboptimality_bound + 1e-15);
    }
    SUBCASE("diagonal") {
      DenseMatrix H = DenseMatrix::Zero(3, 3);
      std::uniform_real_distribution<double> U(0.5, 10.0);
      for (int i = 0; i < 3; ++i) H(i, i) = U(rng);
      const Vector c = randn(rng, 3, 3.0);
      const SmoothObjective h = quadratic_objective(H, c, 0.0, H.diagonal().minCoeff());
      const SubsolveResult r = solve_strongly_convex(h, SimpleSet::free(3), randn(rng, 3), {tol});
      const Vector star = H.ldlt().solve(-c);
      const double fstar = value_of(h, star);
      // Unbounded domain: use the distance from the start as the diameter.
      const double diam = (r.x - star).norm() + tol;
      CHECK(r.converged);
      CHECK(r.value - fstar <= h.strong_convexity * tol * tol / 2 + h.smoothness * tol * diam + 1e-14);
      CHECK(r.value - fstar <= r.suboptimality_bound + 1e-14);
    }
    SUBCASE("ball") {
      const Vector c = randn(rng, 3, 2.0);
      const SmoothObjective h = distance_objective(c);
      const SimpleSet ball = SimpleSet::ball(Vector::Zero(3), 1.0);
      const SubsolveResult r = solve_strongly_convex(h, ball, Vector::Zero(3), {tol});
      const Vector star = c.norm() > 1.0 ? Vector(c / c.norm()) : c;
      const double fstar = value_of(h, star);
      CHECK(r.converged);
      CHECK(r.value - fstar <= h.strong_convexity * tol * tol / 2 + h.smoothness * tol * 2.0);
      CHECK(r.value - fstar >= -1e-12);
    }
  }
}

TEST_CASE("value history is monotone") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    DenseMatrix B(6, 6);
    for (int c = 0; c < 6; ++c) B.col(c) = randn(rng, 6);
    const DenseMatrix H = B.transpose() * B + 0.01 * DenseMatrix::Identity(6, 6);
    const SmoothObjective h = quadratic_objective(H, randn(rng, 6, 5.0), 0.0, 0.01);
    std::vector<double> hist;
    SubsolveOptions o;
    o.value_history = &hist;
    (void)solve_strongly_convex(h, SimpleSet::uniform_box(6, -1.0, 1.0), Vector::Zero(6), o);
    REQUIRE(hist.size() >= 2);
    for (std::size_t k = 1; k < hist.size(); ++k) CHECK(hist[k] <= hist[k - 1] + 1e-12);
  }
}

TEST_CASE("iteration cap returns best iterate flagged") {
  DenseMatrix H = DenseMatrix::Identity(2, 2);
  H(1, 1) = 1e4;
  const SmoothObjective h = quadratic_objective(H, vec({-1.0, -1.0}), 0.0, 1.0);
  SubsolveOptions o;
  o.max_iterations = 3;
  const SubsolveResult r = solve_strongly_convex(h, SimpleSet::free(2), vec({100.0, 100.0}), o);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
  CHECK(r.value <= value_of(h, vec({100.0, 100.0})));
}

TEST_CASE("precondition errors") {
  SmoothObjective h = distance_objective(vec({1.0, 1.0}));
  const SimpleSet box = SimpleSet::uniform_box(2, -1.0, 1.0);
  SmoothObjective flat = h;
  flat.strong_convexity = 0.0;
  CHECK_THROWS_AS(solve_strongly_convex(flat, box, Vector::Zero(2)), ConfigError);
  SmoothObjective bad = h;
  bad.smoothness = 0.5 * bad.strong_convexity;
  CHECK_THROWS_AS(solve_strongly_convex(bad, box, Vector::Zero(2)), ConfigError);
  SubsolveOptions o;
  o.tol = 0.0;
  CHECK_THROWS_AS(solve_strongly_convex(h, box, Vector::Zero(2), o), ConfigError);
}

TEST_CASE("convex solve reports a Frank-Wolfe certificate") {
  // Linear objective over the simplex: minimum at the vertex with smallest cost.
  const Vector c = vec({0.3, -0.2, 0.5});
  const SmoothObjective h = quadratic_objective(DenseMatrix::Zero(3, 3), c, 0.0, 0.0);
  const SubsolveResult r = solve_convex(h, SimpleSet::simplex(3), vec({1.0 / 3, 1.0 / 3, 1.0 / 3}));
  CHECK(r.value == doctest::Approx(-0.2).epsilon(1e-8));
  CHECK(r.value - (-0.2) <= r.suboptimality_bound + 1e-12);
  CHECK(std::isfinite(r.suboptimality_bound));

  const SubsolveResult u = solve_convex(distance_objective(vec({1.0})), SimpleSet::free(1), vec({0.0}));
  CHECK(u.suboptimality_bound == kInf);
}
