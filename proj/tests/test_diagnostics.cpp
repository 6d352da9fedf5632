#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "rapdb/errors.hpp"
#include "rapdb/instances.hpp"
#include "rapdb/restart.hpp"

using namespace rapdb;
using namespace rapdb::testing;

namespace {

// g(x) = r (constant) over the given cone, f = 0.5||x||^2 on R.
ProblemInstance constant_constraint(const Vector& r, Cone cone) {
  ProblemData d;
  d.n = 1;
  d.m = r.size();
  d.p = 0;
  d.Q.push_back(Matrix::from_dense(DenseMatrix::Identity(1, 1)));
  d.q.push_back(Vector::Zero(1));
  for (Eigen::Index i = 0; i < d.m; ++i) {
    d.Q.push_back(Matrix::zero(1, 1));
    d.q.push_back(Vector::Zero(1));
  }
  d.r = Vector(d.m + 1);
  d.r(0) = 0.0;
  d.r.tail(d.m) = r;
  d.A = DenseMatrix(0, 1);
  d.b = Vector(0);
  d.primal_set = SimpleSet::free(1);
  d.cone = std::move(cone);
  return ProblemInstance(std::move(d));
}

Iterate random_near(std::mt19937_64& rng, const ProblemInstance& inst, const Iterate& c, double rad) {
  Iterate z;
  Vector dir(inst.n() + inst.p() + inst.m());
  std::normal_distribution<double> N;
  for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = N(rng);
  dir *= rad * std::uniform_real_distribution<double>(0.0, 1.0)(rng) / dir.norm();
  z.x = project_set(inst.primal_set(), c.x + dir.head(inst.n()));
  z.v = c.v + dir.segment(inst.n(), inst.p());
  z.lam = c.lam + dir.tail(inst.m());
  inst.project_dual(DualBall::unbounded(), z.v, z.lam);
  return z;
}

}  // namespace

TEST_CASE("KKT residual examples") {
  const AnalyticCase ball = analytic_ball();
  const Metrics m = kkt_residual(ball.instance, ball.solution);
  CHECK(m.kkt_residual <= 1e-9);
  CHECK(m.infeas <= 1e-12);
  CHECK(m.kkt_residual ==
        doctest::Approx(m.stationarity + m.primal_eq + m.complementarity).epsilon(1e-15));

  // Free set, lam = 0, feasible interior point: residual is ||grad f||.
  ProblemData d;
  d.n = 2;
  d.m = 1;
  d.p = 0;
  d.Q = {Matrix::from_dense(DenseMatrix::Identity(2, 2)),
         Matrix::from_dense(DenseMatrix::Identity(2, 2))};
  d.q = {vec({1.0, -2.0}), Vector::Zero(2)};
  d.r = vec({0.0, -10.0});
  d.A = DenseMatrix(0, 2);
  d.b = Vector(0);
  d.primal_set = SimpleSet::free(2);
  d.cone = Cone::nonneg(1);
  const ProblemInstance inst(std::move(d));
  const Vector x = vec({0.5, 0.25});
  const Metrics mi = kkt_residual(inst, Iterate{x, Vector(0), vec({0.0})});
  CHECK(mi.kkt_residual == doctest::Approx((x + vec({1.0, -2.0})).norm()).epsilon(1e-14));
  CHECK(mi.complementarity == 0.0);
}

TEST_CASE("orthant complementarity") {
  CHECK(conic_complementarity(Cone::nonneg(2), vec({1.0, 0.0}), vec({0.0, -2.0})) == 0.0);
  CHECK(conic_complementarity(Cone::nonneg(2), vec({1.0, 0.0}), vec({-0.5, -2.0})) ==
        doctest::Approx(0.5));
  CHECK(conic_complementarity(Cone::nonneg(1), vec({0.0}), vec({0.3})) == doctest::Approx(0.3));
}

TEST_CASE("SOC complementarity vanishes on complementary pairs") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    // lam on the boundary ray (1, u), g on the opposite ray -s (1, -u).
    Vector u = randn(rng, 2);
    u.normalize();
    const double a = std::abs(randn(rng, 1)(0)), s = std::abs(randn(rng, 1)(0));
    Vector lam(3), g(3);
    lam << a, a * u;
    g << -s, s * u;
    CHECK(conic_complementarity(Cone::soc(3), lam, g) <= 1e-12);
    // Strictly interior multiplier forces g = 0.
    Vector lam_in(3);
    lam_in << 2.0, 0.5 * u;
    CHECK(conic_complementarity(Cone::soc(3), lam_in, g) == doctest::Approx(g.norm()));
  }
}

TEST_CASE("infeasibility examples") {
  const AnalyticCase ball = analytic_ball();
  CHECK(infeasibility(ball.instance, vec({0.5, 0.0})) == 0.0);
  CHECK(infeasibility(constant_constraint(vec({0.3}), Cone::nonneg(1)), vec({0.0})) ==
        doctest::Approx(0.3).epsilon(1e-15));
  CHECK(infeasibility(constant_constraint(vec({0.0, 2.0, 0.0}), Cone::soc(3)), vec({0.0})) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("zero KKT residual implies feasibility") {
  const AnalyticCase lp = analytic_box_lp();
  const Metrics m = kkt_residual(lp.instance, lp.solution);
  CHECK(m.kkt_residual <= 1e-12);
  CHECK(m.infeas <= 1e-12);
  const AnalyticCase eq = analytic_eq_quadratic();
  CHECK(kkt_residual(eq.instance, eq.solution).kkt_residual <= 1e-12);
  CHECK(kkt_residual(eq.instance, eq.solution).infeas <= 1e-12);
}

TEST_CASE("Slater radius examples") {
  CHECK(slater_radius(Cone::nonneg(2), vec({-1.0, -2.0})) == doctest::Approx(1.0));
  CHECK(slater_radius(Cone::soc(3), vec({-3.0, 1.0, 0.0})) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(slater_radius(Cone::nonneg(2), vec({-1.0, 0.0})), SlaterViolation);
  CHECK_THROWS_AS(slater_radius(Cone::soc(3), vec({-1.0, 1.0, 0.0})), SlaterViolation);
  const double prod = slater_radius(Cone::product({Cone::nonneg(1), Cone::soc(3)}),
                                    vec({-0.5, -3.0, 1.0, 0.0}));
  CHECK(prod == doctest::Approx(0.5));
}

TEST_CASE("Slater radius agrees with sampling over unit dual vectors") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> N;
  auto sampled_min = [&](const Cone& cone, const Vector& g) {
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 100000; ++s) {
      Vector w = randn(rng, g.size());
      w = project_cone(cone, w);
      if (w.norm() < 1e-12) continue;
      w.normalize();
      best = std::min(best, w.dot(-g));
    }
    return best;
  };
  const Vector g1 = vec({-1.0, -2.0, -0.7});
  const double r1 = slater_radius(Cone::nonneg(3), g1);
  const double s1 = sampled_min(Cone::nonneg(3), g1);
  CHECK(s1 >= r1 - 1e-12);
  CHECK(s1 - r1 <= 1e-2);
  const Vector g2 = vec({-3.0, 1.0, 0.5});
  const double r2 = slater_radius(Cone::soc(3), g2);
  const double s2 = sampled_min(Cone::soc(3), g2);
  CHECK(s2 >= r2 - 1e-12);
  CHECK(s2 - r2 <= 1e-2);
}

TEST_CASE("dual bound on the ball instance") {
  const AnalyticCase ball = analytic_ball();
  const DualBoundResult b = dual_bound(ball.instance, vec({0.0, 0.0}), Vector(0), vec({0.0}));
  CHECK(b.r_star == doctest::Approx(0.5));
  CHECK(b.f_tilde == doctest::Approx(4.0));
  CHECK(b.q_value <= 1.0 + 1e-12);
  CHECK(b.q_value >= 1.0 - 1e-6);
  CHECK(b.B_lambda == doctest::Approx(6.0).epsilon(1e-5));
  CHECK(b.B_lambda >= ball.lambda_interval->second);
  CHECK(b.B == doctest::Approx(1.01 * std::hypot(b.B_v, b.B_lambda)));
}

TEST_CASE("dual bound covers known multipliers") {
  const AnalyticCase lp = analytic_box_lp();
  const DualBoundResult b = dual_bound(lp.instance, vec({0.0, 0.0}), Vector(0), vec({0.0}));
  CHECK(b.r_star == doctest::Approx(1.5));
  CHECK(b.B_lambda == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(b.B_lambda >= lp.solution.lam.norm());
  const AnalyticCase eq = analytic_eq_quadratic();
  const DualBoundResult e = dual_bound(eq.instance, vec({1.0, 0.0, 0.0}), vec({0.0}), Vector(0));
  CHECK(e.B_v >= eq.solution.v.norm());
}

TEST_CASE("dual bound with no constraints") {
  ProblemData d;
  d.n = 1;
  d.Q = {Matrix::from_dense(DenseMatrix::Identity(1, 1))};
  d.q = {Vector::Zero(1)};
  d.r = Vector::Zero(1);
  d.A = DenseMatrix(0, 1);
  d.b = Vector(0);
  d.primal_set = SimpleSet::free(1);
  d.cone = Cone::nonneg(0);
  const ProblemInstance inst(std::move(d));
  const DualBoundResult b = dual_bound(inst, vec({0.0}), Vector(0), Vector(0));
  CHECK(b.B == std::numeric_limits<double>::infinity());
  CHECK_FALSE(b.warning.empty());
}

TEST_CASE("dual bound formula at the zero probe") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ProblemInstance inst = random_qcqp(10, 3, s);
    const Vector x0 = Vector::Zero(10);
    const DualBoundResult b = dual_bound(inst, x0, Vector(0), Vector::Zero(3));
    const PointEval pe = evaluate_point(inst, x0);
    CHECK(b.r_star == doctest::Approx(-pe.g.maxCoeff()));
    CHECK(b.B_lambda == doctest::Approx((b.f_tilde - b.q_value) / b.r_star));
    CHECK(b.q_value <= b.f_tilde);
  }
}

TEST_CASE("smoothed gap examples on the ball instance") {
  const AnalyticCase ball = analytic_ball();
  const ProblemInstance& inst = ball.instance;
  for (double lam : {0.0, 1.0, 2.0}) {
    const GapResult g =
        smoothed_gap(inst, Iterate{ball.solution.x, Vector(0), vec({lam})}, 0.04, DualBall::unbounded());
    CHECK(std::abs(g.value) <= 1e-7);
    CHECK(g.reliable);
  }
  // At x = 0, lam = 0: upper 4, lower = min_ball ||x - c||^2 + xi||x||^2 = 1 + xi.
  for (double xi : {0.01, 0.04, 0.5}) {
    const GapResult g = smoothed_gap(inst, Iterate::zeros(2, 0, 1), xi, DualBall::unbounded(), 1e-12);
    CHECK(g.upper == doctest::Approx(4.0));
    CHECK(g.value == doctest::Approx(3.0 - xi).epsilon(1e-8));
    CHECK(g.value > 0.0);
  }
}

TEST_CASE("smoothed gap is non-increasing in xi") {
  std::mt19937_64 rng(23);
  const ProblemInstance inst = random_qcqp(10, 3, 8);
  for (int t = 0; t < 20; ++t) {
    const Iterate z = random_point(rng, inst);
    double prev = std::numeric_limits<double>::infinity();
    double prev_slack = 0.0;
    for (double xi : {0.01, 0.04, 0.1, 0.5, 2.0}) {
      const GapResult g = smoothed_gap(inst, z, xi, DualBall::unbounded(), 1e-11);
      CHECK(g.value <= prev + g.slack + prev_slack + 1e-9 * (1.0 + std::abs(prev)));
      prev = g.value;
      prev_slack = g.slack;
    }
  }
}

TEST_CASE("smoothed gap is nonnegative up to the slack") {
  std::mt19937_64 rng(29);
  std::vector<ProblemInstance> family;
  family.push_back(random_qcqp(12, 3, 1));
  family.push_back(small_random(2, 5, 2, 1));
  family.push_back(kml_instance(synthetic_kml_dataset(12, 3, 4), 1.0, 1.0));
  for (const AnalyticCase& c : analytic_suite()) family.push_back(c.instance);
  for (const ProblemInstance& inst : family) {
    for (int t = 0; t < 100; ++t) {
      Iterate z = random_point(rng, inst);
      inst.project_dual(DualBall::unbounded(), z.v, z.lam);
      const GapResult g = smoothed_gap(inst, z, 0.04, DualBall::unbounded());
      CHECK(g.value >= -g.slack - 1e-12);
    }
  }
}

TEST_CASE("evaluator tightens its tolerance") {
  SmoothedGapEvaluator ev(0.04, DualBall::unbounded(), 1e-9);
  CHECK(ev.current_tolerance() == 1e-9);
  const AnalyticCase ball = analytic_ball();
  const GapResult g = ev.evaluate(ball.instance, Iterate{vec({0.9, 0.1}), Vector(0), vec({0.5})});
  CHECK(ev.current_tolerance() == doctest::Approx(std::max(std::min(1e-9, 0.01 * 0.04 * g.value), 1e-13)));
}

TEST_CASE("quadratic growth near the saddle set") {
  std::mt19937_64 rng(31);
  for (const AnalyticCase& c : analytic_suite()) {
    CAPTURE(c.name);
    double rho = 0.0;
    for (int t = 0; t < 200; ++t) {
      const Iterate z = random_near(rng, c.instance, c.solution, 0.1);
      const double d2 = c.distance_sq(z);
      const GapResult g = smoothed_gap(c.instance, z, 0.04, DualBall::unbounded(), 1e-12);
      if (d2 <= 1e-16) continue;
      REQUIRE(g.value > 0.0);
      rho = std::max(rho, d2 / g.value);
    }
    CHECK(std::isfinite(rho));
    CHECK(rho < 1e3);
  }
}

TEST_CASE("termination predicate") {
  Metrics zero;
  TerminationCriteria c;
  c.eps = 1e-7;
  CHECK(check_termination(zero, c));
  c.criterion = Criterion::Relative;
  c.f_ref = 0.0;
  CHECK(check_termination(zero, c));
  Metrics off = zero;
  off.objective = 1e-6;
  CHECK_FALSE(check_termination(off, c));
  CHECK(relative_error(off, 0.0) == doctest::Approx(1e-6));
  off.objective = 2.0 + 1e-6;
  CHECK(relative_error(off, 2.0) == doctest::Approx(1e-6 / 3.0));
  Metrics viol = zero;
  viol.mean_violation = 1e-5;
  CHECK_FALSE(check_termination(viol, c));
  // Without a reference value the conic test applies.
  TerminationCriteria nf;
  nf.criterion = Criterion::Relative;
  Metrics k = zero;
  k.kkt_residual = 1e-5;
  CHECK_FALSE(check_termination(k, nf));
  k.kkt_residual = 1e-7;
  CHECK(check_termination(k, nf));
}

TEST_CASE("relative criterion stops at the first crossing") {
  const ProblemInstance inst = random_qcqp(20, 3, 6);
  const ApdbConfig cfg = ApdbConfig::defaults(UpdateOrder::YX, true);
  RestartOptions ref_opts;
  ref_opts.budget = 20000;
  ref_opts.stop = TerminationCriteria{Criterion::Conic, 1e-7, 1e-10, 1e-10, std::nullopt};
  const RestartedResult ref = run_restarted(inst, cfg, RestartPolicy::fixed(400),
                                            Iterate::zeros(20, 0, 3), ref_opts);
  REQUIRE(ref.converged);
  const double f_ref = ref.final_metrics.objective;

  RestartOptions o;
  o.budget = 20000;
  o.stop = TerminationCriteria{Criterion::Relative, 1e-6, 1e-6, 1e-6, f_ref};
  const RestartedResult r =
      run_restarted(inst, cfg, RestartPolicy::fixed(400), Iterate::zeros(20, 0, 3), o);
  REQUIRE(r.converged);
  CHECK(relative_error(r.final_metrics, f_ref) <= 1e-6);
  // Replay one iteration short and recompute the quantity offline.
  RestartOptions shorter;
  shorter.budget = r.iterations - 1;
  shorter.compute_metrics = false;
  const RestartedResult p =
      run_restarted(inst, cfg, RestartPolicy::fixed(400), Iterate::zeros(20, 0, 3), shorter);
  CHECK(relative_error(kkt_residual(inst, p.solution, f_ref), f_ref) > 1e-6);
}
