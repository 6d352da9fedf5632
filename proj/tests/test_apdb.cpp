#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "rapdb/apdb.hpp"
#include "rapdb/errors.hpp"
#include "rapdb/instances.hpp"

using namespace rapdb;
using namespace rapdb::testing;

namespace {

const double kPhi = 0.5 * (1.0 + std::sqrt(5.0));

TestCoefficients random_coefficients(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.1, 2.0);
  TestCoefficients c;
  c.tau = U(rng);
  c.sigma = U(rng);
  c.theta = U(rng);
  c.alpha = U(rng);
  c.beta = U(rng);
  c.alpha_next = U(rng);
  c.beta_next = U(rng);
  return c;
}

// f = 0.5 x'diag(d)x + q0'x, g1 = a'x + r1 (bilinear coupling), one equality.
ProblemInstance bilinear_instance() {
  ProblemData d;
  d.n = 2;
  d.m = 1;
  d.p = 1;
  DenseMatrix Q0 = DenseMatrix::Zero(2, 2);
  Q0(0, 0) = 2.0;
  Q0(1, 1) = 3.0;
  d.Q = {Matrix::from_dense(Q0), Matrix::from_dense(DenseMatrix::Zero(2, 2))};
  d.q = {vec({1.0, -1.0}), vec({1.0, 2.0})};
  d.r = vec({0.0, -1.0});
  d.A = DenseMatrix(1, 2);
  d.A << 1.0, -1.0;
  d.b = vec({0.5});
  d.primal_set = SimpleSet::free(2);
  d.cone = Cone::nonneg(1);
  return ProblemInstance(std::move(d));
}

// f = 0.5 a x^2, g = 0.5 b x^2 + c x + r on R.
ProblemInstance scalar_instance(double a, double b, double c, double r) {
  ProblemData d;
  d.n = 1;
  d.m = 1;
  d.p = 0;
  d.Q = {Matrix::from_dense(DenseMatrix::Constant(1, 1, a)),
         Matrix::from_dense(DenseMatrix::Constant(1, 1, b))};
  d.q = {Vector::Zero(1), vec({c})};
  d.r = vec({0.0, r});
  d.A = DenseMatrix(0, 1);
  d.b = Vector(0);
  d.primal_set = SimpleSet::free(1);
  d.cone = Cone::nonneg(1);
  return ProblemInstance(std::move(d));
}

ProblemInstance half_square() {
  ProblemData d;
  d.n = 1;
  d.m = 0;
  d.p = 0;
  d.Q = {Matrix::from_dense(DenseMatrix::Identity(1, 1))};
  d.q = {Vector::Zero(1)};
  d.r = Vector::Zero(1);
  d.A = DenseMatrix(0, 1);
  d.b = Vector(0);
  d.primal_set = SimpleSet::free(1);
  d.cone = Cone::nonneg(0);
  return ProblemInstance(std::move(d));
}

double lagrangian(const ProblemInstance& inst, const Vector& x, const Iterate& y) {
  return coupling_value(inst, Iterate{x, y.v, y.lam});
}

std::vector<std::pair<const char*, ApdbConfig>> all_configs() {
  return {{"yx mono", ApdbConfig::defaults(UpdateOrder::YX, false)},
          {"yx nonmono", ApdbConfig::defaults(UpdateOrder::YX, true)},
          {"xy mono", ApdbConfig::defaults(UpdateOrder::XY, false)},
          {"xy nonmono", ApdbConfig::defaults(UpdateOrder::XY, true)}};
}

}  // namespace

TEST_CASE("test functions vanish at the previous point") {
  std::mt19937_64 rng(1);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ProblemInstance inst = small_random(s, 5, 3, 2);
    const Iterate z = random_point(rng, inst);
    const TestCoefficients c = random_coefficients(rng);
    CHECK(test_function_xy(inst, c, z, z) == 0.0);
    CHECK(test_function_yx(inst, c, z, z) == 0.0);
    CHECK(acceptance_bound(c, 0.4, z, z) == 0.0);
  }
}

TEST_CASE("xy test function on a bilinear instance") {
  const ProblemInstance inst = bilinear_instance();
  const Iterate prev{vec({0.5, -1.0}), vec({0.2}), vec({1.5})};
  const Iterate cand{vec({-0.25, 0.75}), vec({-0.3}), vec({0.5})};
  TestCoefficients c;
  c.tau = 0.5;
  c.sigma = 0.8;
  c.theta = 1.25;
  c.alpha = 0.3;
  c.beta = 0.2;
  c.alpha_next = 0.6;
  c.beta_next = 0.4;
  // grad_x Phi = Q0 x + q0 + lam q1 + A'v.
  const double dl = -1.0, dv = -0.5;
  const double t1x = dl * 1.0 + dv * 1.0, t1y = dl * 2.0 + dv * -1.0;
  const double dx0 = -0.75, dx1 = 1.75;
  const double t2x = 2.0 * dx0, t2y = 3.0 * dx1;
  const double Dp = 0.5 * (dx0 * dx0 + dx1 * dx1);
  const double Dd = 0.5 * (dl * dl + dv * dv);
  const double expect = (t1x * t1x + t1y * t1y) / (2 * 0.6) - Dd / 0.8 +
                        (t2x * t2x + t2y * t2y) / (2 * 0.4) - (1 / 0.5 - 1.25 * 0.5) * Dp;
  CHECK(test_function_xy(inst, c, cand, prev) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(acceptance_bound(c, 0.4, cand, prev) ==
        doctest::Approx(-(0.4 / 0.5) * Dp - (0.4 / 0.8) * Dd).epsilon(1e-14));
}

TEST_CASE("yx test function on a scalar quadratic") {
  const double a = 2.0, b = 0.5, cc = -1.0, r = -0.25;
  const ProblemInstance inst = scalar_instance(a, b, cc, r);
  const double x0 = 1.5, l0 = 0.4, x1 = 0.5, l1 = 1.2;
  TestCoefficients c;
  c.tau = 0.3;
  c.sigma = 0.6;
  c.theta = 0.9;
  c.alpha = 0.5;
  c.alpha_next = 0.7;
  auto g = [&](double x) { return 0.5 * b * x * x + cc * x + r; };
  const double dx = x1 - x0;
  const double expect = 0.5 * (a + l1 * b) * dx * dx - 0.5 * dx * dx / 0.3 +
                        std::pow(g(x1) - g(x0), 2) / (2 * 0.7) -
                        (1 / 0.6 - 0.9 * 0.5) * 0.5 * std::pow(l1 - l0, 2);
  const double got = test_function_yx(inst, c, Iterate{vec({x1}), Vector(0), vec({l1})},
                                      Iterate{vec({x0}), Vector(0), vec({l0})});
  CHECK(got == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("cached test values match the from-scratch evaluation") {
  for (const auto& [name, cfg0] : all_configs()) {
    CAPTURE(name);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const ProblemInstance inst = small_random(50 + s, 6, 3, 2);
      ApdbConfig cfg = cfg0;
      ApdbEngine eng(inst, cfg, Iterate::zeros(6, 2, 3));
      for (int k = 0; k < 60; ++k) {
        const Iterate prev = eng.last();
        const StepInfo info = eng.step();
        const double scratch = cfg.order == UpdateOrder::XY
                                   ? test_function_xy(inst, info.coefficients, eng.last(), prev)
                                   : test_function_yx(inst, info.coefficients, eng.last(), prev);
        const double scale = 1.0 + std::abs(scratch) + std::abs(info.bound);
        CHECK(std::abs(scratch - info.test_value) <= 1e-10 * scale);
        const double bound = acceptance_bound(info.coefficients, cfg.params.delta, eng.last(), prev);
        CHECK(scratch <= bound + 1e-12 * scale);
      }
    }
  }
}

TEST_CASE("stepsize laws") {
  const ProblemInstance inst = small_random(7, 5, 2, 1);
  SUBCASE("monotone, mu = 0: tau carries over unchanged") {
    ApdbEngine eng(inst, ApdbConfig::defaults(UpdateOrder::YX, false), Iterate::zeros(5, 1, 2));
    double prev_tau = 0.0;
    double gamma0 = eng.state().gamma;
    for (int k = 0; k < 200; ++k) {
      const StepInfo info = eng.step();
      if (k > 0) CHECK(info.tau_initial == prev_tau);
      CHECK(info.tau <= info.tau_initial);
      CHECK(info.gamma == gamma0);
      CHECK(info.sigma == info.gamma * info.tau);
      prev_tau = info.tau;
    }
  }
  SUBCASE("nonmonotone growth factor") {
    ApdbConfig cfg = ApdbConfig::defaults(UpdateOrder::YX, true);
    cfg.tau_bar = 1e-3;
    ApdbEngine eng(inst, cfg, Iterate::zeros(5, 1, 2));
    const StepInfo first = eng.step();
    REQUIRE(first.tau == 1e-3);
    CHECK(eng.state().tau == doctest::Approx(1e-3 * std::sqrt(2.0)).epsilon(1e-15));
    double tau_km1 = cfg.tau_bar;
    double tau_prev = first.tau;
    for (int k = 0; k < 300; ++k) {
      const StepInfo info = eng.step();
      CHECK(info.tau_initial ==
            doctest::Approx(tau_prev * std::sqrt(1.0 + tau_prev / tau_km1)).epsilon(1e-14));
      CHECK(info.tau / tau_prev <= kPhi + 1e-12);
      tau_km1 = tau_prev;
      tau_prev = info.tau;
    }
  }
}

TEST_CASE("one-dimensional contraction follows the scalar recursion") {
  const ProblemInstance inst = half_square();
  ApdbEngine eng(inst, ApdbConfig::defaults(UpdateOrder::YX, false),
                 Iterate{vec({4.0}), Vector(0), Vector(0)});
  // tau = 1 and 0.7 fail the test, 0.49 passes: x+ = (1 - 0.49) x.
  const StepInfo first = eng.step();
  CHECK(first.evals == 3);
  CHECK(first.tau == doctest::Approx(0.49).epsilon(1e-15));
  double x = 4.0 * (1.0 - first.tau);
  CHECK(eng.last().x(0) == doctest::Approx(x).epsilon(1e-15));
  for (int k = 0; k < 40; ++k) {
    const StepInfo info = eng.step();
    CHECK(info.evals == 1);
    x *= 1.0 - info.tau;
    CHECK(eng.last().x(0) == doctest::Approx(x).epsilon(1e-12));
    CHECK(std::abs(eng.last().x(0)) <= 4.0);
  }
}

TEST_CASE("evaluation counter matches the backtracking ledger") {
  for (const auto& [name, cfg] : all_configs()) {
    CAPTURE(name);
    const ProblemInstance inst = random_qcqp(20, 3, 11);
    const RunResult run = run_apdb(inst, cfg, Iterate::zeros(20, 0, 3), 300);
    long ledger = 0;
    for (const TraceRecord& row : run.trace) {
      const double shrinks = std::log(row.tau_initial / row.tau) / std::log(1.0 / cfg.eta);
      const long n = std::lround(shrinks);
      CHECK(std::abs(shrinks - static_cast<double>(n)) <= 1e-9);
      CHECK(row.evals_iter == 1 + n);
      ledger += 1 + n;
      CHECK(row.evals_total == ledger);
    }
    CHECK(run.evals_total == ledger);
  }
}

TEST_CASE("configuration errors") {
  ApdbConfig cfg = ApdbConfig::defaults(UpdateOrder::XY);
  cfg.params.c_beta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  const ProblemInstance inst = small_random(1, 3, 1, 0);
  CHECK_THROWS_AS(ApdbEngine(inst, cfg, Iterate::zeros(3, 0, 1)), ConfigError);
  ApdbConfig yx = ApdbConfig::defaults(UpdateOrder::YX);
  yx.params.c_beta = 0.1;
  CHECK_THROWS_AS(yx.validate(), ConfigError);
  ApdbConfig bad_eta = ApdbConfig::defaults(UpdateOrder::YX);
  bad_eta.eta = 1.0;
  CHECK_THROWS_AS(bad_eta.validate(), ConfigError);
  CHECK_THROWS_AS(run_apdb(inst, ApdbConfig::defaults(UpdateOrder::YX), Iterate::zeros(3, 0, 1), 0),
                  ConfigError);
}

TEST_CASE("backtracking cap raises NonConvergence") {
  const ProblemInstance inst = half_square();
  ApdbConfig cfg = ApdbConfig::defaults(UpdateOrder::YX);
  cfg.max_backtracks = 1;
  ApdbEngine eng(inst, cfg, Iterate{vec({4.0}), Vector(0), Vector(0)});
  CHECK_THROWS_AS(eng.step(), NonConvergence);
}

TEST_CASE("iterates stay feasible") {
  for (const auto& [name, cfg0] : all_configs()) {
    CAPTURE(name);
    ApdbConfig cfg = cfg0;
    if (cfg.order == UpdateOrder::YX) cfg.dual_ball = DualBall::joint(3.0);
    const ProblemInstance inst = random_qcqp(15, 4, 3);
    ApdbEngine eng(inst, cfg, Iterate::zeros(15, 0, 4));
    for (int k = 0; k < 300; ++k) {
      eng.step();
      const Iterate& z = eng.last();
      CHECK((project_set(inst.primal_set(), z.x) - z.x).norm() <= 1e-12);
      CHECK(z.lam.minCoeff() >= 0.0);
      if (cfg.order == UpdateOrder::YX) CHECK(z.y().norm() <= 3.0 + 1e-12);
    }
  }
}

TEST_CASE("accumulated weight bounds in monotone mode") {
  for (UpdateOrder order : {UpdateOrder::XY, UpdateOrder::YX}) {
    const ProblemInstance inst = random_qcqp(20, 3, 5);
    const ApdbConfig cfg = ApdbConfig::defaults(order, false);
    const long K = 400;
    const RunResult run = run_apdb(inst, cfg, Iterate::zeros(20, 0, 3), K);
    double tau_min = cfg.tau_bar;
    for (const TraceRecord& row : run.trace) tau_min = std::min(tau_min, row.tau);
    CHECK(run.T <= static_cast<double>(K) + 1e-9);
    CHECK(run.T >= static_cast<double>(K) * tau_min / cfg.tau_bar - 1e-9);
  }
}

TEST_CASE("strong convexity accelerates the weights") {
  const AnalyticCase sc = analytic_strongly_convex();
  REQUIRE(sc.instance.mu() > 0.0);
  for (const auto& [name, cfg] : all_configs()) {
    CAPTURE(name);
    const Iterate z0 = Iterate::zeros(sc.instance.n(), sc.instance.p(), sc.instance.m());
    const RunResult run = run_apdb(sc.instance, cfg, z0, 128);
    const double T_half = run.trace[63].weight_total;
    CHECK(run.T >= 2.5 * T_half);
    for (std::size_t k = 1; k < run.trace.size(); ++k)
      CHECK(run.trace[k].gamma > run.trace[k - 1].gamma);
  }
}

TEST_CASE("ergodic gap bound at saddle points of the ball instance") {
  const AnalyticCase ball = analytic_ball();
  const ProblemInstance& inst = ball.instance;
  const Iterate z0 = Iterate::zeros(inst.n(), inst.p(), inst.m());
  for (const auto& [name, cfg] : all_configs()) {
    CAPTURE(name);
    ApdbEngine eng(inst, cfg, z0);
    double tau0 = 0.0, sigma0 = 0.0;
    for (int k = 0; k < 500; ++k) {
      const StepInfo info = eng.step();
      if (k == 0) {
        tau0 = info.tau;
        sigma0 = info.sigma;
      }
      const Iterate avg = eng.average();
      for (double lam_star : {0.0, 1.0, 2.0}) {
        const Iterate star{ball.solution.x, Vector(0), vec({lam_star})};
        const double Delta = bregman_p(star.x, z0.x) / tau0 +
                             bregman_d(star.v, star.lam, z0.v, z0.lam) / sigma0;
        const double gap = lagrangian(inst, avg.x, star) - lagrangian(inst, star.x, avg);
        CHECK(eng.averages().T * gap <= Delta + 1e-9);
        if (cfg.order == UpdateOrder::XY)
          CHECK(bregman_d(star.v, star.lam, eng.last().v, eng.last().lam) <=
                sigma0 * Delta + 1e-9);
      }
    }
  }
}
