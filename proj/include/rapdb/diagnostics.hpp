#pragma once

#include <optional>
#include <string>

#include "rapdb/geometry.hpp"
#include "rapdb/problem.hpp"
#include "rapdb/subsolve.hpp"

namespace rapdb {

struct Metrics {
  double stationarity = 0.0;     // ||x - P_X(x - grad_x Phi)||
  double primal_eq = 0.0;        // ||Ax - b||
  double complementarity = 0.0;
  double kkt_residual = 0.0;     // sum of the three parts
  double infeas = 0.0;
  double objective = 0.0;        // f(x)
  double mean_violation = 0.0;   // averaged positive constraint violation
  std::optional<double> subopt_abs;  // f(x) - f_ref
  std::optional<double> gap_xi;
};

// Metrics from quantities already available at z: pe = evaluate_point(x),
// grad_x = grad_x Phi(x, y).
Metrics metrics_at(const ProblemInstance& inst, const Iterate& z, const PointEval& pe,
                   const Vector& grad_x, std::optional<double> f_ref = std::nullopt);
Metrics kkt_residual(const ProblemInstance& inst, const Iterate& z,
                     std::optional<double> f_ref = std::nullopt);

// dist((Ax - b, -g(x)), {0} x K). Only the equality part when the instance
// carries a multiplier set.
double infeasibility(const ProblemInstance& inst, const Vector& x);
double infeasibility(const ProblemInstance& inst, const PointEval& pe);

// dist(g, N_{K*}(lam)) for lam in K*.
double conic_complementarity(const Cone& cone, const Vector& lam, const Vector& g);

// ---------------------------------------------------------------------------
// Smoothed duality gap
// ---------------------------------------------------------------------------

struct GapResult {
  double value = 0.0;   // upper - lower
  double upper = 0.0;   // Phi(x, y_hat) - xi ||y_hat - y||^2
  double lower = 0.0;   // computed value of min_x' Phi(x', y) + xi ||x' - x||^2
  double slack = 0.0;   // certified bound on lower - true minimum
  bool reliable = true; // subsolver converged
  Iterate maximizer;    // (x_hat, y_hat)
  int subsolver_iterations = 0;
};

GapResult smoothed_gap(const ProblemInstance& inst, const Iterate& z, double xi,
                       const DualBall& ball, double subsolver_tol = 1e-9,
                       const Vector* x_warm = nullptr, int max_iterations = 50000);

// Per-run evaluator that warm-starts successive x-subproblems and tightens the
// subsolver tolerance relative to the last gap value.
class SmoothedGapEvaluator {
 public:
  SmoothedGapEvaluator(double xi, DualBall ball, double base_tol = 1e-9)
      : xi_(xi), ball_(std::move(ball)), base_tol_(base_tol) {}

  GapResult evaluate(const ProblemInstance& inst, const Iterate& z);
  double xi() const { return xi_; }
  const DualBall& ball() const { return ball_; }
  double current_tolerance() const;

 private:
  double xi_;
  DualBall ball_;
  double base_tol_;
  std::optional<double> last_gap_;
  Vector warm_;
};

// ---------------------------------------------------------------------------
// Slater radius and dual bounds
// ---------------------------------------------------------------------------

// r* = min { <w, -g> : w in K*, ||w|| = 1 }. Throws SlaterViolation unless -g
// is strictly inside K.
double slater_radius(const Cone& cone, const Vector& g_tilde);

struct DualBoundResult {
  double B_lambda = 0.0;
  double B_v = 0.0;
  double B = 0.0;
  double r_star = 0.0;
  double q_value = 0.0;      // certified lower bound on q(v, lam)
  double f_tilde = 0.0;
  std::string warning;
};

// Bounds on the multipliers from a Slater point x_tilde and a probe (v, lam).
DualBoundResult dual_bound(const ProblemInstance& inst, const Vector& x_tilde,
                           const Vector& v_probe, const Vector& lam_probe,
                           double subsolver_tol = 1e-10);

// ---------------------------------------------------------------------------
// Termination
// ---------------------------------------------------------------------------

enum class Criterion { Relative, Conic };

struct TerminationCriteria {
  Criterion criterion = Criterion::Conic;
  double eps = 1e-7;       // relative suboptimality / mean violation
  double eps_kkt = 1e-6;
  double eps_feas = 1e-6;
  std::optional<double> f_ref;
};

// max{|f - f*| / (1 + |f*|), mean violation} for the relative criterion.
double relative_error(const Metrics& m, double f_ref);

// Relative falls back to the conic test when no reference value is known.
bool check_termination(const Metrics& m, const TerminationCriteria& c);

}  // namespace rapdb
