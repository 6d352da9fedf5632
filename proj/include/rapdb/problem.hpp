#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "rapdb/geometry.hpp"
#include "rapdb/linalg.hpp"

namespace rapdb {

// A primal-dual point z = (x, v, lam): v multiplies Ax = b, lam multiplies
// g(x) in -K.
struct Iterate {
  Vector x;
  Vector v;
  Vector lam;

  static Iterate zeros(Eigen::Index n, Eigen::Index p, Eigen::Index m) {
    return {Vector::Zero(n), Vector::Zero(p), Vector::Zero(m)};
  }
  // Stacked dual vector y = (v, lam).
  Vector y() const;
  double distance(const Iterate& other) const;
};

// Mutable description of a convex QCQP / NCP before validation.
//   min  0.5 x'Q0 x + q0'x + r0
//   s.t. Ax = b,  g(x) = [0.5 x'Qi x + qi'x + ri]_i in -K,  x in X
struct ProblemData {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::Index p = 0;
  std::vector<Matrix> Q;  // m + 1 symmetric PSD matrices; Q[0] is the objective
  std::vector<Vector> q;  // m + 1 linear terms
  Vector r;               // m + 1 constants; r[0] = r0
  DenseMatrix A;          // p x n
  Vector b;               // p
  SimpleSet primal_set;
  Cone cone;
  // When set, lam is restricted to this set instead of K* (minimax instances
  // whose maximization player lives on a compact set, e.g. a simplex).
  std::optional<SimpleSet> multiplier_set;
  double mu = 0.0;
};

// Immutable, validated instance. Safe to share between threads.
class ProblemInstance {
 public:
  // Validates symmetry (1e-12), PSD-ness (lambda_min >= -1e-10), rank(A) = p and
  // the declared strong convexity modulus. Throws InputError / DataError.
  explicit ProblemInstance(ProblemData data);

  Eigen::Index n() const { return d_.n; }
  Eigen::Index m() const { return d_.m; }
  Eigen::Index p() const { return d_.p; }
  double mu() const { return d_.mu; }

  const ProblemData& data() const { return d_; }
  const std::vector<Matrix>& Q() const { return d_.Q; }
  const std::vector<Vector>& q() const { return d_.q; }
  const Vector& r() const { return d_.r; }
  const DenseMatrix& A() const { return d_.A; }
  const Vector& b() const { return d_.b; }
  const SimpleSet& primal_set() const { return d_.primal_set; }
  const Cone& cone() const { return d_.cone; }
  const std::optional<SimpleSet>& multiplier_set() const { return d_.multiplier_set; }

  // Cached spectral-norm upper estimates (power iteration, inflated by 1.01).
  double q_norm(Eigen::Index i) const { return q_norms_[static_cast<std::size_t>(i)]; }
  double a_norm() const { return a_norm_; }

  // Projection of lam onto its feasible set (K* or the multiplier set).
  Vector project_multipliers(const Vector& lam) const;
  // Projection of (v, lam) onto (R^p x K*) intersected with the dual ball.
  void project_dual(const DualBall& ball, Vector& v, Vector& lam) const;
  bool dual_feasible(const Vector& lam, double tol = 1e-9) const;

  void check_iterate(const Iterate& z) const;

 private:
  ProblemData d_;
  std::vector<double> q_norms_;
  double a_norm_ = 0.0;
};

// Everything about Phi(x, .) that depends only on x. Phi is affine in y, so
// one evaluation serves every dual point paired with the same x.
struct PointEval {
  Vector x;
  std::vector<Vector> Qx;  // Q_i x, i = 0..m
  double f = 0.0;          // f(x)
  Vector g;                // g(x), length m
  Vector eq_residual;      // Ax - b, length p
};

PointEval evaluate_point(const ProblemInstance& inst, const Vector& x);

// Phi(x, y) = f(x) + v'(Ax - b) + lam'g(x)
double coupling_value(const ProblemInstance& inst, const PointEval& pe,
                      const Vector& v, const Vector& lam);
double coupling_value(const ProblemInstance& inst, const Iterate& z);

// grad_x Phi = (Q0 + sum lam_i Q_i) x + q0 + sum lam_i q_i + A'v
Vector grad_x_coupling(const ProblemInstance& inst, const PointEval& pe,
                       const Vector& v, const Vector& lam);
Vector grad_x_coupling(const ProblemInstance& inst, const Iterate& z);

// grad_y Phi = (Ax - b, g(x))
struct DualGradient {
  Vector v;
  Vector lam;
};
DualGradient grad_y_coupling(const PointEval& pe);
DualGradient grad_y_coupling(const ProblemInstance& inst, const Iterate& z);

// d' Q(lam) d with d = a.x - b.x, computed from the cached products.
double curvature_term(const ProblemInstance& inst, const PointEval& a,
                      const PointEval& b, const Vector& lam);

// Q(lam) = Q0 + sum lam_i Q_i as a dense matrix.
DenseMatrix weighted_hessian(const ProblemInstance& inst, const Vector& lam);

// ---------------------------------------------------------------------------
// Lipschitz constants and stepsize floors
// ---------------------------------------------------------------------------

enum class UpdateOrder { XY, YX };

struct LipschitzConstants {
  double L_f = 0.0;
  double L_g = 0.0;
  double B_g = 0.0;
  double C_g = 0.0;  // surrogate: equals B_g
  double L_xx = 0.0;
  double L_xy = 0.0;
  double Lhat_xx = 0.0;
  double Lhat_yx = 0.0;
  double dual_bound_used = 0.0;  // B (may be +inf in xy mode)
  double dual_bound_estimate = 0.0;  // B-bar used for L_xx
  double psi1 = 0.0;
  double psi2 = 0.0;
  bool B_g_estimated = false;  // sampled rather than bounded analytically
  bool L_xx_estimated = false; // B-bar is a user estimate
};

struct StepParameters {
  double c_alpha = 0.4;
  double c_beta = 0.0;
  double delta = 0.5;
  double gamma0 = 1.0;
};

struct ConstantsOptions {
  // Estimate of sup_k ||y^k|| for xy mode. Defaults to 10 (1 + ||q0||).
  std::optional<double> dual_estimate;
  // Radius of the sampling region used when the primal set is unbounded.
  double sampling_radius = 10.0;
  int samples = 256;
};

LipschitzConstants compute_constants(const ProblemInstance& inst, UpdateOrder mode,
                                     std::optional<double> dual_bound,
                                     const StepParameters& params = {},
                                     const ConstantsOptions& opts = {});

// Stepsize floors.
double psi1(double L_xx, double L_xy, const StepParameters& params);
double psi2(double Lhat_xx, double Lhat_yx, const StepParameters& params);

}  // namespace rapdb
