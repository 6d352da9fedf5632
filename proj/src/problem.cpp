#include "rapdb/problem.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "rapdb/errors.hpp"
#include "rapdb/kernels.hpp"

namespace rapdb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string idx(std::size_t i) { return std::to_string(i); }

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

double safe_div(double num, double den) {
  if (den == 0.0) return num == 0.0 ? 0.0 : kInf;
  return num / den;
}

}  // namespace

Vector Iterate::y() const {
  Vector out(v.size() + lam.size());
  out << v, lam;
  return out;
}

double Iterate::distance(const Iterate& other) const {
  return std::sqrt((x - other.x).squaredNorm() + (v - other.v).squaredNorm() +
                   (lam - other.lam).squaredNorm());
}

ProblemInstance::ProblemInstance(ProblemData data) : d_(std::move(data)) {
  const auto n = d_.n;
  const auto m = d_.m;
  const auto p = d_.p;
  require(n > 0, "problem: n must be positive");
  require(m >= 0 && p >= 0, "problem: m and p must be nonnegative");
  require(static_cast<Eigen::Index>(d_.Q.size()) == m + 1,
          "problem: expected m+1 = " + std::to_string(m + 1) + " matrices in Q, got " +
              idx(d_.Q.size()));
  require(static_cast<Eigen::Index>(d_.q.size()) == m + 1,
          "problem: expected m+1 vectors in q, got " + idx(d_.q.size()));
  require(d_.r.size() == m + 1, "problem: expected m+1 entries in r");
  require(d_.A.rows() == p && (p == 0 || d_.A.cols() == n),
          "problem: A must be p x n");
  if (p == 0) d_.A.resize(0, n);
  require(d_.b.size() == p, "problem: b must have p entries");
  d_.primal_set.validate();
  require(d_.primal_set.dim() == n, "problem: primal_set dimension differs from n");
  d_.cone.validate();
  if (d_.multiplier_set) {
    d_.multiplier_set->validate();
    require(d_.multiplier_set->dim() == m,
            "problem: multiplier set dimension differs from m");
  } else {
    require(d_.cone.dim() == m, "problem: cone dimension differs from m");
  }
  require(d_.mu >= 0.0, "problem: mu must be nonnegative");

  q_norms_.resize(d_.Q.size());
  for (std::size_t i = 0; i < d_.Q.size(); ++i) {
    const Matrix& Qi = d_.Q[i];
    require(Qi.rows() == n && Qi.cols() == n, "problem: Q[" + idx(i) + "] must be n x n");
    require(d_.q[i].size() == n, "problem: q[" + idx(i) + "] must have n entries");
    const DenseMatrix dense = Qi.to_dense();
    require(dense.allFinite(), "problem: Q[" + idx(i) + "] has non-finite entries");
    const double scale = 1.0 + dense.cwiseAbs().maxCoeff();
    if ((dense - dense.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw DataError("problem: Q[" + idx(i) + "] is not symmetric");
    if (!Qi.is_zero()) {
      const double lmin = min_eigenvalue(dense);
      if (lmin < -1e-10 * scale)
        throw DataError("problem: Q[" + idx(i) + "] is not positive semidefinite (lambda_min = " +
                        std::to_string(lmin) + ")");
      if (i == 0 && d_.mu > 0.0 && d_.mu > lmin + 1e-10)
        throw DataError("problem: mu exceeds lambda_min(Q0)");
    } else if (i == 0 && d_.mu > 1e-10) {
      throw DataError("problem: mu exceeds lambda_min(Q0)");
    }
    q_norms_[i] = spectral_norm(Qi);
  }
  if (p > 0) {
    if (numerical_rank(d_.A) != p) throw DataError("problem: A does not have full row rank");
    a_norm_ = spectral_norm(d_.A);
  }
}

Vector ProblemInstance::project_multipliers(const Vector& lam) const {
  if (d_.multiplier_set) return project_set(*d_.multiplier_set, lam);
  return project_dual_cone(d_.cone, lam);
}

void ProblemInstance::project_dual(const DualBall& ball, Vector& v, Vector& lam) const {
  lam = project_multipliers(lam);
  if (!ball.is_unbounded()) {
    if (d_.multiplier_set)
      throw ConfigError("dual ball cannot be combined with a multiplier set");
    project_dual_ball(ball, v, lam);
  }
}

bool ProblemInstance::dual_feasible(const Vector& lam, double tol) const {
  if (d_.multiplier_set) return d_.multiplier_set->contains(lam, tol);
  return d_.cone.contains(lam, tol);
}

void ProblemInstance::check_iterate(const Iterate& z) const {
  if (z.x.size() != n() || z.v.size() != p() || z.lam.size() != m())
    throw InputError("iterate dimensions (" + std::to_string(z.x.size()) + ", " +
                     std::to_string(z.v.size()) + ", " + std::to_string(z.lam.size()) +
                     ") do not match instance (n=" + std::to_string(n()) +
                     ", p=" + std::to_string(p()) + ", m=" + std::to_string(m()) + ")");
}

PointEval evaluate_point(const ProblemInstance& inst, const Vector& x) {
  if (x.size() != inst.n()) throw InputError("evaluate_point: dimension mismatch");
  PointEval pe;
  pe.x = x;
  kernels::symmetric_products(inst.Q(), x, pe.Qx);
  const auto& q = inst.q();
  const auto& r = inst.r();
  pe.f = 0.5 * x.dot(pe.Qx[0]) + q[0].dot(x) + r(0);
  pe.g.resize(inst.m());
  for (Eigen::Index i = 0; i < inst.m(); ++i) {
    const auto k = static_cast<std::size_t>(i + 1);
    pe.g(i) = 0.5 * x.dot(pe.Qx[k]) + q[k].dot(x) + r(i + 1);
  }
  if (inst.p() > 0)
    pe.eq_residual = inst.A() * x - inst.b();
  else
    pe.eq_residual.resize(0);
  return pe;
}

double coupling_value(const ProblemInstance& inst, const PointEval& pe,
                      const Vector& v, const Vector& lam) {
  if (v.size() != inst.p() || lam.size() != inst.m())
    throw InputError("coupling_value: dual dimension mismatch");
  double val = pe.f + lam.dot(pe.g);
  if (inst.p() > 0) val += v.dot(pe.eq_residual);
  return val;
}

double coupling_value(const ProblemInstance& inst, const Iterate& z) {
  inst.check_iterate(z);
  return coupling_value(inst, evaluate_point(inst, z.x), z.v, z.lam);
}

Vector grad_x_coupling(const ProblemInstance& inst, const PointEval& pe,
                       const Vector& v, const Vector& lam) {
  if (v.size() != inst.p() || lam.size() != inst.m())
    throw InputError("grad_x_coupling: dual dimension mismatch");
  const auto m = static_cast<std::size_t>(inst.m());
  std::vector<double> w(m + 1);
  w[0] = 1.0;
  for (std::size_t i = 0; i < m; ++i) w[i + 1] = lam(static_cast<Eigen::Index>(i));
  Vector grad;
  kernels::weighted_sum(pe.Qx, w, grad);
  grad += inst.q()[0];
  for (std::size_t i = 0; i < m; ++i)
    if (w[i + 1] != 0.0) grad += w[i + 1] * inst.q()[i + 1];
  if (inst.p() > 0) grad.noalias() += inst.A().transpose() * v;
  return grad;
}

Vector grad_x_coupling(const ProblemInstance& inst, const Iterate& z) {
  inst.check_iterate(z);
  return grad_x_coupling(inst, evaluate_point(inst, z.x), z.v, z.lam);
}

DualGradient grad_y_coupling(const PointEval& pe) { return {pe.eq_residual, pe.g}; }

DualGradient grad_y_coupling(const ProblemInstance& inst, const Iterate& z) {
  inst.check_iterate(z);
  return grad_y_coupling(evaluate_point(inst, z.x));
}

double curvature_term(const ProblemInstance& inst, const PointEval& a,
                      const PointEval& b, const Vector& lam) {
  const Vector d = a.x - b.x;
  double total = d.dot(a.Qx[0] - b.Qx[0]);
  for (Eigen::Index i = 0; i < inst.m(); ++i) {
    if (lam(i) == 0.0) continue;
    const auto k = static_cast<std::size_t>(i + 1);
    total += lam(i) * d.dot(a.Qx[k] - b.Qx[k]);
  }
  return total;
}

DenseMatrix weighted_hessian(const ProblemInstance& inst, const Vector& lam) {
  DenseMatrix H = inst.Q()[0].to_dense();
  for (Eigen::Index i = 0; i < inst.m(); ++i) {
    if (lam(i) == 0.0) continue;
    const Matrix& Qi = inst.Q()[static_cast<std::size_t>(i + 1)];
    if (Qi.is_sparse())
      H += lam(i) * DenseMatrix(Qi.csr());
    else
      H += lam(i) * Qi.dense();
  }
  return H;
}

// ---------------------------------------------------------------------------

double psi1(double L_xx, double L_xy, const StepParameters& prm) {
  const double first = safe_div(std::sqrt(prm.c_alpha * (1.0 - prm.delta)),
                                L_xy * std::sqrt(prm.gamma0));
  const double slack = 1.0 - (prm.c_alpha + prm.c_beta + prm.delta);
  const double second = safe_div(std::sqrt(prm.c_beta * std::max(slack, 0.0)), L_xx);
  return std::min(first, second);
}

double psi2(double Lhat_xx, double Lhat_yx, const StepParameters& prm) {
  // (c_a / 2 g0) (Lxx / Lyx^2) zeta rewritten without the cancellation in
  // zeta = -1 + sqrt(1 + a):  2 (1 - delta) / (Lxx + sqrt(Lxx^2 + 4 (1 - delta) g0 Lyx^2 / c_a)).
  if (!std::isfinite(Lhat_xx) || !std::isfinite(Lhat_yx)) return 0.0;
  const double one_minus_delta = 1.0 - prm.delta;
  const double root = std::sqrt(Lhat_xx * Lhat_xx +
                                4.0 * one_minus_delta * prm.gamma0 * Lhat_yx * Lhat_yx /
                                    prm.c_alpha);
  return safe_div(2.0 * one_minus_delta, Lhat_xx + root);
}

LipschitzConstants compute_constants(const ProblemInstance& inst, UpdateOrder mode,
                                     std::optional<double> dual_bound,
                                     const StepParameters& params,
                                     const ConstantsOptions& opts) {
  if (mode == UpdateOrder::YX && (!dual_bound || !std::isfinite(*dual_bound)))
    throw ConfigError("compute_constants: yx mode requires a finite dual bound B");
  if (dual_bound && !(*dual_bound > 0.0))
    throw ConfigError("compute_constants: dual bound must be positive");

  LipschitzConstants c;
  const auto m = inst.m();
  c.L_f = inst.q_norm(0);
  double sum_sq = 0.0;
  for (Eigen::Index i = 1; i <= m; ++i) sum_sq += sq(inst.q_norm(i));
  c.L_g = std::sqrt(sum_sq);

  if (m > 0) {
    if (const auto enc = inst.primal_set().enclosure()) {
      // grad g(x)' = [Q_i c + q_i]_i + [Q_i (x - c)]_i with ||x - c|| <= r.
      DenseMatrix shifted(inst.n(), m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto k = static_cast<std::size_t>(i + 1);
        shifted.col(i) = inst.Q()[k] * enc->center + inst.q()[k];
      }
      c.B_g = spectral_norm(shifted) + enc->radius * c.L_g;
    } else {
      std::mt19937_64 rng(0x5eedULL);
      std::normal_distribution<double> gauss;
      DenseMatrix jac(m, inst.n());
      for (int s = 0; s < opts.samples; ++s) {
        Vector w(inst.n());
        for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = gauss(rng);
        w *= opts.sampling_radius / std::max(w.norm(), 1e-300);
        const Vector x = project_set(inst.primal_set(), w);
        for (Eigen::Index i = 0; i < m; ++i) {
          const auto k = static_cast<std::size_t>(i + 1);
          jac.row(i) = (inst.Q()[k] * x + inst.q()[k]).transpose();
        }
        c.B_g = std::max(c.B_g, spectral_norm(jac));
      }
      c.B_g_estimated = true;
    }
  }
  c.C_g = c.B_g;

  c.dual_bound_estimate = opts.dual_estimate.value_or(10.0 * (1.0 + inst.q()[0].norm()));
  c.L_xx_estimated = true;
  c.dual_bound_used = dual_bound.value_or(kInf);

  c.L_xx = c.L_f + c.dual_bound_estimate * c.L_g;
  c.L_xy = inst.a_norm() + c.B_g;
  c.Lhat_xx = c.L_g == 0.0 ? c.L_f : c.L_f + c.dual_bound_used * c.L_g;
  c.Lhat_yx = inst.a_norm() + c.C_g;
  c.psi1 = psi1(c.L_xx, c.L_xy, params);
  c.psi2 = psi2(c.Lhat_xx, c.Lhat_yx, params);
  return c;
}

}  // namespace rapdb
