#include "rapdb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rapdb/errors.hpp"

namespace rapdb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Squared complementarity distance, accumulated block by block.
double complementarity_sq(const Cone& cone, const Vector& lam, const Vector& g) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, NonnegOrthant>) {
          return lam.cwiseMin(-g).squaredNorm();
        } else if constexpr (std::is_same_v<T, SecondOrderCone>) {
          if (k.dim == 1) return sq(std::min(lam(0), -g(0)));
          const double s = lam(0);
          const Vector u = lam.tail(k.dim - 1);
          const double un = u.norm();
          const double scale = 1.0 + std::abs(s);
          if (s <= 1e-14 * scale && un <= 1e-14 * scale)
            return project_cone(Cone::soc(k.dim), g).squaredNorm();
          if (s - un > 1e-10 * scale) return g.squaredNorm();
          // Boundary point: the normal cone of K at lam is the ray {c (-s, u)}.
          Vector d(k.dim);
          d(0) = -un;
          d.tail(k.dim - 1) = u;
          d /= d.norm();
          const double c = std::max(0.0, g.dot(d));
          return (g - c * d).squaredNorm();
        } else {
          double total = 0.0;
          Eigen::Index off = 0;
          for (const Cone& part : k.parts) {
            const Eigen::Index d = part.dim();
            total += complementarity_sq(part, lam.segment(off, d), g.segment(off, d));
            off += d;
          }
          return total;
        }
      },
      cone.kind);
}

double slater_radius_impl(const Cone& cone, const Vector& g) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, NonnegOrthant>) {
          return (-g).minCoeff();
        } else if constexpr (std::is_same_v<T, SecondOrderCone>) {
          if (k.dim == 1) return -g(0);
          return -(g(0) + g.tail(k.dim - 1).norm()) / std::sqrt(2.0);
        } else {
          double r = kInf;
          Eigen::Index off = 0;
          for (const Cone& part : k.parts) {
            const Eigen::Index d = part.dim();
            r = std::min(r, slater_radius_impl(part, g.segment(off, d)));
            off += d;
          }
          return r;
        }
      },
      cone.kind);
}

double mean_positive_violation(const ProblemInstance& inst, const PointEval& pe) {
  const Eigen::Index m = inst.multiplier_set() ? 0 : inst.m();
  const Eigen::Index count = m + inst.p();
  if (count == 0) return 0.0;
  double total = pe.eq_residual.cwiseAbs().sum();
  if (m > 0) {
    if (inst.cone().is_orthant())
      total += pe.g.cwiseMax(0.0).sum();
    else
      total += project_dual_cone(inst.cone(), pe.g).norm();
  }
  return total / static_cast<double>(count);
}

}  // namespace

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

double conic_complementarity(const Cone& cone, const Vector& lam, const Vector& g) {
  if (lam.size() != cone.dim() || g.size() != cone.dim())
    throw InputError("conic_complementarity: dimension mismatch");
  if (cone.dim() == 0) return 0.0;
  return std::sqrt(complementarity_sq(cone, lam, g));
}

double infeasibility(const ProblemInstance& inst, const PointEval& pe) {
  double s = pe.eq_residual.squaredNorm();
  if (!inst.multiplier_set() && inst.m() > 0)
    s += project_dual_cone(inst.cone(), pe.g).squaredNorm();
  return std::sqrt(s);
}

double infeasibility(const ProblemInstance& inst, const Vector& x) {
  return infeasibility(inst, evaluate_point(inst, x));
}

Metrics metrics_at(const ProblemInstance& inst, const Iterate& z, const PointEval& pe,
                   const Vector& grad_x, std::optional<double> f_ref) {
  Metrics mt;
  mt.stationarity = (z.x - project_set(inst.primal_set(), z.x - grad_x)).norm();
  mt.primal_eq = pe.eq_residual.norm();
  if (inst.m() > 0) {
    if (const auto& ms = inst.multiplier_set())
      mt.complementarity = (z.lam - project_set(*ms, z.lam + pe.g)).norm();
    else
      mt.complementarity = conic_complementarity(inst.cone(), z.lam, pe.g);
  }
  mt.kkt_residual = mt.stationarity + mt.primal_eq + mt.complementarity;
  mt.infeas = infeasibility(inst, pe);
  mt.objective = pe.f;
  mt.mean_violation = mean_positive_violation(inst, pe);
  if (f_ref) mt.subopt_abs = pe.f - *f_ref;
  return mt;
}

Metrics kkt_residual(const ProblemInstance& inst, const Iterate& z, std::optional<double> f_ref) {
  inst.check_iterate(z);
  const PointEval pe = evaluate_point(inst, z.x);
  return metrics_at(inst, z, pe, grad_x_coupling(inst, pe, z.v, z.lam), f_ref);
}

// ---------------------------------------------------------------------------
// Smoothed gap
// ---------------------------------------------------------------------------

GapResult smoothed_gap(const ProblemInstance& inst, const Iterate& z, double xi,
                       const DualBall& ball, double subsolver_tol, const Vector* x_warm,
                       int max_iterations) {
  if (!(xi > 0.0)) throw ConfigError("smoothed_gap: xi must be positive");
  inst.check_iterate(z);
  GapResult res;
  const PointEval pe = evaluate_point(inst, z.x);

  // Dual part in closed form: Phi is affine in y.
  Vector v_hat = z.v + pe.eq_residual / (2.0 * xi);
  Vector lam_hat = z.lam + pe.g / (2.0 * xi);
  inst.project_dual(ball, v_hat, lam_hat);
  const double dist_y = (v_hat - z.v).squaredNorm() + (lam_hat - z.lam).squaredNorm();
  res.upper = coupling_value(inst, pe, v_hat, lam_hat) - xi * dist_y;

  // Primal part: min over X of Phi(x', y) + xi ||x' - x||^2.
  DenseMatrix H = weighted_hessian(inst, z.lam);
  Vector c = inst.q()[0];
  double constant = inst.r()(0) + xi * z.x.squaredNorm();
  for (Eigen::Index i = 0; i < inst.m(); ++i) {
    const auto k = static_cast<std::size_t>(i + 1);
    c += z.lam(i) * inst.q()[k];
    constant += z.lam(i) * inst.r()(i + 1);
  }
  if (inst.p() > 0) {
    c.noalias() += inst.A().transpose() * z.v;
    constant -= z.v.dot(inst.b());
  }
  c -= 2.0 * xi * z.x;
  H.diagonal().array() += 2.0 * xi;
  const SmoothObjective h = quadratic_objective(std::move(H), std::move(c), constant, 2.0 * xi);

  SubsolveOptions so;
  so.tol = subsolver_tol;
  so.max_iterations = max_iterations;
  const Vector& start = (x_warm && x_warm->size() == inst.n()) ? *x_warm : z.x;
  const SubsolveResult sr = solve_strongly_convex(h, inst.primal_set(), start, so);
  res.lower = sr.value;
  res.slack = sr.suboptimality_bound;
  res.reliable = sr.converged;
  res.subsolver_iterations = sr.iterations;
  res.value = res.upper - res.lower;
  res.maximizer = {sr.x, std::move(v_hat), std::move(lam_hat)};
  return res;
}

double SmoothedGapEvaluator::current_tolerance() const {
  double tol = base_tol_;
  if (last_gap_ && *last_gap_ > 0.0) tol = std::min(tol, 0.01 * xi_ * *last_gap_);
  return std::max(tol, 1e-13);
}

GapResult SmoothedGapEvaluator::evaluate(const ProblemInstance& inst, const Iterate& z) {
  GapResult r = smoothed_gap(inst, z, xi_, ball_, current_tolerance(),
                             warm_.size() == inst.n() ? &warm_ : nullptr);
  warm_ = r.maximizer.x;
  last_gap_ = r.value;
  return r;
}

// ---------------------------------------------------------------------------
// Slater radius and dual bound
// ---------------------------------------------------------------------------

double slater_radius(const Cone& cone, const Vector& g_tilde) {
  if (g_tilde.size() != cone.dim()) throw InputError("slater_radius: dimension mismatch");
  if (cone.dim() == 0) throw SlaterViolation("slater_radius: empty cone");
  const double r = slater_radius_impl(cone, g_tilde);
  if (!(r > 0.0))
    throw SlaterViolation("point is not strictly feasible: interior radius " + std::to_string(r));
  return r;
}

DualBoundResult dual_bound(const ProblemInstance& inst, const Vector& x_tilde,
                           const Vector& v_probe, const Vector& lam_probe,
                           double subsolver_tol) {
  if (x_tilde.size() != inst.n() || v_probe.size() != inst.p() || lam_probe.size() != inst.m())
    throw InputError("dual_bound: dimension mismatch");
  if (!inst.primal_set().contains(x_tilde, 1e-9))
    throw SlaterViolation("dual_bound: Slater point lies outside the primal set");
  if (!inst.dual_feasible(lam_probe)) throw InputError("dual_bound: probe multipliers infeasible");

  DualBoundResult res;
  if (inst.m() == 0 && inst.p() == 0) {
    res.B_lambda = res.B_v = res.B = kInf;
    res.warning = "no constraints: the dual bound is unbounded";
    return res;
  }
  const PointEval pe = evaluate_point(inst, x_tilde);
  res.f_tilde = pe.f;
  if (pe.eq_residual.norm() > 1e-8 * (1.0 + inst.b().norm()))
    throw SlaterViolation("dual_bound: Slater point violates Ax = b");

  if (inst.m() > 0) {
    if (inst.multiplier_set()) {
      // Multipliers already live on a compact set.
      const auto enc = inst.multiplier_set()->enclosure();
      res.B_lambda = enc ? enc->center.norm() + enc->radius : kInf;
    } else {
      res.r_star = slater_radius(inst.cone(), pe.g);
      // q(v, lam) = min_X Phi(x, (v, lam)); certified from below.
      DenseMatrix H = weighted_hessian(inst, lam_probe);
      Vector c = inst.q()[0];
      double constant = inst.r()(0);
      for (Eigen::Index i = 0; i < inst.m(); ++i) {
        const auto k = static_cast<std::size_t>(i + 1);
        c += lam_probe(i) * inst.q()[k];
        constant += lam_probe(i) * inst.r()(i + 1);
      }
      if (inst.p() > 0) {
        c.noalias() += inst.A().transpose() * v_probe;
        constant -= v_probe.dot(inst.b());
      }
      const double lmin = min_eigenvalue(H);
      const SimpleSet& X = inst.primal_set();
      SubsolveOptions so;
      so.tol = subsolver_tol;
      const double sigma = std::max(0.0, lmin);
      const SmoothObjective h = quadratic_objective(std::move(H), std::move(c), constant, sigma);
      SubsolveResult sr;
      if (sigma > 1e-12 * std::max(1.0, h.smoothness)) {
        sr = solve_strongly_convex(h, X, x_tilde, so);
      } else if (X.bounded()) {
        sr = solve_convex(h, X, x_tilde, so);
      } else {
        throw InputError("dual_bound: q(v, lam) cannot be certified on an unbounded set "
                         "without strong convexity");
      }
      if (!std::isfinite(sr.suboptimality_bound))
        throw InputError("dual_bound: q(v, lam) could not be certified");
      res.q_value = sr.value - sr.suboptimality_bound;
      res.B_lambda = std::max(0.0, (res.f_tilde - res.q_value) / res.r_star);
    }
  }

  if (inst.p() > 0) {
    const auto enc = inst.primal_set().enclosure();
    if (!enc) {
      res.B_v = kInf;
      res.warning = "unbounded primal set: no bound on the equality multipliers";
    } else {
      const Vector grad_center = inst.Q()[0] * enc->center + inst.q()[0];
      const double max_grad = grad_center.norm() + enc->radius * inst.q_norm(0);
      const LipschitzConstants lc = compute_constants(inst, UpdateOrder::XY, std::nullopt);
      const double smin = min_singular_value(inst.A());
      res.B_v = (max_grad + lc.C_g * res.B_lambda) / smin;
    }
  }
  res.B = 1.01 * std::sqrt(sq(res.B_v) + sq(res.B_lambda));
  return res;
}

// ---------------------------------------------------------------------------
// Termination
// ---------------------------------------------------------------------------

double relative_error(const Metrics& m, double f_ref) {
  return std::max(std::abs(m.objective - f_ref) / (1.0 + std::abs(f_ref)), m.mean_violation);
}

bool check_termination(const Metrics& m, const TerminationCriteria& c) {
  if (c.criterion == Criterion::Relative && c.f_ref) return relative_error(m, *c.f_ref) <= c.eps;
  return m.kkt_residual <= c.eps_kkt && m.infeas <= c.eps_feas;
}

}  // namespace rapdb
