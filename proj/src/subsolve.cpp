#include "rapdb/subsolve.hpp"

#include <cmath>
#include <limits>

#include "rapdb/errors.hpp"

namespace rapdb {

namespace {

SubsolveResult accelerated_gradient(const SmoothObjective& h, const SimpleSet& set,
                                    const Vector& x_init, const SubsolveOptions& opts) {
  const double L = h.smoothness;
  const double step = 1.0 / L;

  SubsolveResult res;
  Vector x = project_set(set, x_init);
  Vector grad_x(x.size());
  double fx = h.evaluate(x, grad_x);
  if (opts.value_history) opts.value_history->push_back(fx);

  Vector x_prev = x;
  Vector y = x;
  Vector grad_y = grad_x;
  double t = 1.0;
  Vector candidate;
  Vector grad_c(x.size());

  auto residual_at = [&](const Vector& pt, const Vector& g) {
    return (pt - project_set(set, pt - step * g)).norm();
  };

  res.residual = residual_at(x, grad_x);
  int it = 0;
  for (; it < opts.max_iterations && res.residual > opts.tol; ++it) {
    candidate = project_set(set, y - step * grad_y);
    double fc = h.evaluate(candidate, grad_c);
    if (fc > fx) {
      // Momentum overshoot: drop it and take a plain projected step from x.
      t = 1.0;
      candidate = project_set(set, x - step * grad_x);
      // Monotone in exact arithmetic; any increase here is rounding.
      fc = h.evaluate(candidate, grad_c);
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    t = t_next;
    x_prev.swap(x);
    x = candidate;
    fx = fc;
    grad_x = grad_c;
    if (opts.value_history) opts.value_history->push_back(fx);

    y = x + beta * (x - x_prev);
    if (beta != 0.0) {
      h.evaluate(y, grad_y);
    } else {
      y = x;
      grad_y = grad_x;
    }
    res.residual = residual_at(x, grad_x);
  }
  res.x = std::move(x);
  res.value = fx;
  res.iterations = it;
  res.converged = res.residual <= opts.tol;
  return res;
}

}  // namespace

SmoothObjective quadratic_objective(DenseMatrix H, Vector c, double constant,
                                    double strong_convexity) {
  const double lmax = spectral_norm(H);
  SmoothObjective obj;
  obj.strong_convexity = strong_convexity;
  obj.smoothness = std::max(lmax, strong_convexity);
  if (obj.smoothness <= 0.0) obj.smoothness = 1.0;
  obj.evaluate = [H = std::move(H), c = std::move(c), constant](const Vector& x, Vector& grad) {
    grad.noalias() = H * x;
    const double val = 0.5 * x.dot(grad) + c.dot(x) + constant;
    grad += c;
    return val;
  };
  return obj;
}

SubsolveResult solve_strongly_convex(const SmoothObjective& h, const SimpleSet& set,
                                     const Vector& x_init, const SubsolveOptions& opts) {
  if (!(h.strong_convexity > 0.0))
    throw ConfigError("solve_strongly_convex: strong convexity modulus must be positive");
  if (h.smoothness < h.strong_convexity)
    throw ConfigError("solve_strongly_convex: smoothness must be at least the modulus");
  if (!(opts.tol > 0.0)) throw ConfigError("solve_strongly_convex: tol must be positive");
  SubsolveResult res = accelerated_gradient(h, set, x_init, opts);
  // Gradient mapping G = L (x - x+) gives h(x+) - h* <= ||G||^2 / (2 sigma); the
  // returned point is x, so add the one-step descent slack ||G||^2 / (2 L).
  const double G = h.smoothness * res.residual;
  res.suboptimality_bound = G * G / (2.0 * h.strong_convexity) + G * G / (2.0 * h.smoothness);
  return res;
}

SubsolveResult solve_convex(const SmoothObjective& h, const SimpleSet& set,
                            const Vector& x_init, const SubsolveOptions& opts) {
  if (!(h.smoothness > 0.0)) throw ConfigError("solve_convex: smoothness must be positive");
  SubsolveResult res = accelerated_gradient(h, set, x_init, opts);
  Vector grad(res.x.size());
  h.evaluate(res.x, grad);
  if (const auto s = set.linear_minimizer(grad))
    res.suboptimality_bound = std::max(0.0, grad.dot(res.x - *s));
  else
    res.suboptimality_bound = std::numeric_limits<double>::infinity();
  return res;
}

}  // namespace rapdb
