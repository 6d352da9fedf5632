#pragma once

#include <functional>
#include <vector>

#include "rapdb/geometry.hpp"

namespace rapdb {

// Smooth objective h with modulus sigma and gradient Lipschitz constant L.
struct SmoothObjective {
  // Returns h(x) and writes grad h(x).
  std::function<double(const Vector& x, Vector& grad)> evaluate;
  double strong_convexity = 0.0;
  double smoothness = 1.0;
};

// h(x) = 0.5 x'Hx + c'x + const with caller-supplied modulus sigma. L is the
// power-iteration spectral norm of H, floored at sigma.
SmoothObjective quadratic_objective(DenseMatrix H, Vector c, double constant,
                                    double strong_convexity);

struct SubsolveOptions {
  double tol = 1e-9;  // prox-gradient residual ||x - P(x - grad h(x) / L)||
  int max_iterations = 50000;
  // Records h at every accepted iterate when non-null.
  std::vector<double>* value_history = nullptr;
};

struct SubsolveResult {
  Vector x;
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  // Upper bound on value - min h, from the residual and the moduli.
  double suboptimality_bound = 0.0;
};

// Accelerated projected gradient with function-value restart. Requires
// sigma > 0 and L >= sigma; throws ConfigError otherwise.
SubsolveResult solve_strongly_convex(const SmoothObjective& h, const SimpleSet& set,
                                     const Vector& x_init, const SubsolveOptions& opts = {});

// Same scheme for merely convex h (sigma may be 0). The suboptimality bound is
// the Frank-Wolfe gap when the set is bounded, +inf otherwise.
SubsolveResult solve_convex(const SmoothObjective& h, const SimpleSet& set,
                            const Vector& x_init, const SubsolveOptions& opts = {});

}  // namespace rapdb
