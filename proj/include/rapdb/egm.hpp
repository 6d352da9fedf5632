#pragma once

#include <optional>
#include <vector>

#include "rapdb/apdb.hpp"
#include "rapdb/diagnostics.hpp"

namespace rapdb {

struct EgmOptions {
  DualBall dual_ball = DualBall::unbounded();
  std::optional<TerminationCriteria> stop;
  bool compute_metrics = false;
  double divergence_factor = 1e8;
};

struct EgmResult {
  Iterate last;
  Iterate average;  // uniform average of the extrapolated points
  std::vector<TraceRecord> trace;
  long iterations = 0;
  bool converged = false;
  bool diverged = false;
  Metrics final_metrics;
};

// Extragradient with one constant stepsize s for both players:
//   z~ = P(z - s F(z)),  z+ = P(z - s F(z~)),  F = (grad_x Phi, -grad_y Phi).
EgmResult run_egm(const ProblemInstance& inst, double s, const Iterate& z_init, long K,
                  const EgmOptions& opts = {});

// Log-spaced stepsizes from lo to hi, inclusive.
std::vector<double> egm_stepsize_grid(double lo = 1e-3, double hi = 1.0, int count = 13);

}  // namespace rapdb
