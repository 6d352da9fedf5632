#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "rapdb/geometry.hpp"
#include "rapdb/problem.hpp"

namespace rapdb {

struct ApdbConfig {
  UpdateOrder order = UpdateOrder::YX;
  bool nonmonotone = false;  // c_nm = 1
  double eta = 0.7;
  double tau_bar = 1.0;
  StepParameters params;
  DualBall dual_ball = DualBall::unbounded();
  int max_backtracks = 200;
  // Keep one record per test evaluation (debug verbosity).
  bool record_trials = false;

  // Order-specific defaults: xy (0.25, 0.3, 0.4), yx (0.4, 0, 0.5).
  static ApdbConfig defaults(UpdateOrder order, bool nonmonotone = false);
  // Throws ConfigError.
  void validate() const;
  double c_nm() const { return nonmonotone ? 1.0 : 0.0; }
};

struct StepState {
  double tau_prev = 0.0;
  double tau = 0.0;
  double sigma_prev = 0.0;
  double sigma = 0.0;
  double gamma = 0.0;
  double theta = 1.0;
  double alpha = 0.0;  // alpha_k
  double beta = 0.0;   // beta_k
  long iteration = 0;  // accepted iterations since the last (re)start
};

// Weighted sums realizing the ergodic average with t_k = sigma_k / sigma_0.
struct AverageState {
  Vector x_cum;
  Vector v_cum;
  Vector lam_cum;
  double T = 0.0;

  void reset(Eigen::Index n, Eigen::Index p, Eigen::Index m);
  void add(double t, const Iterate& z);
  Iterate average() const;
};

// Stepsizes and weights entering one evaluation of the test function.
struct TestCoefficients {
  double tau = 0.0;
  double sigma = 0.0;
  double theta = 1.0;
  double alpha = 0.0;       // alpha_k
  double beta = 0.0;        // beta_k
  double alpha_next = 0.0;  // alpha_{k+1}
  double beta_next = 0.0;   // beta_{k+1}
};

// Test functions evaluated from scratch at a candidate and the previous point.
double test_function_xy(const ProblemInstance& inst, const TestCoefficients& c,
                        const Iterate& candidate, const Iterate& previous);
double test_function_yx(const ProblemInstance& inst, const TestCoefficients& c,
                        const Iterate& candidate, const Iterate& previous);
// Right-hand side of the acceptance test: -(delta/tau) D_p - (delta/sigma) D_d.
double acceptance_bound(const TestCoefficients& c, double delta,
                        const Iterate& candidate, const Iterate& previous);

struct TrialRecord {
  long iteration = 0;
  double tau = 0.0;
  double sigma = 0.0;
  double test_value = 0.0;
  double bound = 0.0;
  bool accepted = false;
};

struct StepInfo {
  double tau_initial = 0.0;  // first trial tau of the iteration
  double tau = 0.0;          // accepted tau_k
  double sigma = 0.0;
  double gamma = 0.0;        // gamma_k used in the step
  double theta = 0.0;
  int evals = 0;
  double weight = 0.0;       // t_k
  TestCoefficients coefficients;
  double test_value = 0.0;
  double bound = 0.0;
};

class ApdbEngine {
 public:
  ApdbEngine(const ProblemInstance& inst, ApdbConfig config, const Iterate& z0);

  // One accepted iteration. Throws NonConvergence after max_backtracks
  // shrinks.
  StepInfo step();

  // Reinitializes the step state and the averages at z. The first trial tau
  // is tau_bar unless tau_start is given.
  void restart(const Iterate& z, std::optional<double> tau_start = std::nullopt);

  const Iterate& last() const { return z_; }
  const Iterate& previous() const { return z_prev_; }
  Iterate average() const { return avg_.average(); }
  const AverageState& averages() const { return avg_; }
  const StepState& state() const { return st_; }
  const ApdbConfig& config() const { return cfg_; }
  const ProblemInstance& instance() const { return inst_; }

  // Cached quantities at the last iterate.
  const PointEval& last_eval() const { return pe_; }
  const Vector& last_grad_x() const { return gx_; }

  long evals_total() const { return evals_total_; }
  long iterations_total() const { return iterations_total_; }
  double last_accepted_tau() const { return last_tau_; }

  std::vector<TrialRecord>& trials() { return trials_; }

 private:
  void init_state(double tau0);
  StepInfo step_xy();
  StepInfo step_yx();
  void project_y(Vector& v, Vector& lam) const;
  void finish(StepInfo& info, Iterate&& z_new, PointEval&& pe_new);

  const ProblemInstance& inst_;
  ApdbConfig cfg_;
  StepState st_;
  AverageState avg_;

  Iterate z_;
  Iterate z_prev_;
  PointEval pe_;
  Vector gx_;        // grad_x Phi(x^k, y^k)
  Vector gx_prev_;   // grad_x Phi(x^{k-1}, y^{k-1})
  DualGradient gy_;       // grad_y Phi(x^k)
  DualGradient gy_prev_;  // grad_y Phi(x^{k-1})

  long evals_total_ = 0;
  long iterations_total_ = 0;
  double last_tau_ = 0.0;
  double avg_sigma0_ = 0.0;
  std::vector<TrialRecord> trials_;
};

// One trace row. Metric fields are NaN when not evaluated.
struct TraceRecord {
  long iter = 0;
  double tau = 0.0;
  double tau_initial = 0.0;
  double sigma = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
  double weight_total = 0.0;  // T_k
  int evals_iter = 0;
  long evals_total = 0;
  bool restart = false;
  double kkt = std::numeric_limits<double>::quiet_NaN();
  double infeas = std::numeric_limits<double>::quiet_NaN();
  double subopt = std::numeric_limits<double>::quiet_NaN();
  double gap_xi = std::numeric_limits<double>::quiet_NaN();
};

struct RunOptions {
  bool compute_metrics = false;
  std::optional<double> f_ref;
};

struct RunResult {
  Iterate average;
  Iterate last;
  double T = 0.0;
  long evals_total = 0;
  std::vector<TraceRecord> trace;
};

// K accepted iterations from z_init.
RunResult run_apdb(const ProblemInstance& inst, const ApdbConfig& config,
                   const Iterate& z_init, long K, const RunOptions& opts = {});

}  // namespace rapdb
