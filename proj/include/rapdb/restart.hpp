#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rapdb/apdb.hpp"
#include "rapdb/diagnostics.hpp"

namespace rapdb {

enum class RestartPoint { Last, Average };

struct NoRestart {};
struct FixedRestart {
  long period = 800;
  RestartPoint point = RestartPoint::Last;
};
struct AdaptiveRestart {
  double xi = 0.04;
  double q = 0.5;
  long warmup = 50;
  long check_period = 200;
  RestartPoint point = RestartPoint::Last;
};

struct RestartPolicy {
  std::variant<NoRestart, FixedRestart, AdaptiveRestart> kind;

  static RestartPolicy none() { return {NoRestart{}}; }
  static RestartPolicy fixed(long period, RestartPoint point = RestartPoint::Last) {
    return {FixedRestart{period, point}};
  }
  static RestartPolicy adaptive(AdaptiveRestart a) { return {a}; }

  // Periods used in the random-QCQP experiments.
  static long default_period(UpdateOrder order, bool nonmonotone);
  static AdaptiveRestart adaptive_defaults(UpdateOrder order, bool nonmonotone);

  void validate() const;
  bool is_none() const { return std::holds_alternative<NoRestart>(kind); }
};

struct RestartEvent {
  long outer = 0;      // index t of the epoch that ends here
  long iteration = 0;  // global accepted iteration
  std::string trigger; // "fixed" or "adaptive"
  std::optional<double> gap_new;
  std::optional<double> gap_ref;
  Iterate point;                      // restart point z^{t+1,0}
  std::optional<Iterate> reference;   // point whose gap is the reference
};

struct RestartOptions {
  long budget = 50000;  // total accepted iterations
  std::optional<TerminationCriteria> stop;
  bool warm_tau = false;
  bool compute_metrics = true;
  double subsolver_tol = 1e-9;
};

struct RestartedResult {
  Iterate solution;  // last iterate
  Iterate average;   // average of the final epoch
  std::vector<TraceRecord> trace;
  std::vector<RestartEvent> restart_log;
  long iterations = 0;
  long evals_total = 0;
  bool converged = false;
  Metrics final_metrics;
};

RestartedResult run_restarted(const ProblemInstance& inst, const ApdbConfig& config,
                              const RestartPolicy& policy, const Iterate& z_init,
                              const RestartOptions& opts = {});

}  // namespace rapdb
