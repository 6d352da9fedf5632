#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rapdb/apdb.hpp"
#include "rapdb/egm.hpp"
#include "rapdb/restart.hpp"

namespace rapdb {

enum class SolverKind { Apdb, Rapdb, RapdbAdaptive, Egm };

struct SolverSpec {
  std::string name;
  SolverKind kind = SolverKind::Apdb;
  UpdateOrder order = UpdateOrder::YX;
};

// apdb-xy | apdb-yx | rapdb-xy | rapdb-yx | rapdb-xy-ada | rapdb-yx-ada | egm
SolverSpec parse_solver(const std::string& name);

// "none" | "fixed:<period>[:avg|:last]" | "adaptive[:<check_period>]"
std::optional<RestartPolicy> parse_restart(const std::string& text);

struct SolveConfig {
  std::string solver = "rapdb-yx";
  bool nonmonotone = false;
  std::optional<RestartPolicy> restart;  // overrides the solver default
  TerminationCriteria stop;
  long budget = 50000;
  double tau_bar = 1.0;
  double eta = 0.7;
  bool warm_tau = false;
  DualBall dual_ball = DualBall::unbounded();
  double egm_stepsize = 0.05;
  bool record_metrics = true;
};

struct Summary {
  std::string solver;
  std::string status;  // converged | budget | diverged
  long iterations = 0;
  long evals = 0;
  long restarts = 0;
  double wall_time = 0.0;
  double stepsize = 0.0;  // EGM only
  Metrics final_metrics;
  std::optional<double> relative_error;

  double evals_per_iteration() const {
    return iterations > 0 ? static_cast<double>(evals) / static_cast<double>(iterations) : 0.0;
  }
};

struct SolveOutcome {
  Summary summary;
  Iterate solution;
  std::vector<TraceRecord> trace;
  std::vector<RestartEvent> restart_log;
};

// Builds the engine configuration for a solver name.
ApdbConfig engine_config(const SolverSpec& spec, const SolveConfig& cfg);
RestartPolicy resolve_policy(const SolverSpec& spec, const SolveConfig& cfg);

SolveOutcome solve(const ProblemInstance& inst, const SolveConfig& cfg,
                   std::optional<Iterate> z0 = std::nullopt);

// Best-of-grid EGM: stepsizes are tried from large to small, each run capped
// at the best iteration count so far.
SolveOutcome solve_egm_tuned(const ProblemInstance& inst, const SolveConfig& cfg,
                             const std::vector<double>& grid);

// High-accuracy objective value used as f* when none is supplied.
double reference_objective(const ProblemInstance& inst, double kkt_tol = 1e-10,
                           long budget = 200000);

std::string trace_csv(const std::vector<TraceRecord>& trace);
nlohmann::json summary_to_json(const Summary& s);
nlohmann::json restart_log_to_json(const std::vector<RestartEvent>& log);

struct TableRow {
  std::string method;
  double iterations = 0.0;  // median over runs
  double wall_time = 0.0;   // median over runs
  double evals_per_iteration = 0.0;
  long runs = 0;
  long converged = 0;
};

// One row per method, in first-seen order.
std::vector<TableRow> compare_table(const std::vector<Summary>& summaries);
nlohmann::json table_to_json(const std::vector<TableRow>& rows);
std::string table_to_text(const std::vector<TableRow>& rows);

double median(std::vector<double> values);

struct BenchConfig {
  Eigen::Index n = 100;
  Eigen::Index m = 5;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  // Entries may carry ":mono" or ":nonmono" suffixes (default mono).
  std::vector<std::string> solvers{"apdb-yx", "rapdb-yx"};
  SolveConfig base;
  std::vector<double> egm_grid = egm_stepsize_grid();
  int threads = 1;
};

struct BenchResult {
  std::vector<Summary> summaries;  // solver labels include the mode suffix
  std::vector<TableRow> table;
};

// Runs every solver on random QCQPs; f* comes from reference_objective.
BenchResult run_bench(const BenchConfig& cfg);

// Worker count from RAPDB_THREADS (at least 1), capped by the job count.
int bench_threads(int jobs);

}  // namespace rapdb
