#include "rapdb/driver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "rapdb/errors.hpp"
#include "rapdb/instances.hpp"

namespace rapdb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

void fill_relative_error(Summary& s, const TerminationCriteria& stop) {
  if (stop.f_ref) s.relative_error = relative_error(s.final_metrics, *stop.f_ref);
}

}  // namespace

SolverSpec parse_solver(const std::string& name) {
  static const std::map<std::string, SolverSpec> table = {
      {"apdb-xy", {"apdb-xy", SolverKind::Apdb, UpdateOrder::XY}},
      {"apdb-yx", {"apdb-yx", SolverKind::Apdb, UpdateOrder::YX}},
      {"rapdb-xy", {"rapdb-xy", SolverKind::Rapdb, UpdateOrder::XY}},
      {"rapdb-yx", {"rapdb-yx", SolverKind::Rapdb, UpdateOrder::YX}},
      {"rapdb-xy-ada", {"rapdb-xy-ada", SolverKind::RapdbAdaptive, UpdateOrder::XY}},
      {"rapdb-yx-ada", {"rapdb-yx-ada", SolverKind::RapdbAdaptive, UpdateOrder::YX}},
      {"egm", {"egm", SolverKind::Egm, UpdateOrder::YX}},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown solver '" + name + "'");
  return it->second;
}

std::optional<RestartPolicy> parse_restart(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  auto to_long = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const long v = std::stol(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("restart spec '" + text + "': bad integer '" + s + "'");
    }
  };
  auto to_point = [&](const std::string& s) {
    if (s == "last") return RestartPoint::Last;
    if (s == "avg" || s == "average") return RestartPoint::Average;
    throw ConfigError("restart spec '" + text + "': point must be last or avg");
  };
  if (parts[0] == "none" && parts.size() == 1) return RestartPolicy::none();
  if (parts[0] == "fixed" && (parts.size() == 2 || parts.size() == 3)) {
    RestartPolicy p = RestartPolicy::fixed(to_long(parts[1]));
    if (parts.size() == 3) std::get<FixedRestart>(p.kind).point = to_point(parts[2]);
    p.validate();
    return p;
  }
  if (parts[0] == "adaptive" && parts.size() <= 2) {
    AdaptiveRestart a;
    a.check_period = 0;  // filled from the solver defaults when 0
    if (parts.size() == 2) a.check_period = to_long(parts[1]);
    return RestartPolicy::adaptive(a);
  }
  throw ConfigError("restart spec '" + text + "' not understood");
}

ApdbConfig engine_config(const SolverSpec& spec, const SolveConfig& cfg) {
  ApdbConfig c = ApdbConfig::defaults(spec.order, cfg.nonmonotone);
  c.eta = cfg.eta;
  c.tau_bar = cfg.tau_bar;
  c.dual_ball = cfg.dual_ball;
  return c;
}

RestartPolicy resolve_policy(const SolverSpec& spec, const SolveConfig& cfg) {
  if (cfg.restart) {
    RestartPolicy p = *cfg.restart;
    if (auto* a = std::get_if<AdaptiveRestart>(&p.kind)) {
      const AdaptiveRestart d = RestartPolicy::adaptive_defaults(spec.order, cfg.nonmonotone);
      if (a->check_period == 0) a->check_period = d.check_period;
      a->warmup = d.warmup;
    }
    return p;
  }
  switch (spec.kind) {
    case SolverKind::Rapdb:
      return RestartPolicy::fixed(RestartPolicy::default_period(spec.order, cfg.nonmonotone));
    case SolverKind::RapdbAdaptive:
      return RestartPolicy::adaptive(RestartPolicy::adaptive_defaults(spec.order, cfg.nonmonotone));
    default:
      return RestartPolicy::none();
  }
}

SolveOutcome solve(const ProblemInstance& inst, const SolveConfig& cfg, std::optional<Iterate> z0) {
  const SolverSpec spec = parse_solver(cfg.solver);
  const Iterate start = z0 ? *z0 : Iterate::zeros(inst.n(), inst.p(), inst.m());
  inst.check_iterate(start);
  SolveOutcome out;
  out.summary.solver = spec.name;
  const auto t0 = Clock::now();

  if (spec.kind == SolverKind::Egm) {
    EgmOptions eo;
    eo.dual_ball = cfg.dual_ball;
    eo.stop = cfg.stop;
    eo.compute_metrics = cfg.record_metrics;
    EgmResult r = run_egm(inst, cfg.egm_stepsize, start, cfg.budget, eo);
    out.summary.wall_time = seconds_since(t0);
    out.summary.status = r.diverged ? "diverged" : (r.converged ? "converged" : "budget");
    out.summary.iterations = r.iterations;
    out.summary.evals = r.trace.empty() ? 0 : r.trace.back().evals_total;
    out.summary.stepsize = cfg.egm_stepsize;
    out.summary.final_metrics = r.final_metrics;
    out.solution = std::move(r.last);
    out.trace = std::move(r.trace);
    fill_relative_error(out.summary, cfg.stop);
    return out;
  }

  const ApdbConfig ac = engine_config(spec, cfg);
  const RestartPolicy policy = resolve_policy(spec, cfg);
  RestartOptions ro;
  ro.budget = cfg.budget;
  ro.stop = cfg.stop;
  ro.warm_tau = cfg.warm_tau;
  ro.compute_metrics = cfg.record_metrics;
  RestartedResult r = run_restarted(inst, ac, policy, start, ro);
  out.summary.wall_time = seconds_since(t0);
  out.summary.status = r.converged ? "converged" : "budget";
  out.summary.iterations = r.iterations;
  out.summary.evals = r.evals_total;
  out.summary.restarts = static_cast<long>(r.restart_log.size());
  out.summary.final_metrics = r.final_metrics;
  out.solution = std::move(r.solution);
  out.trace = std::move(r.trace);
  out.restart_log = std::move(r.restart_log);
  fill_relative_error(out.summary, cfg.stop);
  return out;
}

SolveOutcome solve_egm_tuned(const ProblemInstance& inst, const SolveConfig& cfg,
                             const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("egm tuning grid is empty");
  std::vector<double> order = grid;
  std::sort(order.begin(), order.end(), std::greater<>());
  std::optional<SolveOutcome> best;
  auto score = [](const SolveOutcome& o) {
    const Metrics& m = o.summary.final_metrics;
    return o.summary.relative_error ? *o.summary.relative_error : m.kkt_residual + m.infeas;
  };
  SolveConfig c = cfg;
  c.solver = "egm";
  const auto t0 = Clock::now();
  for (double s : order) {
    c.egm_stepsize = s;
    if (best && best->summary.status == "converged") c.budget = best->summary.iterations;
    SolveOutcome o = solve(inst, c);
    if (o.summary.status == "diverged") continue;
    const bool better =
        !best ||
        (o.summary.status == "converged" &&
         (best->summary.status != "converged" || o.summary.iterations < best->summary.iterations)) ||
        (o.summary.status != "converged" && best->summary.status != "converged" &&
         score(o) < score(*best));
    if (better) best = std::move(o);
  }
  if (!best) {
    c.egm_stepsize = order.back();
    c.budget = cfg.budget;
    best = solve(inst, c);
  }
  best->summary.wall_time = seconds_since(t0);
  return *best;
}

double reference_objective(const ProblemInstance& inst, double kkt_tol, long budget) {
  SolveConfig c;
  c.solver = "rapdb-yx";
  c.nonmonotone = true;
  c.budget = budget;
  c.stop.criterion = Criterion::Conic;
  c.stop.eps_kkt = kkt_tol;
  c.stop.eps_feas = kkt_tol;
  const SolveOutcome o = solve(inst, c);
  return o.summary.final_metrics.objective;
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
  std::ostringstream os;
  os << "iter,tau,sigma,gamma,evals,kkt,infeas,subopt,gap_xi,restart_flag\n";
  for (const auto& r : trace) {
    os << r.iter << ',' << fmt(r.tau) << ',' << fmt(r.sigma) << ',' << fmt(r.gamma) << ','
       << r.evals_total << ',' << fmt(r.kkt) << ',' << fmt(r.infeas) << ',' << fmt(r.subopt) << ','
       << fmt(r.gap_xi) << ',' << (r.restart ? 1 : 0) << '\n';
  }
  return os.str();
}

nlohmann::json summary_to_json(const Summary& s) {
  nlohmann::json j;
  j["solver"] = s.solver;
  j["status"] = s.status;
  j["iterations"] = s.iterations;
  j["evals"] = s.evals;
  j["restarts"] = s.restarts;
  j["wall_time"] = s.wall_time;
  j["evals_per_iteration"] = s.evals_per_iteration();
  if (s.stepsize > 0.0) j["stepsize"] = s.stepsize;
  const Metrics& m = s.final_metrics;
  j["metrics"] = {{"kkt", m.kkt_residual},        {"stationarity", m.stationarity},
                  {"primal_eq", m.primal_eq},     {"complementarity", m.complementarity},
                  {"infeas", m.infeas},           {"objective", m.objective},
                  {"mean_violation", m.mean_violation}};
  if (s.relative_error) j["relative_error"] = *s.relative_error;
  return j;
}

nlohmann::json restart_log_to_json(const std::vector<RestartEvent>& log) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : log) {
    nlohmann::json j{{"outer", e.outer}, {"iteration", e.iteration}, {"trigger", e.trigger}};
    if (e.gap_new) j["gap_new"] = *e.gap_new;
    if (e.gap_ref) j["gap_ref"] = *e.gap_ref;
    arr.push_back(std::move(j));
  }
  return arr;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<TableRow> compare_table(const std::vector<Summary>& summaries) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const Summary*>> groups;
  for (const auto& s : summaries) {
    if (!groups.count(s.solver)) order.push_back(s.solver);
    groups[s.solver].push_back(&s);
  }
  std::vector<TableRow> rows;
  for (const auto& name : order) {
    TableRow row;
    row.method = name;
    std::vector<double> it, wt, ratio;
    for (const Summary* s : groups[name]) {
      it.push_back(static_cast<double>(s->iterations));
      wt.push_back(s->wall_time);
      ratio.push_back(s->evals_per_iteration());
      ++row.runs;
      if (s->status == "converged") ++row.converged;
    }
    row.iterations = median(it);
    row.wall_time = median(wt);
    row.evals_per_iteration = median(ratio);
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json table_to_json(const std::vector<TableRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"method", r.method},
                   {"median_iterations", r.iterations},
                   {"median_wall_time", r.wall_time},
                   {"evals_per_iteration", r.evals_per_iteration},
                   {"runs", r.runs},
                   {"converged", r.converged}});
  return arr;
}

std::string table_to_text(const std::vector<TableRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(22) << "method" << std::right << std::setw(12) << "iter"
     << std::setw(12) << "time(s)" << std::setw(12) << "evals/iter" << std::setw(10) << "conv"
     << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(22) << r.method << std::right << std::setw(12) << r.iterations
       << std::setw(12) << std::setprecision(4) << r.wall_time << std::setw(12)
       << std::setprecision(4) << r.evals_per_iteration << std::setw(6) << r.converged << '/'
       << r.runs << '\n';
  }
  return os.str();
}

int bench_threads(int jobs) {
  int t = 1;
  if (const char* env = std::getenv("RAPDB_THREADS")) {
    try {
      t = std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw ConfigError(std::string("RAPDB_THREADS must be an integer, got '") + env + "'");
    }
  }
  return std::max(1, std::min(t, jobs));
}

BenchResult run_bench(const BenchConfig& cfg) {
  struct Job {
    std::size_t seed_index;
    std::size_t solver_index;
  };
  const std::size_t ns = cfg.seeds.size();
  const std::size_t nv = cfg.solvers.size();
  std::vector<Summary> results(ns * nv);

  // Instances and reference values are shared by every solver of a seed.
  std::vector<std::optional<ProblemInstance>> instances(ns);
  std::vector<double> f_ref(ns);
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr error;

  auto worker_pool = [&](std::size_t count, auto&& body) {
    next = 0;
    const int threads = std::min<int>(cfg.threads, static_cast<int>(count));
    auto work = [&]() {
      for (;;) {
        const std::size_t i = next++;
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mutex);
          if (!error) error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  };

  worker_pool(ns, [&](std::size_t s) {
    instances[s].emplace(random_qcqp(cfg.n, cfg.m, cfg.seeds[s]));
    f_ref[s] = cfg.base.stop.f_ref ? *cfg.base.stop.f_ref : reference_objective(*instances[s]);
  });

  worker_pool(ns * nv, [&](std::size_t job) {
    const std::size_t s = job / nv;
    const std::size_t v = job % nv;
    std::string label = cfg.solvers[v];
    std::string name = label;
    bool nonmono = false;
    if (const auto pos = label.find(':'); pos != std::string::npos) {
      name = label.substr(0, pos);
      const std::string mode = label.substr(pos + 1);
      if (mode == "nonmono")
        nonmono = true;
      else if (mode != "mono")
        throw ConfigError("solver mode must be mono or nonmono in '" + label + "'");
    }
    SolveConfig c = cfg.base;
    c.solver = name;
    if (name.rfind("apdb", 0) == 0 || name == "egm") c.restart.reset();
    c.nonmonotone = nonmono;
    c.stop.criterion = Criterion::Relative;
    c.stop.f_ref = f_ref[s];
    c.record_metrics = false;
    SolveOutcome o = name == "egm" ? solve_egm_tuned(*instances[s], c, cfg.egm_grid)
                                   : solve(*instances[s], c);
    o.summary.solver = label;
    results[job] = std::move(o.summary);
  });

  BenchResult out;
  // Seed-major order keeps the table's method order stable.
  out.summaries = results;
  out.table = compare_table(out.summaries);
  return out;
}

}  // namespace rapdb
