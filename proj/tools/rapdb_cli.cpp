#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rapdb/diagnostics.hpp"
#include "rapdb/driver.hpp"
#include "rapdb/errors.hpp"
#include "rapdb/instances.hpp"
#include "rapdb/problem_io.hpp"

using namespace rapdb;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kNotConverged = 2;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto dots = tok.find("..");
    try {
      if (dots != std::string::npos) {
        const auto lo = std::stoull(tok.substr(0, dots));
        const auto hi = std::stoull(tok.substr(dots + 2));
        if (hi < lo) throw ConfigError("seed range '" + tok + "' is empty");
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      } else {
        out.push_back(std::stoull(tok));
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad seed list '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

RestartPolicy restart_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  RestartPoint point = RestartPoint::Last;
  if (j.contains("point")) {
    const std::string p = j["point"].get<std::string>();
    if (p == "average" || p == "avg")
      point = RestartPoint::Average;
    else if (p != "last")
      throw ConfigError("restart.point must be last or average");
  }
  if (type == "none") return RestartPolicy::none();
  if (type == "fixed") return RestartPolicy::fixed(j.at("period").get<long>(), point);
  if (type == "adaptive") {
    AdaptiveRestart a;
    a.xi = j.value("xi", a.xi);
    a.q = j.value("q", a.q);
    a.warmup = j.value("warmup", a.warmup);
    a.check_period = j.value("check_period", 0L);
    a.point = point;
    return RestartPolicy::adaptive(a);
  }
  throw ConfigError("restart.type must be none, fixed or adaptive");
}

Criterion parse_criterion(const std::string& s) {
  if (s == "relative") return Criterion::Relative;
  if (s == "conic") return Criterion::Conic;
  throw ConfigError("criterion must be relative or conic");
}

void apply_config_file(SolveConfig& c, const json& j) {
  if (j.contains("solver")) c.solver = j["solver"].get<std::string>();
  if (j.contains("nonmonotone")) c.nonmonotone = j["nonmonotone"].get<bool>();
  if (j.contains("restart")) c.restart = restart_from_json(j["restart"]);
  if (j.contains("eps")) c.stop.eps = j["eps"].get<double>();
  if (j.contains("eps_kkt")) c.stop.eps_kkt = j["eps_kkt"].get<double>();
  if (j.contains("eps_feas")) c.stop.eps_feas = j["eps_feas"].get<double>();
  if (j.contains("criterion")) c.stop.criterion = parse_criterion(j["criterion"].get<std::string>());
  if (j.contains("f_ref")) c.stop.f_ref = j["f_ref"].get<double>();
  if (j.contains("budget")) c.budget = j["budget"].get<long>();
  if (j.contains("eta")) c.eta = j["eta"].get<double>();
  if (j.contains("tau_bar")) c.tau_bar = j["tau_bar"].get<double>();
  if (j.contains("warm_tau")) c.warm_tau = j["warm_tau"].get<bool>();
  if (j.contains("stepsize")) c.egm_stepsize = j["stepsize"].get<double>();
}

DualBall dual_ball_from(const std::string& spec, const ProblemInstance& inst) {
  if (spec.empty() || spec == "none") return DualBall::unbounded();
  if (spec == "auto") {
    const Vector x0 = project_set(inst.primal_set(), Vector::Zero(inst.n()));
    const DualBoundResult b = dual_bound(inst, x0, Vector::Zero(inst.p()), Vector::Zero(inst.m()));
    if (!std::isfinite(b.B)) throw ConfigError("dual ball auto: bound is not finite");
    return DualBall::joint(b.B);
  }
  try {
    return DualBall::joint(std::stod(spec));
  } catch (const std::logic_error&) {
    throw ConfigError("--dual-ball must be none, auto or a radius");
  }
}

Iterate load_point(const std::string& path, const ProblemInstance& inst) {
  return iterate_from_json(load_json(path), inst);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rapdb: restarted accelerated primal-dual solver for convex QCQPs"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate an instance or dataset");
  std::string family = "random-qcqp";
  long n = 50, m = 5, samples = 200, dim = 10;
  std::uint64_t seed = 0;
  std::string out_path, data_path, analytic_name = "ball";
  double lambda_reg = 1.0;
  bool no_standardize = false;
  gen->add_option("--family", family, "random-qcqp | kml | kml-dataset | analytic");
  gen->add_option("--n", n, "Variables (random-qcqp)");
  gen->add_option("--m", m, "Constraints (random-qcqp)");
  gen->add_option("--seed", seed, "Seed");
  gen->add_option("--data", data_path, "CSV dataset (kml)");
  gen->add_option("--lambda", lambda_reg, "Regularization (kml)");
  gen->add_flag("--no-standardize", no_standardize, "Use features as given (kml)");
  gen->add_option("--samples", samples, "Samples (kml-dataset)");
  gen->add_option("--dim", dim, "Features (kml-dataset)");
  gen->add_option("--name", analytic_name, "ball | box_lp | eq_quadratic | strongly_convex");
  gen->add_option("--out", out_path, "Output file")->required();

  // solve
  auto* sol = app.add_subcommand("solve", "Solve one instance");
  std::string problem_path, config_path, solver, restart_spec, criterion, dual_ball_spec;
  std::string trace_path, summary_path, log_path, solution_path, init_path;
  double eps = 0, eps_kkt = 0, eps_feas = 0, f_ref = 0, eta = 0, tau_bar = 0, stepsize = 0;
  long budget = 0;
  bool nonmono = false, warm_tau = false;
  sol->add_option("--problem", problem_path, "Problem JSON")->required();
  sol->add_option("--config", config_path, "Run configuration JSON");
  auto* o_solver = sol->add_option("--solver", solver, "apdb-xy|apdb-yx|rapdb-xy|rapdb-yx|rapdb-*-ada|egm");
  auto* o_nonmono = sol->add_flag("--nonmonotone", nonmono, "Non-monotone stepsize search");
  auto* o_restart = sol->add_option("--restart", restart_spec, "none | fixed:K[:last|avg] | adaptive[:period]");
  auto* o_eps = sol->add_option("--eps", eps, "Tolerance of the relative criterion");
  auto* o_eps_kkt = sol->add_option("--eps-kkt", eps_kkt, "KKT tolerance");
  auto* o_eps_feas = sol->add_option("--eps-feas", eps_feas, "Infeasibility tolerance");
  auto* o_crit = sol->add_option("--criterion", criterion, "relative | conic");
  auto* o_fref = sol->add_option("--f-ref", f_ref, "Reference optimal value");
  auto* o_budget = sol->add_option("--budget", budget, "Maximum iterations");
  auto* o_eta = sol->add_option("--eta", eta, "Backtracking factor");
  auto* o_tau = sol->add_option("--tau-bar", tau_bar, "Initial stepsize");
  auto* o_warm = sol->add_flag("--warm-tau", warm_tau, "Carry tau across restarts");
  auto* o_step = sol->add_option("--stepsize", stepsize, "EGM stepsize");
  sol->add_option("--dual-ball", dual_ball_spec, "none | auto | radius");
  sol->add_option("--init", init_path, "Initial point JSON {x, v, lambda}");
  sol->add_option("--out", trace_path, "Trace CSV");
  sol->add_option("--summary", summary_path, "Summary JSON");
  sol->add_option("--restart-log", log_path, "Restart log JSON");
  sol->add_option("--solution", solution_path, "Final point JSON");

  // bench
  auto* bench = app.add_subcommand("bench", "Run solvers over seeded random instances");
  std::string bench_family = "random-qcqp", seeds_text = "0..4", solvers_text = "apdb-yx,rapdb-yx";
  std::string table_path, bench_restart;
  long bn = 100, bm = 5, bbudget = 50000;
  double beps = 1e-7;
  bool bnonmono = false;
  bench->add_option("--family", bench_family, "random-qcqp");
  bench->add_option("--n", bn, "Variables");
  bench->add_option("--m", bm, "Constraints");
  bench->add_option("--seeds", seeds_text, "Seeds, e.g. 0..4 or 1,3,5");
  bench->add_option("--solvers", solvers_text, "Comma list; suffix :mono or :nonmono");
  bench->add_flag("--nonmonotone", bnonmono, "Default mode for solvers without a suffix");
  bench->add_option("--eps", beps, "Relative tolerance");
  bench->add_option("--budget", bbudget, "Maximum iterations per run");
  bench->add_option("--summary", table_path, "Table JSON");
  bench->add_option("--restart", bench_restart, "Restart override for rapdb solvers");

  // gap
  auto* gap = app.add_subcommand("gap", "Evaluate the smoothed duality gap at a point");
  std::string gap_problem, gap_point, gap_ball;
  double xi = 0.04, gap_tol = 1e-9;
  gap->add_option("--problem", gap_problem, "Problem JSON")->required();
  gap->add_option("--point", gap_point, "Point JSON {x, v, lambda}")->required();
  gap->add_option("--xi", xi, "Smoothing parameter");
  gap->add_option("--tol", gap_tol, "Subsolver tolerance");
  gap->add_option("--dual-ball", gap_ball, "none | auto | radius");

  // bound
  auto* bound = app.add_subcommand("bound", "Dual bound from a Slater point");
  std::string bound_problem, slater_path;
  bound->add_option("--problem", bound_problem, "Problem JSON")->required();
  bound->add_option("--slater", slater_path, "Slater point JSON {x} (default: projection of 0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*gen) {
      if (family == "random-qcqp") {
        save_problem(random_qcqp(n, m, seed), out_path);
      } else if (family == "kml") {
        if (data_path.empty()) throw ConfigError("--data is required for kml");
        KmlData d = load_kml_csv(data_path);
        if (!no_standardize) standardize_features(d.features);
        save_problem(kml_instance(d, lambda_reg), out_path);
      } else if (family == "kml-dataset") {
        save_kml_csv(out_path, synthetic_kml_dataset(samples, dim, seed));
      } else if (family == "analytic") {
        AnalyticCase c = analytic_name == "ball"           ? analytic_ball()
                         : analytic_name == "box_lp"       ? analytic_box_lp()
                         : analytic_name == "eq_quadratic" ? analytic_eq_quadratic()
                         : analytic_name == "strongly_convex"
                             ? analytic_strongly_convex()
                             : throw ConfigError("unknown analytic instance '" + analytic_name + "'");
        save_problem(c.instance, out_path);
      } else {
        throw ConfigError("unknown family '" + family + "'");
      }
      return kOk;
    }

    if (*sol) {
      const ProblemInstance inst = load_problem(problem_path);
      SolveConfig c;
      if (!config_path.empty()) apply_config_file(c, load_json(config_path));
      if (o_solver->count()) c.solver = solver;
      if (o_nonmono->count()) c.nonmonotone = nonmono;
      if (o_restart->count()) c.restart = parse_restart(restart_spec);
      if (o_crit->count()) c.stop.criterion = parse_criterion(criterion);
      if (o_eps->count()) {
        c.stop.eps = eps;
        if (!o_eps_kkt->count()) c.stop.eps_kkt = eps;
        if (!o_eps_feas->count()) c.stop.eps_feas = eps;
      }
      if (o_eps_kkt->count()) c.stop.eps_kkt = eps_kkt;
      if (o_eps_feas->count()) c.stop.eps_feas = eps_feas;
      if (o_fref->count()) c.stop.f_ref = f_ref;
      if (o_budget->count()) c.budget = budget;
      if (o_eta->count()) c.eta = eta;
      if (o_tau->count()) c.tau_bar = tau_bar;
      if (o_warm->count()) c.warm_tau = warm_tau;
      if (o_step->count()) c.egm_stepsize = stepsize;
      c.dual_ball = dual_ball_from(dual_ball_spec, inst);
      std::optional<Iterate> z0;
      if (!init_path.empty()) z0 = load_point(init_path, inst);

      SolveOutcome o = solve(inst, c, z0);
      if (!trace_path.empty()) write_text_atomic(trace_path, trace_csv(o.trace));
      if (!summary_path.empty()) write_text_atomic(summary_path, summary_to_json(o.summary).dump(2) + "\n");
      if (!log_path.empty()) write_text_atomic(log_path, restart_log_to_json(o.restart_log).dump(2) + "\n");
      if (!solution_path.empty())
        write_text_atomic(solution_path, iterate_to_json(o.solution).dump(2) + "\n");
      std::cout << summary_to_json(o.summary).dump() << '\n';
      return o.summary.status == "converged" ? kOk : kNotConverged;
    }

    if (*bench) {
      if (bench_family != "random-qcqp") throw ConfigError("bench supports random-qcqp only");
      BenchConfig bc;
      bc.n = bn;
      bc.m = bm;
      bc.seeds = parse_seeds(seeds_text);
      bc.solvers = split_list(solvers_text);
      if (bnonmono)
        for (auto& s : bc.solvers)
          if (s.find(':') == std::string::npos) s += ":nonmono";
      bc.base.stop.eps = beps;
      bc.base.budget = bbudget;
      bc.base.restart = parse_restart(bench_restart);
      bc.threads = bench_threads(static_cast<int>(bc.seeds.size() * bc.solvers.size()));
      const BenchResult r = run_bench(bc);
      json out;
      out["table"] = table_to_json(r.table);
      out["runs"] = json::array();
      for (const auto& s : r.summaries) out["runs"].push_back(summary_to_json(s));
      if (!table_path.empty()) write_text_atomic(table_path, out.dump(2) + "\n");
      std::cout << table_to_text(r.table);
      return kOk;
    }

    if (*gap) {
      const ProblemInstance inst = load_problem(gap_problem);
      const Iterate z = load_point(gap_point, inst);
      const GapResult g = smoothed_gap(inst, z, xi, dual_ball_from(gap_ball, inst), gap_tol);
      json j{{"gap", g.value}, {"upper", g.upper}, {"lower", g.lower},
             {"slack", g.slack}, {"reliable", g.reliable}};
      std::cout << j.dump() << '\n';
      return g.reliable ? kOk : kNotConverged;
    }

    if (*bound) {
      const ProblemInstance inst = load_problem(bound_problem);
      Vector x = project_set(inst.primal_set(), Vector::Zero(inst.n()));
      if (!slater_path.empty()) x = vector_from_json(load_json(slater_path).at("x"), "x");
      const DualBoundResult b = dual_bound(inst, x, Vector::Zero(inst.p()), Vector::Zero(inst.m()));
      auto num = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
      json j{{"B_lambda", num(b.B_lambda)}, {"B_v", num(b.B_v)}, {"B", num(b.B)},
             {"r_star", b.r_star}, {"q_lower", b.q_value}, {"f_tilde", b.f_tilde}};
      if (!b.warning.empty()) {
        j["warning"] = b.warning;
        std::cerr << "warning: " << b.warning << '\n';
      }
      std::cout << j.dump() << '\n';
      return kOk;
    }
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}
