#include "rapdb/restart.hpp"

#include "rapdb/errors.hpp"

namespace rapdb {

long RestartPolicy::default_period(UpdateOrder order, bool nonmonotone) {
  if (order == UpdateOrder::YX) return nonmonotone ? 400 : 800;
  return nonmonotone ? 1000 : 2000;
}

AdaptiveRestart RestartPolicy::adaptive_defaults(UpdateOrder order, bool nonmonotone) {
  AdaptiveRestart a;
  if (order == UpdateOrder::YX) {
    a.warmup = 50;
    a.check_period = nonmonotone ? 200 : 500;
  } else {
    a.warmup = 100;
    a.check_period = 500;
  }
  return a;
}

void RestartPolicy::validate() const {
  if (const auto* f = std::get_if<FixedRestart>(&kind)) {
    if (f->period < 1) throw ConfigError("restart period must be at least 1");
  } else if (const auto* a = std::get_if<AdaptiveRestart>(&kind)) {
    if (!(a->xi > 0.0)) throw ConfigError("adaptive restart: xi must be positive");
    if (!(a->q > 0.0 && a->q < 1.0)) throw ConfigError("adaptive restart: q must lie in (0, 1)");
    if (a->warmup < 1) throw ConfigError("adaptive restart: warmup must be at least 1");
    if (a->check_period < 1) throw ConfigError("adaptive restart: check_period must be at least 1");
  }
}

namespace {

Iterate restart_candidate(const ApdbEngine& eng, RestartPoint point) {
  return point == RestartPoint::Last ? eng.last() : eng.average();
}

}  // namespace

RestartedResult run_restarted(const ProblemInstance& inst, const ApdbConfig& config,
                              const RestartPolicy& policy, const Iterate& z_init,
                              const RestartOptions& opts) {
  policy.validate();
  if (opts.budget < 1) throw ConfigError("budget must be at least 1");
  ApdbEngine eng(inst, config, z_init);
  RestartedResult res;
  res.trace.reserve(static_cast<std::size_t>(std::min<long>(opts.budget, 1 << 20)));

  const auto* fixed = std::get_if<FixedRestart>(&policy.kind);
  const auto* adaptive = std::get_if<AdaptiveRestart>(&policy.kind);
  std::optional<SmoothedGapEvaluator> gap_eval;
  if (adaptive) gap_eval.emplace(adaptive->xi, config.dual_ball, opts.subsolver_tol);

  const std::optional<double> f_ref = opts.stop ? opts.stop->f_ref : std::nullopt;
  const bool want_metrics = opts.compute_metrics || opts.stop.has_value();
  std::optional<double> gap_ref;
  std::optional<Iterate> ref_point;
  long outer = 0;

  auto do_restart = [&](long iter, const std::string& trigger, Iterate point,
                        std::optional<double> g_new, std::optional<double> g_ref,
                        std::optional<Iterate> reference) {
    const std::optional<double> tau0 =
        opts.warm_tau ? std::optional<double>(eng.last_accepted_tau()) : std::nullopt;
    eng.restart(point, tau0);
    TraceRecord row;
    row.iter = iter;
    row.tau = eng.state().tau;
    row.tau_initial = eng.state().tau;
    row.sigma = eng.state().sigma;
    row.gamma = eng.state().gamma;
    row.evals_total = eng.evals_total();
    row.restart = true;
    if (g_new) row.gap_xi = *g_new;
    res.trace.push_back(row);
    res.restart_log.push_back({outer, iter, trigger, g_new, g_ref, eng.last(), std::move(reference)});
    ++outer;
  };

  for (long k = 1; k <= opts.budget; ++k) {
    const StepInfo info = eng.step();
    TraceRecord row;
    row.iter = k;
    row.tau = info.tau;
    row.tau_initial = info.tau_initial;
    row.sigma = info.sigma;
    row.gamma = info.gamma;
    row.theta = info.theta;
    row.weight_total = eng.averages().T;
    row.evals_iter = info.evals;
    row.evals_total = eng.evals_total();
    bool stop_now = false;
    if (want_metrics) {
      res.final_metrics = metrics_at(inst, eng.last(), eng.last_eval(), eng.last_grad_x(), f_ref);
      row.kkt = res.final_metrics.kkt_residual;
      row.infeas = res.final_metrics.infeas;
      if (res.final_metrics.subopt_abs) row.subopt = *res.final_metrics.subopt_abs;
      if (opts.stop) stop_now = check_termination(res.final_metrics, *opts.stop);
    }

    std::optional<Iterate> restart_point;
    std::optional<double> g_new;
    std::string trigger;
    if (!stop_now && k < opts.budget) {
      if (fixed && eng.state().iteration >= fixed->period) {
        restart_point = restart_candidate(eng, fixed->point);
        trigger = "fixed";
      } else if (adaptive && k >= adaptive->warmup &&
                 (k - adaptive->warmup) % adaptive->check_period == 0) {
        Iterate cand = restart_candidate(eng, adaptive->point);
        const GapResult g = gap_eval->evaluate(inst, cand);
        row.gap_xi = g.value;
        if (!gap_ref) {
          gap_ref = g.value;
          ref_point = cand;
        } else if (g.value <= adaptive->q * *gap_ref) {
          g_new = g.value;
          restart_point = std::move(cand);
          trigger = "adaptive";
        }
      }
    }
    res.trace.push_back(row);
    if (stop_now) {
      res.converged = true;
      break;
    }
    if (restart_point) {
      const std::optional<double> old_ref = gap_ref;
      std::optional<Iterate> old_point = ref_point;
      if (g_new) {
        gap_ref = g_new;
        ref_point = *restart_point;
      }
      do_restart(k, trigger, std::move(*restart_point), g_new, old_ref, std::move(old_point));
    }
  }

  res.solution = eng.last();
  res.average = eng.averages().T > 0.0 ? eng.average() : eng.last();
  res.iterations = eng.iterations_total();
  res.evals_total = eng.evals_total();
  if (!want_metrics) res.final_metrics = kkt_residual(inst, res.solution, f_ref);
  return res;
}

}  // namespace rapdb
