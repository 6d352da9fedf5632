#include "rapdb/egm.hpp"

#include <cmath>

#include "rapdb/errors.hpp"

namespace rapdb {

namespace {

double iterate_norm(const Iterate& z) {
  return std::sqrt(z.x.squaredNorm() + z.v.squaredNorm() + z.lam.squaredNorm());
}

// P(z - s F(z)) with F evaluated at w.
Iterate extragradient_step(const ProblemInstance& inst, const DualBall& ball, const Iterate& z,
                           const PointEval& pe_w, const Iterate& w, double s) {
  Iterate out;
  out.x = project_set(inst.primal_set(), z.x - s * grad_x_coupling(inst, pe_w, w.v, w.lam));
  out.v = z.v + s * pe_w.eq_residual;
  out.lam = z.lam + s * pe_w.g;
  inst.project_dual(ball, out.v, out.lam);
  return out;
}

}  // namespace

EgmResult run_egm(const ProblemInstance& inst, double s, const Iterate& z_init, long K,
                  const EgmOptions& opts) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("egm: stepsize must be nonnegative");
  if (K < 1) throw ConfigError("egm: K must be at least 1");
  opts.dual_ball.validate();
  inst.check_iterate(z_init);

  EgmResult res;
  Iterate z{project_set(inst.primal_set(), z_init.x), z_init.v, z_init.lam};
  inst.project_dual(opts.dual_ball, z.v, z.lam);
  const double limit = opts.divergence_factor * (1.0 + iterate_norm(z));
  Iterate sum = Iterate::zeros(inst.n(), inst.p(), inst.m());
  PointEval pe = evaluate_point(inst, z.x);
  const std::optional<double> f_ref = opts.stop ? opts.stop->f_ref : std::nullopt;
  const bool want_metrics = opts.compute_metrics || opts.stop.has_value();

  for (long k = 1; k <= K; ++k) {
    const Iterate half = extragradient_step(inst, opts.dual_ball, z, pe, z, s);
    const PointEval pe_half = evaluate_point(inst, half.x);
    z = extragradient_step(inst, opts.dual_ball, z, pe_half, half, s);
    pe = evaluate_point(inst, z.x);
    sum.x += half.x;
    sum.v += half.v;
    sum.lam += half.lam;
    res.iterations = k;

    TraceRecord row;
    row.iter = k;
    row.tau = s;
    row.tau_initial = s;
    row.sigma = s;
    row.gamma = 1.0;
    row.theta = 1.0;
    row.weight_total = static_cast<double>(k);
    row.evals_iter = 2;
    row.evals_total = 2 * k;
    bool stop_now = false;
    if (want_metrics) {
      res.final_metrics = metrics_at(inst, z, pe, grad_x_coupling(inst, pe, z.v, z.lam), f_ref);
      row.kkt = res.final_metrics.kkt_residual;
      row.infeas = res.final_metrics.infeas;
      if (res.final_metrics.subopt_abs) row.subopt = *res.final_metrics.subopt_abs;
      if (opts.stop) stop_now = check_termination(res.final_metrics, *opts.stop);
    }
    res.trace.push_back(row);
    if (!(iterate_norm(z) <= limit)) {
      res.diverged = true;
      break;
    }
    if (stop_now) {
      res.converged = true;
      break;
    }
  }
  res.last = z;
  const double cnt = static_cast<double>(res.iterations);
  res.average = {sum.x / cnt, sum.v / cnt, sum.lam / cnt};
  if (!want_metrics && !res.diverged) res.final_metrics = kkt_residual(inst, z, f_ref);
  return res;
}

std::vector<double> egm_stepsize_grid(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi >= lo) || count < 1) throw ConfigError("egm grid: invalid range");
  std::vector<double> out;
  if (count == 1) return {lo};
  const double step = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i) out.push_back(lo * std::exp(step * i));
  out.back() = hi;
  return out;
}

}  // namespace rapdb
