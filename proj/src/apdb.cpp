#include "rapdb/apdb.hpp"

#include <cmath>
#include <sstream>

#include "rapdb/diagnostics.hpp"
#include "rapdb/errors.hpp"
#include "rapdb/kernels.hpp"

namespace rapdb {

namespace {

std::vector<double> hessian_weights(const Vector& lam) {
  std::vector<double> w(static_cast<std::size_t>(lam.size()) + 1);
  w[0] = 1.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) w[static_cast<std::size_t>(i) + 1] = lam(i);
  return w;
}

// sum_i d_i (Q_i x + q_i) + A' dv, i.e. grad_x Phi(x, y') - grad_x Phi(x, y).
Vector dual_shift_gradient(const ProblemInstance& inst, const PointEval& pe,
                           const Vector& dv, const Vector& dlam) {
  Vector out = Vector::Zero(inst.n());
  for (Eigen::Index i = 0; i < inst.m(); ++i) {
    if (dlam(i) == 0.0) continue;
    const auto k = static_cast<std::size_t>(i + 1);
    out += dlam(i) * (pe.Qx[k] + inst.q()[k]);
  }
  if (inst.p() > 0) out.noalias() += inst.A().transpose() * dv;
  return out;
}

// Q(lam) (a.x - b.x) from the cached products.
Vector hessian_difference(const PointEval& a, const PointEval& b, const Vector& lam) {
  std::vector<Vector> diff(a.Qx.size());
  for (std::size_t i = 0; i < a.Qx.size(); ++i) diff[i] = a.Qx[i] - b.Qx[i];
  Vector out;
  kernels::weighted_sum(diff, hessian_weights(lam), out);
  return out;
}

double dual_gradient_distance_sq(const DualGradient& a, const DualGradient& b) {
  return (a.v - b.v).squaredNorm() + (a.lam - b.lam).squaredNorm();
}

std::string state_dump(const StepState& s, double tau_trial) {
  std::ostringstream os;
  os << "iteration " << s.iteration << ": tau_trial=" << tau_trial << " tau_prev=" << s.tau_prev
     << " sigma_prev=" << s.sigma_prev << " gamma=" << s.gamma << " alpha=" << s.alpha
     << " beta=" << s.beta;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

ApdbConfig ApdbConfig::defaults(UpdateOrder order, bool nonmonotone) {
  ApdbConfig c;
  c.order = order;
  c.nonmonotone = nonmonotone;
  if (order == UpdateOrder::XY)
    c.params = StepParameters{0.25, 0.3, 0.4, 1.0};
  else
    c.params = StepParameters{0.4, 0.0, 0.5, 1.0};
  return c;
}

void ApdbConfig::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
  if (!(tau_bar > 0.0) || !std::isfinite(tau_bar)) throw ConfigError("tau_bar must be positive");
  if (!(params.gamma0 > 0.0)) throw ConfigError("gamma0 must be positive");
  if (!(params.c_alpha > 0.0)) throw ConfigError("c_alpha must be positive");
  if (!(params.delta >= 0.0 && params.delta < 1.0)) throw ConfigError("delta must lie in [0, 1)");
  if (max_backtracks < 1) throw ConfigError("max_backtracks must be at least 1");
  if (order == UpdateOrder::XY) {
    if (!(params.c_beta > 0.0)) throw ConfigError("xy order requires c_beta > 0");
    if (params.c_alpha + params.c_beta + params.delta > 1.0)
      throw ConfigError("xy order requires c_alpha + c_beta + delta <= 1");
  } else {
    if (params.c_beta != 0.0) throw ConfigError("yx order requires c_beta = 0");
    if (params.c_alpha + params.delta > 1.0)
      throw ConfigError("yx order requires c_alpha + delta <= 1");
  }
  dual_ball.validate();
}

// ---------------------------------------------------------------------------
// Averages
// ---------------------------------------------------------------------------

void AverageState::reset(Eigen::Index n, Eigen::Index p, Eigen::Index m) {
  x_cum = Vector::Zero(n);
  v_cum = Vector::Zero(p);
  lam_cum = Vector::Zero(m);
  T = 0.0;
}

void AverageState::add(double t, const Iterate& z) {
  x_cum += t * z.x;
  v_cum += t * z.v;
  lam_cum += t * z.lam;
  T += t;
}

Iterate AverageState::average() const {
  if (T <= 0.0) throw ConfigError("average requested before any accepted iteration");
  return {x_cum / T, v_cum / T, lam_cum / T};
}

// ---------------------------------------------------------------------------
// Test functions from scratch
// ---------------------------------------------------------------------------

double test_function_xy(const ProblemInstance& inst, const TestCoefficients& c,
                        const Iterate& cand, const Iterate& prev) {
  const PointEval pe_new = evaluate_point(inst, cand.x);
  const PointEval pe_old = evaluate_point(inst, prev.x);
  const Vector g_new_new = grad_x_coupling(inst, pe_new, cand.v, cand.lam);
  const Vector g_new_old = grad_x_coupling(inst, pe_new, prev.v, prev.lam);
  const Vector g_old_old = grad_x_coupling(inst, pe_old, prev.v, prev.lam);
  const double Dp = bregman_p(cand.x, prev.x);
  const double Dd = bregman_d(cand.v, cand.lam, prev.v, prev.lam);
  return (g_new_new - g_new_old).squaredNorm() / (2.0 * c.alpha_next) - Dd / c.sigma +
         (g_new_old - g_old_old).squaredNorm() / (2.0 * c.beta_next) -
         (1.0 / c.tau - c.theta * (c.alpha + c.beta)) * Dp;
}

double test_function_yx(const ProblemInstance& inst, const TestCoefficients& c,
                        const Iterate& cand, const Iterate& prev) {
  const PointEval pe_new = evaluate_point(inst, cand.x);
  const PointEval pe_old = evaluate_point(inst, prev.x);
  const double phi_new = coupling_value(inst, pe_new, cand.v, cand.lam);
  const double phi_old = coupling_value(inst, pe_old, cand.v, cand.lam);
  const Vector g_old = grad_x_coupling(inst, pe_old, cand.v, cand.lam);
  const double Dp = bregman_p(cand.x, prev.x);
  const double Dd = bregman_d(cand.v, cand.lam, prev.v, prev.lam);
  const double gy_diff = dual_gradient_distance_sq(grad_y_coupling(pe_new), grad_y_coupling(pe_old));
  return phi_new - phi_old - g_old.dot(cand.x - prev.x) - Dp / c.tau +
         gy_diff / (2.0 * c.alpha_next) - (1.0 / c.sigma - c.theta * c.alpha) * Dd;
}

double acceptance_bound(const TestCoefficients& c, double delta, const Iterate& cand,
                        const Iterate& prev) {
  return -(delta / c.tau) * bregman_p(cand.x, prev.x) -
         (delta / c.sigma) * bregman_d(cand.v, cand.lam, prev.v, prev.lam);
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

ApdbEngine::ApdbEngine(const ProblemInstance& inst, ApdbConfig config, const Iterate& z0)
    : inst_(inst), cfg_(std::move(config)) {
  cfg_.validate();
  if (inst_.multiplier_set() && !cfg_.dual_ball.is_unbounded())
    throw ConfigError("dual ball cannot be combined with a multiplier set");
  restart(z0);
}

void ApdbEngine::project_y(Vector& v, Vector& lam) const { inst_.project_dual(cfg_.dual_ball, v, lam); }

void ApdbEngine::restart(const Iterate& z, std::optional<double> tau_start) {
  inst_.check_iterate(z);
  z_.x = project_set(inst_.primal_set(), z.x);
  z_.v = z.v;
  z_.lam = z.lam;
  project_y(z_.v, z_.lam);
  z_prev_ = z_;
  pe_ = evaluate_point(inst_, z_.x);
  gx_ = grad_x_coupling(inst_, pe_, z_.v, z_.lam);
  gx_prev_ = gx_;
  gy_ = grad_y_coupling(pe_);
  gy_prev_ = gy_;
  avg_.reset(inst_.n(), inst_.p(), inst_.m());
  const double tau0 = tau_start.value_or(cfg_.tau_bar);
  if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw ConfigError("initial tau must be positive");
  init_state(tau0);
}

void ApdbEngine::init_state(double tau0) {
  const auto& p = cfg_.params;
  st_ = StepState{};
  st_.tau_prev = tau0;
  st_.tau = tau0;
  st_.gamma = p.gamma0;
  st_.sigma_prev = p.gamma0 * tau0;
  st_.sigma = st_.sigma_prev;
  if (cfg_.order == UpdateOrder::XY) {
    st_.alpha = p.c_alpha / tau0;
    st_.beta = p.gamma0 * p.c_beta / st_.sigma_prev;
  } else {
    st_.alpha = p.c_alpha / st_.sigma_prev;
    st_.beta = 0.0;
  }
}

StepInfo ApdbEngine::step() {
  return cfg_.order == UpdateOrder::XY ? step_xy() : step_yx();
}

StepInfo ApdbEngine::step_xy() {
  const auto& p = cfg_.params;
  StepInfo info;
  info.tau_initial = st_.tau;
  info.gamma = st_.gamma;
  double tau = st_.tau;
  for (int trial = 0;; ++trial) {
    if (trial > cfg_.max_backtracks)
      throw NonConvergence("backtracking exceeded " + std::to_string(cfg_.max_backtracks) +
                           " shrinks; " + state_dump(st_, tau));
    TestCoefficients c;
    c.tau = tau;
    c.sigma = st_.gamma * tau;
    c.theta = st_.sigma_prev / c.sigma;
    c.alpha = st_.alpha;
    c.beta = st_.beta;
    c.alpha_next = p.c_alpha / tau;
    c.beta_next = p.gamma0 * p.c_beta / c.sigma;

    const Vector s = (1.0 + c.theta) * gx_ - c.theta * gx_prev_;
    Iterate cand;
    cand.x = project_set(inst_.primal_set(), z_.x - tau * s);
    PointEval pe_new = evaluate_point(inst_, cand.x);
    cand.v = z_.v + c.sigma * pe_new.eq_residual;
    cand.lam = z_.lam + c.sigma * pe_new.g;
    project_y(cand.v, cand.lam);

    const double Dp = bregman_p(cand.x, z_.x);
    const double Dd = bregman_d(cand.v, cand.lam, z_.v, z_.lam);
    const Vector t1 = dual_shift_gradient(inst_, pe_new, cand.v - z_.v, cand.lam - z_.lam);
    const Vector t2 = hessian_difference(pe_new, pe_, z_.lam);
    const double E = t1.squaredNorm() / (2.0 * c.alpha_next) - Dd / c.sigma +
                     t2.squaredNorm() / (2.0 * c.beta_next) -
                     (1.0 / tau - c.theta * (c.alpha + c.beta)) * Dp;
    const double bound = -(p.delta / tau) * Dp - (p.delta / c.sigma) * Dd;
    const bool accept = E <= bound;
    ++info.evals;
    ++evals_total_;
    if (cfg_.record_trials) trials_.push_back({iterations_total_, tau, c.sigma, E, bound, accept});
    if (accept) {
      info.coefficients = c;
      info.test_value = E;
      info.bound = bound;
      st_.alpha = c.alpha_next;
      st_.beta = c.beta_next;
      finish(info, std::move(cand), std::move(pe_new));
      return info;
    }
    tau *= cfg_.eta;
  }
}

StepInfo ApdbEngine::step_yx() {
  const auto& p = cfg_.params;
  StepInfo info;
  info.tau_initial = st_.tau;
  info.gamma = st_.gamma;
  double tau = st_.tau;
  for (int trial = 0;; ++trial) {
    if (trial > cfg_.max_backtracks)
      throw NonConvergence("backtracking exceeded " + std::to_string(cfg_.max_backtracks) +
                           " shrinks; " + state_dump(st_, tau));
    TestCoefficients c;
    c.tau = tau;
    c.sigma = st_.gamma * tau;
    c.theta = st_.sigma_prev / c.sigma;
    c.alpha = st_.alpha;
    c.beta = 0.0;
    c.alpha_next = p.c_alpha / c.sigma;
    c.beta_next = 0.0;

    Iterate cand;
    cand.v = z_.v + c.sigma * ((1.0 + c.theta) * gy_.v - c.theta * gy_prev_.v);
    cand.lam = z_.lam + c.sigma * ((1.0 + c.theta) * gy_.lam - c.theta * gy_prev_.lam);
    project_y(cand.v, cand.lam);
    const Vector gx_mixed = grad_x_coupling(inst_, pe_, cand.v, cand.lam);
    cand.x = project_set(inst_.primal_set(), z_.x - tau * gx_mixed);
    PointEval pe_new = evaluate_point(inst_, cand.x);

    const double Dp = bregman_p(cand.x, z_.x);
    const double Dd = bregman_d(cand.v, cand.lam, z_.v, z_.lam);
    // Phi(., y) is quadratic, so the Bregman-type remainder is exactly half the
    // curvature along the step.
    const double remainder = 0.5 * curvature_term(inst_, pe_new, pe_, cand.lam);
    const double gy_diff = (pe_new.eq_residual - pe_.eq_residual).squaredNorm() +
                           (pe_new.g - pe_.g).squaredNorm();
    const double E = remainder - Dp / tau + gy_diff / (2.0 * c.alpha_next) -
                     (1.0 / c.sigma - c.theta * c.alpha) * Dd;
    const double bound = -(p.delta / tau) * Dp - (p.delta / c.sigma) * Dd;
    const bool accept = E <= bound;
    ++info.evals;
    ++evals_total_;
    if (cfg_.record_trials) trials_.push_back({iterations_total_, tau, c.sigma, E, bound, accept});
    if (accept) {
      info.coefficients = c;
      info.test_value = E;
      info.bound = bound;
      st_.alpha = c.alpha_next;
      st_.beta = 0.0;
      finish(info, std::move(cand), std::move(pe_new));
      return info;
    }
    tau *= cfg_.eta;
  }
}

void ApdbEngine::finish(StepInfo& info, Iterate&& z_new, PointEval&& pe_new) {
  const double tau = info.coefficients.tau;
  const double sigma = info.coefficients.sigma;
  info.tau = tau;
  info.sigma = sigma;
  info.theta = info.coefficients.theta;

  const double sigma0 = st_.iteration == 0 ? sigma : avg_sigma0_;
  if (st_.iteration == 0) avg_sigma0_ = sigma;
  info.weight = sigma / sigma0;
  avg_.add(info.weight, z_new);

  gx_prev_ = std::move(gx_);
  gy_prev_ = std::move(gy_);
  z_prev_ = std::move(z_);
  z_ = std::move(z_new);
  pe_ = std::move(pe_new);
  gx_ = grad_x_coupling(inst_, pe_, z_.v, z_.lam);
  gy_ = grad_y_coupling(pe_);

  const double gamma = st_.gamma;
  const double gamma_next = gamma * (1.0 + inst_.mu() * tau);
  const double tau_next =
      tau * std::sqrt((gamma / gamma_next) * (1.0 + cfg_.c_nm() * tau / st_.tau_prev));
  st_.tau_prev = tau;
  st_.sigma_prev = sigma;
  st_.sigma = sigma;
  st_.gamma = gamma_next;
  st_.tau = tau_next;
  st_.theta = info.theta;
  ++st_.iteration;
  ++iterations_total_;
  last_tau_ = tau;
}

// ---------------------------------------------------------------------------
// Fixed-length run
// ---------------------------------------------------------------------------

RunResult run_apdb(const ProblemInstance& inst, const ApdbConfig& config, const Iterate& z_init,
                   long K, const RunOptions& opts) {
  if (K < 1) throw ConfigError("run_apdb: K must be at least 1");
  ApdbEngine eng(inst, config, z_init);
  RunResult res;
  res.trace.reserve(static_cast<std::size_t>(K));
  for (long k = 0; k < K; ++k) {
    const StepInfo info = eng.step();
    TraceRecord row;
    row.iter = eng.iterations_total();
    row.tau = info.tau;
    row.tau_initial = info.tau_initial;
    row.sigma = info.sigma;
    row.gamma = info.gamma;
    row.theta = info.theta;
    row.weight_total = eng.averages().T;
    row.evals_iter = info.evals;
    row.evals_total = eng.evals_total();
    if (opts.compute_metrics) {
      const Metrics mt = metrics_at(inst, eng.last(), eng.last_eval(), eng.last_grad_x(), opts.f_ref);
      row.kkt = mt.kkt_residual;
      row.infeas = mt.infeas;
      if (mt.subopt_abs) row.subopt = *mt.subopt_abs;
    }
    res.trace.push_back(row);
  }
  res.average = eng.average();
  res.last = eng.last();
  res.T = eng.averages().T;
  res.evals_total = eng.evals_total();
  return res;
}

}  // namespace rapdb
