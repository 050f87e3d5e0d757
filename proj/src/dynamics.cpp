#include "nlq/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace nlq {

void validate(const IntegratorConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("integrator: dt must be positive");
  if (!(cfg.t_final > 0.0))
    throw std::invalid_argument("integrator: t_final must be positive");
  if (cfg.dt > cfg.t_final)
    throw std::invalid_argument("integrator: dt must not exceed t_final");
  if (cfg.scheme == IntegratorScheme::rk4_step_doubling &&
      !(cfg.error_tolerance > 0.0))
    throw std::invalid_argument("integrator: tolerance must be positive");
  if (cfg.observer_stride < 1)
    throw std::invalid_argument("integrator: observer_stride must be >= 1");
  if (!(cfg.dt_min > 0.0))
    throw std::invalid_argument("integrator: dt_min must be positive");
}

Mat lvn_rhs(const DensityMatrix& rho, const ExtensionSpec& spec, double hbar,
            long* floor_activations) {
  validate(spec);
  if (spec.mode != ExtensionMode::correct)
    throw std::invalid_argument(
        "lvn_rhs: the naive recipe is defined for pure states only");
  if (rho.layout != spec.layout)
    throw std::invalid_argument("lvn_rhs: layout mismatch");

  const int n = spec.layout.total_dim();
  Mat h_rho = Mat::Zero(n, n);
  Mat rho_h = Mat::Zero(n, n);
  for (const auto& a : spec.assignments) {
    const DensityMatrix marginal = partial_trace(rho, {a.subsystem});
    KernelEval ke = a.kernel->evaluate(marginal);
    if (floor_activations) *floor_activations += ke.floor_activations;
    accumulate_factor_left(h_rho, ke.op, a.subsystem, spec.layout, rho.matrix);
    accumulate_factor_right(rho_h, ke.op, a.subsystem, spec.layout,
                            rho.matrix);
  }
  return (h_rho - rho_h) / Complex(0.0, hbar);
}

Vec schrodinger_rhs(const WaveFunction& psi, const ExtensionSpec& spec,
                    double hbar, long* floor_activations) {
  validate(spec);
  if (psi.layout != spec.layout)
    throw std::invalid_argument("schrodinger_rhs: layout mismatch");

  const int n = spec.layout.total_dim();
  Vec h_psi = Vec::Zero(n);
  if (spec.mode == ExtensionMode::correct) {
    for (const auto& a : spec.assignments) {
      const DensityMatrix marginal = pure_marginal(psi, a.subsystem);
      KernelEval ke = a.kernel->evaluate(marginal);
      if (floor_activations) *floor_activations += ke.floor_activations;
      h_psi += apply_factor(ke.op, a.subsystem, spec.layout, psi.amplitudes);
    }
  } else {
    OperatorEval oe = naive_extend(psi, spec);
    if (floor_activations) *floor_activations += oe.floor_activations;
    h_psi = oe.op * psi.amplitudes;
  }
  return h_psi / Complex(0.0, hbar);
}

namespace {

double state_norm(const Mat& y) { return y.cwiseAbs().maxCoeff(); }
double state_norm(const Vec& y) { return y.cwiseAbs().maxCoeff(); }

template <class Y, class RhsFn>
Y rk4_step(const Y& y, double dt, RhsFn&& rhs) {
  const Y k1 = rhs(y);
  const Y k2 = rhs(y + (0.5 * dt) * k1);
  const Y k3 = rhs(y + (0.5 * dt) * k2);
  const Y k4 = rhs(y + dt * k3);
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Shared driver. snap(t, y) records a snapshot; returns via the out-params
// on NaN/Inf or dt underflow, keeping the last finite state recorded.
template <class Y, class RhsFn, class SnapFn>
void integrate(Y y, const IntegratorConfig& cfg, RhsFn&& rhs, SnapFn&& snap,
               bool& aborted, double& abort_time, std::string& abort_reason) {
  double t = 0.0;
  double dt_cur = cfg.dt;
  long step = 0;
  snap(t, y);

  const double t_end = cfg.t_final;
  while (t < t_end - 1e-12 * t_end) {
    double dt_step = std::min(dt_cur, t_end - t);
    Y y_next;
    if (cfg.scheme == IntegratorScheme::rk4) {
      y_next = rk4_step(y, dt_step, rhs);
    } else {
      for (;;) {
        const Y big = rk4_step(y, dt_step, rhs);
        Y fine = rk4_step(y, 0.5 * dt_step, rhs);
        fine = rk4_step(fine, 0.5 * dt_step, rhs);
        const double err = state_norm(Y(big - fine));
        if (err <= cfg.error_tolerance || !std::isfinite(err)) {
          y_next = fine;
          // cautious growth, never beyond the configured dt
          if (err < cfg.error_tolerance / 32.0)
            dt_cur = std::min(2.0 * dt_step, cfg.dt);
          break;
        }
        dt_step *= 0.5;
        dt_cur = dt_step;
        if (dt_step < cfg.dt_min) {
          aborted = true;
          abort_time = t;
          abort_reason = "step-doubling hit dt_min without meeting tolerance";
          snap(t, y);
          return;
        }
      }
    }
    if (!y_next.allFinite()) {
      aborted = true;
      abort_time = t + dt_step;
      abort_reason = "non-finite state at t = " + std::to_string(t + dt_step);
      snap(t, y);  // last finite state, for post-mortem
      return;
    }
    y = std::move(y_next);
    t += dt_step;
    ++step;
    if (step % cfg.observer_stride == 0 || t >= t_end - 1e-12 * t_end)
      snap(t, y);
  }
}

}  // namespace

DensityTrajectory evolve(const DensityMatrix& rho0, const ExtensionSpec& spec,
                         const IntegratorConfig& cfg, double hbar) {
  validate(cfg);
  validate(spec);
  if (rho0.layout != spec.layout)
    throw std::invalid_argument("evolve: layout mismatch");

  DensityTrajectory traj;
  long floors = 0;
  auto rhs = [&](const Mat& m) {
    const DensityMatrix state{spec.layout, m};
    return lvn_rhs(state, spec, hbar, &floors);
  };
  auto snap = [&](double t, const Mat& m) {
    DensityMatrix state{spec.layout, m};
    Monitors mon;
    mon.trace_error = std::abs(state.trace() - 1.0);
    mon.purity = state.purity();
    mon.hermiticity_residual =
        (m - m.adjoint()).cwiseAbs().maxCoeff() * spec.layout.measure();
    mon.floor_activations = floors;
    traj.times.push_back(t);
    traj.monitors.push_back(mon);
    traj.snapshots.push_back(std::move(state));
  };
  integrate(rho0.matrix, cfg, rhs, snap, traj.aborted, traj.abort_time,
            traj.abort_reason);
  return traj;
}

WaveTrajectory evolve(const WaveFunction& psi0, const ExtensionSpec& spec,
                      const IntegratorConfig& cfg, double hbar) {
  validate(cfg);
  validate(spec);
  if (psi0.layout != spec.layout)
    throw std::invalid_argument("evolve: layout mismatch");

  WaveTrajectory traj;
  long floors = 0;
  auto rhs = [&](const Vec& v) {
    const WaveFunction state{spec.layout, v};
    return schrodinger_rhs(state, spec, hbar, &floors);
  };
  auto snap = [&](double t, const Vec& v) {
    WaveFunction state{spec.layout, v};
    Monitors mon;
    mon.norm_error = std::abs(state.norm() - 1.0);
    mon.purity = 1.0;
    mon.floor_activations = floors;
    traj.times.push_back(t);
    traj.monitors.push_back(mon);
    traj.snapshots.push_back(std::move(state));
  };
  integrate(psi0.amplitudes, cfg, rhs, snap, traj.aborted, traj.abort_time,
            traj.abort_reason);
  return traj;
}

}  // namespace nlq
