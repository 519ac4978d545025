// Explicit time integration of the damped second-order flow
//   u_tt + a u_t = Delta_p u
// and of the first-order steepest-descent baseline u_t = Delta_p u.
//
// The damping term is treated semi-implicitly (division by 1 + a dt), which
// is unconditionally stable in a and leaves the step restriction to the
// stiffness alone; the stiffness is explicit with an adaptive CFL-style step.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pflow/energy.hpp"
#include "pflow/grid.hpp"
#include "pflow/operators.hpp"

namespace pflow {

enum class FlowMode { damped_second_order, first_order };

struct InstabilityError : std::runtime_error {
  double dt;
  double t;
  InstabilityError(double dt_, double t_)
      : std::runtime_error("integration became unstable at t = " + std::to_string(t_) +
                           " with dt = " + std::to_string(dt_)),
        dt(dt_),
        t(t_) {}
};

struct IntegratorConfig {
  FlowMode mode = FlowMode::damped_second_order;
  double dt_safety = 0.5;  // in (0, 1]
  double t_final = 10.0;
  double t_min = 0.1;     // first sample time of the log schedule
  int sample_count = 200; // log-spaced samples in [t_min, t_final]
  int checkpoint_every = 0;  // dump FlowState every N samples; 0 disables

  void validate() const {
    if (!(dt_safety > 0.0 && dt_safety <= 1.0))
      throw std::invalid_argument("IntegratorConfig: dt_safety must lie in (0,1]");
    if (!(t_final > t_min && t_min > 0.0))
      throw std::invalid_argument("IntegratorConfig: need t_final > t_min > 0");
    if (sample_count < 1)
      throw std::invalid_argument("IntegratorConfig: sample schedule is empty");
  }
};

// Log-spaced sample times in [t_min, t_final], inclusive at both ends.
inline std::vector<double> log_schedule(int count, double t_min, double t_final) {
  if (count < 1) throw std::invalid_argument("log_schedule: empty schedule");
  std::vector<double> ts(count);
  if (count == 1) {
    ts[0] = t_final;
    return ts;
  }
  double ratio = std::log(t_final / t_min) / (count - 1);
  for (int j = 0; j < count; ++j) ts[j] = t_min * std::exp(ratio * j);
  ts.back() = t_final;
  return ts;
}

// Largest stable step for the current state. The wave mode uses the local
// speed scale |grad u|^{(p-2)/2} of the p-Laplacian linearization; the
// first-order mode uses the parabolic constraint with diffusivity
// (p-1) |grad u|^{p-2}.
inline double stable_dt(const GridPtr& grid, const Field& u, const PExponent& p,
                        double safety, FlowMode mode = FlowMode::damped_second_order) {
  if (!(safety > 0.0 && safety <= 1.0))
    throw std::invalid_argument("stable_dt: safety must lie in (0,1]");
  const double pv = p.value();
  double m2_max = 0.0;
  if (grid->dim == 1) {
    int n = grid->nodes[0];
    double inv_h = 1.0 / grid->spacing[0];
    for (int e = 0; e + 1 < n; ++e) {
      double g = (u[e + 1] - u[e]) * inv_h;
      m2_max = std::max(m2_max, g * g);
    }
  } else {
    GradientField gf = gradient(grid, u);
    for (int c = 0; c < gf.location_count(); ++c)
      m2_max = std::max(m2_max, gf.squared_magnitude(c));
  }
  double h = grid->min_spacing();
  if (mode == FlowMode::first_order) {
    double diffusivity = (pv - 1.0) * detail::mag_pow_pm2(m2_max, pv);
    return safety * h * h / std::max(1.0, diffusivity);
  }
  double speed = std::sqrt(detail::mag_pow_pm2(m2_max, pv));
  return safety * h / std::max(1.0, speed);
}

namespace detail {

inline void check_stable(double max_abs, double dt, double t) {
  if (!std::isfinite(max_abs) || max_abs > 1e100) throw InstabilityError(dt, t);
}

// v+ = (v + dt Lap) / (1 + a dt) interior, 0 boundary; u+ = u + dt v+.
// Boundary values of u are untouched, so the Dirichlet data stays pinned.
inline void step_damped_inplace(FlowState& state, const PParams& params, double dt,
                                Field& lap) {
  p_laplacian_into(params.grid, state.u, params.p, lap);
  const Grid& grid = *params.grid;
  double damp = 1.0 / (1.0 + params.a * dt);
  double max_abs = 0.0;
  for (int i = 0; i < grid.node_count(); ++i) {
    if (grid.is_boundary(i)) {
      state.ut[i] = 0.0;
      continue;
    }
    double v = (state.ut[i] + dt * lap[i]) * damp;
    state.ut[i] = v;
    state.u[i] += dt * v;
    max_abs = std::max(max_abs, std::abs(state.u[i]));
  }
  state.t += dt;
  check_stable(max_abs, dt, state.t);
}

inline void step_first_order_inplace(Field& u, const GridPtr& grid, const PExponent& p,
                                     double dt, double& t, Field& lap) {
  p_laplacian_into(grid, u, p, lap);
  double max_abs = 0.0;
  for (int i = 0; i < grid->node_count(); ++i) {
    if (grid->is_boundary(i)) continue;
    u[i] += dt * lap[i];
    max_abs = std::max(max_abs, std::abs(u[i]));
  }
  t += dt;
  check_stable(max_abs, dt, t);
}

}  // namespace detail

inline FlowState step_damped(const FlowState& state, const PParams& params, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_damped: dt must be positive");
  FlowState next = state;
  Field lap(params.grid);
  detail::step_damped_inplace(next, params, dt, lap);
  return next;
}

inline Field step_first_order(const Field& u, const GridPtr& grid, const PExponent& p,
                              double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_first_order: dt must be positive");
  Field next = u;
  Field lap(grid);
  double t = 0.0;
  detail::step_first_order_inplace(next, grid, p, dt, t, lap);
  return next;
}

inline EnergySample make_sample(const FlowState& state, const Field& u_star,
                                const PParams& params, double dt_current) {
  EnergySample s;
  s.t = state.t;
  s.dirichlet = dirichlet_energy(params.grid, state.u, params.p);
  s.kinetic = kinetic_energy(params.grid, state.ut);
  s.total = s.dirichlet + s.kinetic;
  s.error_term = error_term(state, u_star, params);
  Field w = field_difference(state.u, u_star);
  s.w1p_err = w1p_seminorm(params.grid, w, params.p);
  s.lp_err = lp_norm(params.grid, w, params.p.value());
  s.sup_err = sup_norm(w);
  s.l2_ut = lp_norm(params.grid, state.ut, 2.0);
  s.grad_lp = w1p_seminorm(params.grid, state.u, params.p);
  s.dt_current = dt_current;
  return s;
}

struct EvolveResult {
  EnergySample initial;  // the t = 0 diagnostics, not part of the history
  std::vector<EnergySample> samples;
  FlowState final_state;
  long long steps = 0;
};

// Runs the flow from u0 (zero initial velocity) and emits one sample per
// scheduled time; the sampled state is the first step at or past the
// scheduled time, with no interpolation. The stable step is recomputed
// every 16 steps. `on_sample` (when set) sees every emitted sample index
// and the state that produced it.
inline EvolveResult evolve(
    const Field& u0, const Field& g, const Field& u_star, const PParams& params,
    const IntegratorConfig& cfg,
    const std::function<void(int, const FlowState&)>& on_sample = {}) {
  cfg.validate();
  require_same_grid(u0, g, "evolve");
  require_same_grid(u0, u_star, "evolve");
  const GridPtr& grid = params.grid;
  double g_scale = 1.0 + sup_norm(g);
  for (int i = 0; i < grid->node_count(); ++i)
    if (grid->is_boundary(i) && std::abs(u0[i] - g[i]) > 1e-12 * g_scale)
      throw std::invalid_argument("evolve: u0 does not match g on the boundary");

  constexpr int kRecomputeInterval = 16;
  std::vector<double> schedule = log_schedule(cfg.sample_count, cfg.t_min, cfg.t_final);

  EvolveResult res;
  // re-pin the boundary so emitted states carry g there bit-exactly
  FlowState state{0.0, apply_dirichlet(u0, g), Field(grid)};  // u_t(0) = 0
  Field lap(grid);
  double dt = stable_dt(grid, state.u, params.p, cfg.dt_safety, cfg.mode);
  res.initial = make_sample(state, u_star, params, dt);

  int steps_since_recompute = 0;
  res.samples.reserve(schedule.size());
  for (size_t j = 0; j < schedule.size(); ++j) {
    while (state.t < schedule[j]) {
      if (steps_since_recompute == 0)
        dt = stable_dt(grid, state.u, params.p, cfg.dt_safety, cfg.mode);
      if (cfg.mode == FlowMode::damped_second_order)
        detail::step_damped_inplace(state, params, dt, lap);
      else
        detail::step_first_order_inplace(state.u, grid, params.p, dt, state.t, lap);
      ++res.steps;
      steps_since_recompute = (steps_since_recompute + 1) % kRecomputeInterval;
    }
    res.samples.push_back(make_sample(state, u_star, params, dt));
    if (on_sample) on_sample(static_cast<int>(j), state);
  }
  res.final_state = std::move(state);
  return res;
}

}  // namespace pflow
