// Scalar functionals of the evolving state: the p-Dirichlet energy, the
// total (kinetic + potential) energy, and the composite error term whose
// decay rate the experiments measure. Also the per-interval residual of the
// discrete dissipation identity  dE/dt = -a * int u_t^2.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pflow/grid.hpp"
#include "pflow/operators.hpp"

namespace pflow {

// Problem parameters of the damped flow: exponent p >= 2, damping a > 0.
struct PParams {
  GridPtr grid;
  PExponent p;
  double a;

  PParams(GridPtr g, PExponent p_, double a_) : grid(std::move(g)), p(p_), a(a_) {
    if (!(a > 0.0))
      throw std::invalid_argument("PParams: damping a must be positive, got " +
                                  std::to_string(a));
  }
};

// The evolving pair (u, u_t) at time t. Boundary data is time independent,
// so u_t vanishes on the boundary and u carries g there.
struct FlowState {
  double t = 0.0;
  Field u;
  Field ut;
};

// One row of a recorded history.
struct EnergySample {
  double t = 0.0;
  double dirichlet = 0.0;   // E(u) = (1/p) int |grad u|^p
  double kinetic = 0.0;     // int u_t^2 / 2
  double total = 0.0;       // dirichlet + kinetic
  double error_term = 0.0;  // e(t), see error_term() below
  double w1p_err = 0.0;     // || grad(u - u*) ||_p
  double lp_err = 0.0;      // || u - u* ||_p
  double sup_err = 0.0;     // max_i |u_i - u*_i|
  double l2_ut = 0.0;       // || u_t ||_2
  double grad_lp = 0.0;     // || grad u ||_p
  double dt_current = 0.0;  // integrator step at sampling time
};

inline double dirichlet_energy(const GridPtr& grid, const Field& u, const PExponent& p) {
  if (!u.grid->same_layout(*grid))
    throw std::invalid_argument("dirichlet_energy: field not on the given grid");
  const double pv = p.value();
  double s = 0.0;
  if (grid->dim == 1) {
    int n = grid->nodes[0];
    double h = grid->spacing[0], inv_h = 1.0 / h;
    for (int e = 0; e + 1 < n; ++e) {
      double g = (u[e + 1] - u[e]) * inv_h;
      s += h * detail::mag_pow_p(g * g, pv);
    }
  } else {
    GradientField gf = gradient(grid, u);
    double w_c = grid->cell_weight();
    for (int c = 0; c < gf.location_count(); ++c)
      s += w_c * detail::mag_pow_p(gf.squared_magnitude(c), pv);
  }
  return s / pv;
}

inline double kinetic_energy(const GridPtr& grid, const Field& ut) {
  double s = 0.0;
  for (int i = 0; i < grid->node_count(); ++i)
    s += grid->node_weight(i) * ut[i] * ut[i];
  return 0.5 * s;
}

inline double total_energy(const FlowState& state, const PParams& params) {
  return dirichlet_energy(params.grid, state.u, params.p) +
         kinetic_energy(params.grid, state.ut);
}

// e(t) = int (a^2/2) w^2 + a w w_t + w_t^2 dx + 2 (E(u) - E(u*)),  w = u - u*.
//
// The integrand equals (a w + w_t)^2 / 2 + w_t^2 / 2, so the integral part is
// nonnegative pointwise; the energy excess is nonnegative whenever u* is the
// discrete minimizer, hence e >= 0 up to the stationary solver's slack.
//
// When `u_star_residual_limit` is finite the max-norm of the energy gradient
// of u_star is checked against it; a stale or unconverged u_star makes e
// meaningless and is rejected.
inline double error_term(const FlowState& state, const Field& u_star, const PParams& params,
                         double u_star_residual_limit = std::numeric_limits<double>::infinity()) {
  require_same_grid(state.u, u_star, "error_term");
  const GridPtr& grid = params.grid;
  if (std::isfinite(u_star_residual_limit)) {
    Field eg = energy_gradient(grid, u_star, params.p);
    if (sup_norm(eg) > u_star_residual_limit)
      throw std::invalid_argument("error_term: u_star residual exceeds the stated limit");
  }
  const double a = params.a;
  double quad = 0.0;
  for (int i = 0; i < grid->node_count(); ++i) {
    double w = state.u[i] - u_star[i];
    double wt = state.ut[i];
    quad += grid->node_weight(i) * (0.5 * a * a * w * w + a * w * wt + wt * wt);
  }
  return quad + 2.0 * (dirichlet_energy(grid, state.u, params.p) -
                       dirichlet_energy(grid, u_star, params.p));
}

// Residual of E' = -a int u_t^2 over one sample interval, with the time
// integral approximated by the trapezoid of l2_ut^2. Second order in the
// integrator step for smooth regimes.
inline double dissipation_residual(const EnergySample& s0, const EnergySample& s1, double a) {
  if (!(s1.t > s0.t))
    throw std::invalid_argument("dissipation_residual: samples must satisfy t1 > t0");
  double integral = 0.5 * (s1.t - s0.t) * (s0.l2_ut * s0.l2_ut + s1.l2_ut * s1.l2_ut);
  return std::abs((s1.total - s0.total) + a * integral);
}

// ---------------------------------------------------------------------------
// History-level invariants. E and e must be nonincreasing, e nonnegative,
// and the gradient norm bounded by its initial value. Violations name the
// offending sample so runs can fail loudly.

struct HistoryViolation {
  int sample_index;
  std::string what;
};

struct HistoryCheck {
  std::vector<HistoryViolation> violations;
  bool ok() const { return violations.empty(); }
};

// `initial` is the t = 0 sample (kept out of the recorded history); M is the
// initial gradient norm || grad u_0 ||_p; a is the damping, used for the
// integrated balance  E(T) + a int_0^T ||u_t||^2 <= E(0) = E(u_0)
// (the velocity starts at zero, so E(0) is the initial Dirichlet energy).
// The balance integral comes from the trapezoid of the recorded l2_ut, so
// its tolerance absorbs coarse-sample quadrature, not just scheme bias.
inline HistoryCheck check_history_invariants(const std::vector<EnergySample>& samples,
                                             const EnergySample& initial, double M, double a) {
  HistoryCheck res;
  const double tol_E = 1e-8 * (1.0 + initial.total);
  const double tol_e_mono = 1e-8 * (1.0 + std::abs(initial.error_term));
  const double tol_e = 1e-10 * (1.0 + std::abs(initial.error_term));
  const double tol_grad = 1e-8;
  const double tol_balance = 2e-2 * (1.0 + initial.dirichlet);

  double dissipated = 0.0;
  const EnergySample* prev = &initial;
  for (size_t k = 0; k < samples.size(); ++k) {
    const EnergySample& s = samples[k];
    if (s.t > prev->t)
      dissipated += 0.5 * (s.t - prev->t) * (prev->l2_ut * prev->l2_ut + s.l2_ut * s.l2_ut);
    if (s.total + a * dissipated > initial.dirichlet + tol_balance)
      res.violations.push_back(
          {static_cast<int>(k),
           "integrated balance exceeded: E + a*dissipation = " +
               std::to_string(s.total + a * dissipated) + " vs initial energy " +
               std::to_string(initial.dirichlet)});
    if (s.total > prev->total + tol_E)
      res.violations.push_back({static_cast<int>(k), "total energy increased by " +
                                                          std::to_string(s.total - prev->total)});
    if (s.error_term > prev->error_term + tol_e_mono)
      res.violations.push_back({static_cast<int>(k), "error term increased by " +
                                                          std::to_string(s.error_term - prev->error_term)});
    if (s.error_term < -tol_e)
      res.violations.push_back({static_cast<int>(k),
                                "error term negative: " + std::to_string(s.error_term)});
    if (s.grad_lp > M + tol_grad)
      res.violations.push_back({static_cast<int>(k), "gradient norm " + std::to_string(s.grad_lp) +
                                                          " exceeds initial " + std::to_string(M)});
    prev = &s;
  }
  return res;
}

}  // namespace pflow
