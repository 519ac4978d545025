// Runs a short damped flow on a degenerate problem (zero boundary data) and
// prints the fitted algebraic decay slope of the gradient-norm error next
// to the bound exponent -1/((p-1)p).

#include <cstdio>

#include "pflow/analysis.hpp"
#include "pflow/evolution.hpp"
#include "pflow/stationary.hpp"

using namespace pflow;

int main() {
  auto grid = build_grid(1, {201}, {1.0});
  PExponent p(4.0);
  PParams params(grid, p, 1.0);
  Field g(grid, 0.0);
  Field u0 = sample_field(grid, [](double x) { return 0.25 * std::sin(M_PI * x); });

  StationaryResult st = solve_stationary(grid, g, p, 1e-10, 10000);
  IntegratorConfig cfg;
  cfg.dt_safety = 0.3;
  cfg.t_min = 0.1;
  cfg.t_final = 500.0;
  cfg.sample_count = 200;
  EvolveResult res = evolve(u0, g, st.u_star, params, cfg);

  DecayFit fit = fit_algebraic(res.samples, HistoryColumn::w1p_err, {10.0, 500.0});
  std::printf("fitted slope  : %+.4f  (r2 = %.4f, %d points)\n", fit.slope, fit.r2,
              fit.n_points);
  std::printf("bound exponent: %+.4f\n", -1.0 / ((p.value() - 1.0) * p.value()));
  std::printf("faster-than-bound: %s\n",
              fit.slope <= -1.0 / ((p.value() - 1.0) * p.value()) + 0.05 ? "yes" : "no");
  return 0;
}
