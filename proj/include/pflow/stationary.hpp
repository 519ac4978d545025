// Stationary p-Laplace Dirichlet problem, solved by direct minimization of
// the discrete Dirichlet energy: preconditioned gradient descent with an
// Armijo backtracking line search. Descent is robust where Newton on the
// Euler-Lagrange system would degenerate (the Jacobian vanishes with the
// gradient for p > 2), and it is the variational formulation verbatim.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pflow/energy.hpp"
#include "pflow/grid.hpp"
#include "pflow/operators.hpp"

namespace pflow {

struct StationaryResult {
  Field u_star;
  double residual = 0.0;  // max-norm of the interior energy gradient
  int iterations = 0;
  double energy = 0.0;  // E(u_star)
  bool converged = false;
};

// Boundary-consistent initial iterate: linear interpolation of the endpoint
// values in 1d, the transfinite (Coons) interpolant of the edge data in 2d.
// Exact for affine g, so affine problems converge in zero iterations.
inline Field boundary_interpolant(const GridPtr& grid, const Field& g) {
  if (!g.grid->same_layout(*grid))
    throw std::invalid_argument("boundary_interpolant: g not on the given grid");
  Field u(grid);
  if (grid->dim == 1) {
    int n = grid->nodes[0];
    double a = g[0], b = g[n - 1];
    for (int i = 0; i < n; ++i) {
      double s = static_cast<double>(i) / (n - 1);
      u[i] = (1.0 - s) * a + s * b;
    }
  } else {
    int nx = grid->nodes[0], ny = grid->nodes[1];
    for (int iy = 0; iy < ny; ++iy) {
      double e = static_cast<double>(iy) / (ny - 1);
      for (int ix = 0; ix < nx; ++ix) {
        double s = static_cast<double>(ix) / (nx - 1);
        double edges = (1.0 - s) * g[grid->index(0, iy)] + s * g[grid->index(nx - 1, iy)] +
                       (1.0 - e) * g[grid->index(ix, 0)] + e * g[grid->index(ix, ny - 1)];
        double corners = (1.0 - s) * (1.0 - e) * g[grid->index(0, 0)] +
                         s * (1.0 - e) * g[grid->index(nx - 1, 0)] +
                         (1.0 - s) * e * g[grid->index(0, ny - 1)] +
                         s * e * g[grid->index(nx - 1, ny - 1)];
        u[grid->index(ix, iy)] = edges - corners;
      }
    }
  }
  return u;
}

namespace detail {

// Diagonal preconditioner: the (p-1)-weighted average of |grad u|^(p-2) over
// the cells touching each node, with the mesh scaling of the energy Hessian
// and a floor eps against the degenerate operator.
inline void descent_preconditioner(const GridPtr& grid, const Field& u, const PExponent& p,
                                   std::vector<double>& diag) {
  constexpr double eps = 1e-12;
  const double pv = p.value();
  diag.assign(grid->node_count(), eps);
  if (grid->dim == 1) {
    int n = grid->nodes[0];
    double h = grid->spacing[0], inv_h = 1.0 / h;
    double scale = (pv - 1.0) * inv_h;
    for (int e = 0; e + 1 < n; ++e) {
      double g = (u[e + 1] - u[e]) * inv_h;
      double m = mag_pow_pm2(g * g, pv) * scale;
      diag[e] += m;
      diag[e + 1] += m;
    }
  } else {
    int nx = grid->nodes[0], ny = grid->nodes[1];
    double hx = grid->spacing[0], hy = grid->spacing[1];
    double geom = (pv - 1.0) * hx * hy * (0.25 / (hx * hx) + 0.25 / (hy * hy));
    GradientField gf = gradient(grid, u);
    int c = 0;
    for (int cy = 0; cy + 1 < ny; ++cy) {
      for (int cx = 0; cx + 1 < nx; ++cx, ++c) {
        double m = mag_pow_pm2(gf.squared_magnitude(c), pv) * geom;
        int i00 = grid->index(cx, cy);
        diag[i00] += m;
        diag[i00 + 1] += m;
        diag[i00 + nx] += m;
        diag[i00 + nx + 1] += m;
      }
    }
  }
}

}  // namespace detail

inline double interior_residual(const GridPtr& grid, const Field& energy_grad) {
  double r = 0.0;
  for (int i = 0; i < grid->node_count(); ++i)
    if (!grid->is_boundary(i)) r = std::max(r, std::abs(energy_grad[i]));
  return r;
}

inline StationaryResult solve_stationary(const GridPtr& grid, const Field& g,
                                         const PExponent& p, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_stationary: tol must be positive");
  if (!g.all_finite()) throw std::invalid_argument("solve_stationary: boundary data not finite");

  StationaryResult res;
  res.u_star = boundary_interpolant(grid, g);
  Field grad(grid), trial(grid);
  std::vector<double> diag;
  std::vector<double> dir(grid->node_count(), 0.0);

  double energy = dirichlet_energy(grid, res.u_star, p);
  double alpha = 1.0;
  constexpr double armijo_c = 1e-4;

  for (int it = 0; it <= max_iter; ++it) {
    energy_gradient_into(grid, res.u_star, p, grad);
    res.residual = interior_residual(grid, grad);
    res.iterations = it;
    res.energy = energy;
    if (res.residual <= tol) {
      res.converged = true;
      return res;
    }
    if (it == max_iter) break;

    detail::descent_preconditioner(grid, res.u_star, p, diag);
    double slope = 0.0;
    for (int i = 0; i < grid->node_count(); ++i) {
      dir[i] = grid->is_boundary(i) ? 0.0 : -grad[i] / diag[i];
      slope += grad[i] * dir[i];
    }

    // Each accepted step lowers the energy. Tight tolerances can demand
    // energy decrements below the floating-point resolution of the energy;
    // in that flat regime the residual max-norm takes over as the descent
    // certificate (same direction, measurable progress). alpha warm-starts
    // from the last accepted step so well-scaled problems take full steps.
    double noise = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(energy));
    alpha = std::min(alpha * 2.0, 1e6);
    bool accepted = false;
    while (alpha > 1e-18) {
      for (int i = 0; i < grid->node_count(); ++i)
        trial[i] = res.u_star[i] + alpha * dir[i];
      double trial_energy = dirichlet_energy(grid, trial, p);
      if (trial_energy <= energy + armijo_c * alpha * slope) {
        res.u_star.values.swap(trial.values);
        energy = trial_energy;
        accepted = true;
        break;
      }
      if (std::abs(armijo_c * alpha * slope) <= noise && trial_energy <= energy + noise) {
        energy_gradient_into(grid, trial, p, grad);
        if (interior_residual(grid, grad) <= res.residual * (1.0 - 1e-3)) {
          res.u_star.values.swap(trial.values);
          energy = trial_energy;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // stagnated at the arithmetic floor
  }
  energy_gradient_into(grid, res.u_star, p, grad);
  res.residual = interior_residual(grid, grad);
  res.energy = dirichlet_energy(grid, res.u_star, p);
  res.converged = res.residual <= tol;
  return res;
}

// E(v) - E(u_star) for an admissible competitor v (same boundary values).
// Nonnegative for a converged u_star by minimality.
inline double minimality_gap(const GridPtr& grid, const Field& u_star, const Field& v,
                             const PExponent& p) {
  require_same_grid(u_star, v, "minimality_gap");
  double scale = 1.0 + sup_norm(u_star);
  for (int i = 0; i < grid->node_count(); ++i)
    if (grid->is_boundary(i) && std::abs(u_star[i] - v[i]) > 1e-12 * scale)
      throw std::invalid_argument("minimality_gap: v does not match u_star on the boundary");
  return dirichlet_energy(grid, v, p) - dirichlet_energy(grid, u_star, p);
}

}  // namespace pflow
