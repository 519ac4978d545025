// Discrete differential operators and norms.
//
// Gradients live on staggered locations: one value per edge in 1d, one
// averaged vector per cell in 2d. The discrete p-Laplacian is not an
// independently chosen stencil: it is the negative gradient of the discrete
// Dirichlet energy with respect to interior nodal values, divided by the
// node quadrature weight. This makes the energy identities used elsewhere
// hold to roundoff rather than to discretization order.
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "pflow/grid.hpp"

namespace pflow {

// Exponent of the p-Dirichlet energy; the degenerate regime p >= 2 only.
class PExponent {
 public:
  explicit PExponent(double p) : p_(p) {
    if (!(p >= 2.0))
      throw std::invalid_argument("PExponent: p must be >= 2, got " + std::to_string(p));
  }
  double value() const { return p_; }

 private:
  double p_;
};

namespace detail {

// |g|^(p-2) from the squared magnitude m2 = |g|^2.
inline double mag_pow_pm2(double m2, double p) {
  if (p == 2.0) return 1.0;
  if (p == 4.0) return m2;
  if (p == 3.0) return std::sqrt(m2);
  return std::pow(m2, 0.5 * (p - 2.0));
}

// |g|^p from m2 = |g|^2.
inline double mag_pow_p(double m2, double p) {
  if (p == 2.0) return m2;
  if (p == 4.0) return m2 * m2;
  if (p == 3.0) return m2 * std::sqrt(m2);
  return std::pow(m2, 0.5 * p);
}

}  // namespace detail

// Per-edge (1d) or per-cell (2d) gradient values; 2d stores (gx, gy) pairs.
struct GradientField {
  GridPtr grid;
  int components = 1;
  std::vector<double> data;

  int location_count() const {
    return static_cast<int>(data.size()) / components;
  }
  double squared_magnitude(int c) const {
    if (components == 1) return data[c] * data[c];
    double gx = data[2 * c], gy = data[2 * c + 1];
    return gx * gx + gy * gy;
  }
};

inline GradientField gradient(const GridPtr& grid, const Field& u) {
  if (!u.grid->same_layout(*grid))
    throw std::invalid_argument("gradient: field not on the given grid");
  GradientField gf;
  gf.grid = grid;
  if (grid->dim == 1) {
    int n = grid->nodes[0];
    double inv_h = 1.0 / grid->spacing[0];
    gf.components = 1;
    gf.data.resize(n - 1);
    for (int e = 0; e + 1 < n; ++e) gf.data[e] = (u[e + 1] - u[e]) * inv_h;
  } else {
    int nx = grid->nodes[0], ny = grid->nodes[1];
    double ihx = 0.5 / grid->spacing[0], ihy = 0.5 / grid->spacing[1];
    gf.components = 2;
    gf.data.resize(2 * (nx - 1) * (ny - 1));
    int c = 0;
    for (int cy = 0; cy + 1 < ny; ++cy) {
      for (int cx = 0; cx + 1 < nx; ++cx, ++c) {
        int i00 = grid->index(cx, cy), i10 = i00 + 1;
        int i01 = i00 + nx, i11 = i01 + 1;
        gf.data[2 * c] = (u[i10] - u[i00] + u[i11] - u[i01]) * ihx;
        gf.data[2 * c + 1] = (u[i01] - u[i00] + u[i11] - u[i10]) * ihy;
      }
    }
  }
  return gf;
}

// d E_h / d u_i at interior nodes, 0 on the boundary, where
// E_h(u) = (1/p) sum_cells w_c |grad u|_c^p. Allocation-free given `out`.
inline void energy_gradient_into(const GridPtr& grid, const Field& u,
                                 const PExponent& p, Field& out) {
  if (!u.grid->same_layout(*grid))
    throw std::invalid_argument("energy_gradient: field not on the given grid");
  if (!out.grid || !out.grid->same_layout(*grid)) out = Field(grid);
  std::fill(out.values.begin(), out.values.end(), 0.0);
  const double pv = p.value();

  if (grid->dim == 1) {
    int n = grid->nodes[0];
    double inv_h = 1.0 / grid->spacing[0];
    double flux_prev = 0.0;
    for (int e = 0; e + 1 < n; ++e) {
      double g = (u[e + 1] - u[e]) * inv_h;
      double flux = detail::mag_pow_pm2(g * g, pv) * g;
      if (e > 0) out[e] = flux_prev - flux;
      flux_prev = flux;
    }
    // boundary entries stay 0
  } else {
    int nx = grid->nodes[0], ny = grid->nodes[1];
    double hx = grid->spacing[0], hy = grid->spacing[1];
    double w_c = hx * hy;
    double ihx = 0.5 / hx, ihy = 0.5 / hy;
    for (int cy = 0; cy + 1 < ny; ++cy) {
      for (int cx = 0; cx + 1 < nx; ++cx) {
        int i00 = grid->index(cx, cy), i10 = i00 + 1;
        int i01 = i00 + nx, i11 = i01 + 1;
        double gx = (u[i10] - u[i00] + u[i11] - u[i01]) * ihx;
        double gy = (u[i01] - u[i00] + u[i11] - u[i10]) * ihy;
        double m = detail::mag_pow_pm2(gx * gx + gy * gy, pv);
        double ax = w_c * m * gx * ihx;
        double ay = w_c * m * gy * ihy;
        out[i00] += -ax - ay;
        out[i10] += ax - ay;
        out[i01] += -ax + ay;
        out[i11] += ax + ay;
      }
    }
    for (int i = 0; i < grid->node_count(); ++i)
      if (grid->is_boundary(i)) out[i] = 0.0;
  }
}

// Discrete p-Laplacian: divergence of the flux |grad u|^(p-2) grad u,
// realized as -(d E_h / d u_i) / node_weight at interior nodes and 0 on the
// boundary. For p = 2 on a uniform 1d grid this is the three-point stencil
// (u_{i-1} - 2 u_i + u_{i+1}) / h^2.
inline void p_laplacian_into(const GridPtr& grid, const Field& u,
                             const PExponent& p, Field& out) {
  energy_gradient_into(grid, u, p, out);
  for (int i = 0; i < grid->node_count(); ++i) {
    if (!grid->is_boundary(i)) out[i] = -out[i] / grid->node_weight(i);
  }
}

inline Field p_laplacian(const GridPtr& grid, const Field& u, const PExponent& p) {
  Field out(grid);
  p_laplacian_into(grid, u, p, out);
  return out;
}

inline Field energy_gradient(const GridPtr& grid, const Field& u, const PExponent& p) {
  Field out(grid);
  energy_gradient_into(grid, u, p, out);
  return out;
}

// Quadrature-weighted L^p norm over nodes, p >= 1.
inline double lp_norm(const GridPtr& grid, const Field& u, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  if (!u.grid->same_layout(*grid))
    throw std::invalid_argument("lp_norm: field not on the given grid");
  double s = 0.0;
  if (p == 2.0) {
    for (int i = 0; i < grid->node_count(); ++i)
      s += grid->node_weight(i) * u[i] * u[i];
    return std::sqrt(s);
  }
  for (int i = 0; i < grid->node_count(); ++i)
    s += grid->node_weight(i) * std::pow(std::abs(u[i]), p);
  return std::pow(s, 1.0 / p);
}

inline double sup_norm(const Field& u) {
  double m = 0.0;
  for (double v : u.values) m = std::max(m, std::abs(v));
  return m;
}

inline double sup_diff(const Field& u, const Field& v) {
  require_same_grid(u, v, "sup_diff");
  double m = 0.0;
  for (int i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i] - v[i]));
  return m;
}

inline Field field_difference(const Field& u, const Field& v) {
  require_same_grid(u, v, "field_difference");
  Field w(u.grid);
  for (int i = 0; i < u.size(); ++i) w[i] = u[i] - v[i];
  return w;
}

// L^p norm of a gradient field over cells.
inline double gradient_lp_norm(const GradientField& gf, double p) {
  double w_c = gf.grid->cell_weight();
  double s = 0.0;
  for (int c = 0; c < gf.location_count(); ++c)
    s += w_c * detail::mag_pow_p(gf.squared_magnitude(c), p);
  return std::pow(s, 1.0 / p);
}

// W^{1,p} seminorm of u: the L^p norm of its gradient. On zero-trace
// differences this is a norm and is the quantity whose decay is measured.
inline double w1p_seminorm(const GridPtr& grid, const Field& u, const PExponent& p) {
  if (!u.grid->same_layout(*grid))
    throw std::invalid_argument("w1p_seminorm: field not on the given grid");
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
  return std::pow(s, 1.0 / pv);
}

// ---------------------------------------------------------------------------
// Vector inequalities for the flux map a -> |a|^(p-2) a, p >= 2. Each gap
// function returns LHS-minus-bound; the contract is gap >= 0.

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

}  // namespace detail

// <|a|^(p-2) a - |b|^(p-2) b, a - b> - 2^(2-p) |a-b|^p.
inline double ineq_a1_gap(std::span<const double> a, std::span<const double> b,
                          const PExponent& p) {
  if (a.size() != b.size())
    throw std::invalid_argument("ineq_a1_gap: dimension mismatch");
  const double pv = p.value();
  double ma = detail::mag_pow_pm2(detail::norm2(a), pv);
  double mb = detail::mag_pow_pm2(detail::norm2(b), pv);
  double inner = 0.0, d2 = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    inner += (ma * a[i] - mb * b[i]) * d;
    d2 += d * d;
  }
  return inner - std::pow(2.0, 2.0 - pv) * detail::mag_pow_p(d2, pv);
}

// |b|^p - |a|^p - p <|a|^(p-2) a, b-a> - c |b-a|^p. Admissible c lies in
// (0,1]; the default used by the tests is c(p) = 2^(1-p).
inline double ineq_a2_gap(std::span<const double> a, std::span<const double> b,
                          const PExponent& p, double c) {
  if (a.size() != b.size())
    throw std::invalid_argument("ineq_a2_gap: dimension mismatch");
  const double pv = p.value();
  double ma = detail::mag_pow_pm2(detail::norm2(a), pv);
  double inner = 0.0, d2 = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = b[i] - a[i];
    inner += ma * a[i] * d;
    d2 += d * d;
  }
  return detail::mag_pow_p(detail::norm2(b), pv) - detail::mag_pow_p(detail::norm2(a), pv) -
         pv * inner - c * detail::mag_pow_p(d2, pv);
}

inline double default_a2_constant(const PExponent& p) {
  return std::pow(2.0, 1.0 - p.value());
}

// Diagnostic pair for the integral estimate on | |f|^p - |g|^p |:
//   lhs = int | |f|^p - |g|^p |,   rhs = M^(p-1) * ||f - g||_p.
// The multiplicative constant is not known a priori; callers bound the
// observed ratio lhs/rhs empirically.
struct A3Check {
  double lhs = 0.0;
  double rhs = 0.0;
};

inline A3Check ineq_a3_check(const GridPtr& grid, const GradientField& f,
                             const GradientField& g, const PExponent& p, double M) {
  if (f.location_count() != g.location_count() || f.components != g.components)
    throw std::invalid_argument("ineq_a3_check: gradient fields do not match");
  const double pv = p.value();
  double nf = gradient_lp_norm(f, pv), ng = gradient_lp_norm(g, pv);
  double slack = 1e-12 * (1.0 + M);
  if (nf > M + slack || ng > M + slack)
    throw std::invalid_argument("ineq_a3_check: input norm exceeds the bound M");

  double w_c = grid->cell_weight();
  double lhs = 0.0, diff_p = 0.0;
  for (int c = 0; c < f.location_count(); ++c) {
    lhs += w_c * std::abs(detail::mag_pow_p(f.squared_magnitude(c), pv) -
                          detail::mag_pow_p(g.squared_magnitude(c), pv));
    double d2 = 0.0;
    for (int k = 0; k < f.components; ++k) {
      double d = f.data[f.components * c + k] - g.data[g.components * c + k];
      d2 += d * d;
    }
    diff_p += w_c * detail::mag_pow_p(d2, pv);
  }
  return {lhs, std::pow(M, pv - 1.0) * std::pow(diff_p, 1.0 / pv)};
}

}  // namespace pflow
