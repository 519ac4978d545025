// Tensor-product grids on (0,L1) or (0,L1)x(0,L2) and nodal scalar fields.
//
// Grids are immutable once built; Fields carry a shared reference to their
// grid plus one value per node (row-major, x fastest). All quadrature is
// trapezoid-consistent: boundary nodes carry half weight per axis, cells
// (edges in 1d) carry full measure.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace pflow {

struct Grid {
  int dim = 1;                             // 1 or 2
  std::array<int, 2> nodes{0, 1};          // nodes per axis; [n, 1] in 1d
  std::array<double, 2> lengths{0.0, 0.0}; // domain is (0,L1) x (0,L2)
  std::array<double, 2> spacing{0.0, 0.0}; // h_k = L_k / (n_k - 1)
  std::vector<std::uint8_t> boundary;      // 1 on the outermost node layer

  int node_count() const { return nodes[0] * nodes[1]; }

  int index(int ix, int iy = 0) const { return iy * nodes[0] + ix; }

  bool is_boundary(int node) const { return boundary[node] != 0; }

  int interior_count() const {
    if (dim == 1) return nodes[0] - 2;
    return (nodes[0] - 2) * (nodes[1] - 2);
  }

  // Coordinates of a node, y() meaningful only for dim == 2.
  double x(int node) const { return spacing[0] * (node % nodes[0]); }
  double y(int node) const { return spacing[1] * (node / nodes[0]); }

  // Trapezoid quadrature weight of a node (half weight per axis end).
  double node_weight(int node) const {
    int ix = node % nodes[0];
    double w = spacing[0] * ((ix == 0 || ix == nodes[0] - 1) ? 0.5 : 1.0);
    if (dim == 2) {
      int iy = node / nodes[0];
      w *= spacing[1] * ((iy == 0 || iy == nodes[1] - 1) ? 0.5 : 1.0);
    }
    return w;
  }

  // Cells are edges in 1d, (n1-1)(n2-1) squares in 2d; each has full measure.
  int cell_count() const {
    if (dim == 1) return nodes[0] - 1;
    return (nodes[0] - 1) * (nodes[1] - 1);
  }

  double cell_weight() const {
    return dim == 1 ? spacing[0] : spacing[0] * spacing[1];
  }

  double min_spacing() const {
    return dim == 1 ? spacing[0] : std::min(spacing[0], spacing[1]);
  }

  bool same_layout(const Grid& o) const {
    return dim == o.dim && nodes == o.nodes && lengths == o.lengths;
  }
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr build_grid(int dim, const std::vector<int>& nodes_per_axis,
                          const std::vector<double>& axis_lengths) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("build_grid: dim must be 1 or 2, got " +
                                std::to_string(dim));
  if (static_cast<int>(nodes_per_axis.size()) != dim ||
      static_cast<int>(axis_lengths.size()) != dim)
    throw std::invalid_argument("build_grid: need one node count and one length per axis");

  auto g = std::make_shared<Grid>();
  g->dim = dim;
  g->nodes = {nodes_per_axis[0], dim == 2 ? nodes_per_axis[1] : 1};
  g->lengths = {axis_lengths[0], dim == 2 ? axis_lengths[1] : 0.0};
  for (int k = 0; k < dim; ++k) {
    if (nodes_per_axis[k] < 3)
      throw std::invalid_argument("build_grid: need at least 3 nodes per axis");
    if (!(axis_lengths[k] > 0.0))
      throw std::invalid_argument("build_grid: axis lengths must be positive");
    g->spacing[k] = axis_lengths[k] / (nodes_per_axis[k] - 1);
  }

  g->boundary.assign(g->node_count(), 0);
  if (dim == 1) {
    g->boundary.front() = 1;
    g->boundary.back() = 1;
  } else {
    for (int iy = 0; iy < g->nodes[1]; ++iy)
      for (int ix = 0; ix < g->nodes[0]; ++ix)
        if (ix == 0 || iy == 0 || ix == g->nodes[0] - 1 || iy == g->nodes[1] - 1)
          g->boundary[g->index(ix, iy)] = 1;
  }
  return g;
}

struct Field {
  GridPtr grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(GridPtr g, double fill = 0.0)
      : grid(std::move(g)), values(grid->node_count(), fill) {}
  Field(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid->node_count())
      throw std::invalid_argument("Field: value count does not match grid");
  }

  double& operator[](int i) { return values[i]; }
  double operator[](int i) const { return values[i]; }
  int size() const { return static_cast<int>(values.size()); }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline void require_same_grid(const Field& a, const Field& b, const char* where) {
  if (!a.grid || !b.grid || !a.grid->same_layout(*b.grid))
    throw std::invalid_argument(std::string(where) + ": fields live on different grids");
}

// Returns a copy of `field` with boundary nodes replaced by the values of g.
// Interior values pass through untouched; idempotent.
inline Field apply_dirichlet(const Field& field, const Field& g) {
  require_same_grid(field, g, "apply_dirichlet");
  Field out = field;
  const Grid& grid = *field.grid;
  for (int i = 0; i < grid.node_count(); ++i)
    if (grid.is_boundary(i)) out.values[i] = g.values[i];
  return out;
}

// Samples f(x) or f(x,y) at every node. Two-argument callables receive
// y = 0 on 1d grids.
template <class F>
Field sample_field(const GridPtr& grid, F&& f) {
  Field out(grid);
  if constexpr (std::is_invocable_v<F&, double, double>) {
    for (int i = 0; i < grid->node_count(); ++i) out[i] = f(grid->x(i), grid->y(i));
  } else {
    for (int i = 0; i < grid->node_count(); ++i) out[i] = f(grid->x(i));
  }
  return out;
}

}  // namespace pflow
