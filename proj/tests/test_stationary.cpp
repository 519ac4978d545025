#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pflow/stationary.hpp"
#include "test_helpers.hpp"

using namespace pflow;
using namespace pflow::testing;

namespace {

// Slow-but-sure oracle: plain gradient descent with a fixed small step.
Field brute_force_minimizer(const GridPtr& grid, const Field& g, const PExponent& p,
                            double step, long iterations) {
  Field u = boundary_interpolant(grid, g);
  Field grad(grid);
  for (long it = 0; it < iterations; ++it) {
    energy_gradient_into(grid, u, p, grad);
    for (int i = 0; i < grid->node_count(); ++i)
      if (!grid->is_boundary(i)) u[i] -= step * grad[i];
  }
  return u;
}

}  // namespace

TEST_CASE("boundary interpolant reproduces affine data everywhere") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  auto grid = grid_2d(9, 7, 1.5, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    double a = coef(rng), b = coef(rng), c = coef(rng);
    Field g = sample_field(grid, [&](double x, double y) { return a + b * x + c * y; });
    Field u = boundary_interpolant(grid, g);
    CHECK(sup_diff(u, g) < 1e-13);
  }
  // the transfinite interpolant also reproduces bilinear data
  Field gxy = sample_field(grid, [](double x, double y) { return 1.0 + x * y; });
  CHECK(sup_diff(boundary_interpolant(grid, gxy), gxy) < 1e-13);
}

TEST_CASE("energy gradient vanishes for 1d affine data") {
  auto grid = grid_1d(17);
  Field u = sample_field(grid, [](double x) { return 3.0 * x - 1.0; });
  for (double pv : {2.0, 3.0, 4.0}) {
    Field eg = energy_gradient(grid, u, PExponent(pv));
    CHECK(interior_residual(grid, eg) < 1e-12);
  }
}

TEST_CASE("energy gradient matches central finite differences") {
  std::mt19937 rng(19);
  for (double pv : {2.0, 3.0, 4.0}) {
    for (auto grid : {grid_1d(12), grid_2d(6, 5)}) {
      PExponent p(pv);
      Field u = random_smooth_field(grid, rng);
      Field eg = energy_gradient(grid, u, p);
      for (int i = 0; i < grid->node_count(); ++i) {
        if (grid->is_boundary(i)) continue;
        REQUIRE(eg[i] ==
                Catch::Approx(fd_energy_gradient(grid, u, p, i)).epsilon(1e-6).margin(1e-9));
      }
    }
  }
}

TEST_CASE("p=2 energy gradient equals the assembled stiffness action") {
  auto grid = grid_1d(25);
  std::mt19937 rng(29);
  Field u = random_smooth_field(grid, rng);
  Field eg = energy_gradient(grid, u, PExponent(2.0));
  double inv_h = 1.0 / grid->spacing[0];
  for (int i = 1; i < grid->node_count() - 1; ++i) {
    double stiffness = (2.0 * u[i] - u[i - 1] - u[i + 1]) * inv_h;
    REQUIRE(eg[i] == Catch::Approx(stiffness).epsilon(1e-12).margin(1e-14));
  }
}

TEST_CASE("1d stationary solutions with affine boundary data are affine") {
  auto grid = grid_1d(101);
  Field g = sample_field(grid, [](double x) { return x; });
  for (double pv : {2.0, 3.0, 4.0, 6.0}) {
    StationaryResult res = solve_stationary(grid, g, PExponent(pv), 1e-8, 10000);
    REQUIRE(res.converged);
    CHECK(sup_diff(res.u_star, g) < 1e-8);
  }
}

TEST_CASE("2d harmonic extension of g = x is exact") {
  auto grid = grid_2d(17, 17);
  Field g = sample_field(grid, [](double x, double) { return x; });
  StationaryResult res = solve_stationary(grid, g, PExponent(2.0), 1e-8, 10000);
  REQUIRE(res.converged);
  CHECK(sup_diff(res.u_star, g) < 1e-8);
}

TEST_CASE("2d degenerate problem matches the brute-force oracle") {
  auto grid = grid_2d(9, 9);
  PExponent p(4.0);
  Field g = sample_field(grid, [](double x, double y) { return x * x - y * y; });

  StationaryResult res = solve_stationary(grid, g, p, 1e-10, 50000);
  REQUIRE(res.converged);

  Field oracle = brute_force_minimizer(grid, g, p, 2e-3, 1000000);
  CHECK(sup_diff(res.u_star, oracle) < 1e-5);
}

TEST_CASE("2d solve with p=2 matches the oracle too") {
  auto grid = grid_2d(9, 9);
  PExponent p(2.0);
  std::mt19937 rng(31);
  Field g = random_smooth_field(grid, rng);
  StationaryResult res = solve_stationary(grid, g, p, 1e-11, 50000);
  REQUIRE(res.converged);
  Field oracle = brute_force_minimizer(grid, g, p, 2e-3, 400000);
  CHECK(sup_diff(res.u_star, oracle) < 1e-6);
}

TEST_CASE("unreachable tolerance reports the best iterate") {
  auto grid = grid_2d(9, 9);
  Field g = sample_field(grid, [](double x, double y) { return x * x - y * y; });
  StationaryResult res = solve_stationary(grid, g, PExponent(4.0), 1e-10, 3);
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 3);
  CHECK(res.residual > 1e-10);
  CHECK(res.u_star.all_finite());
  // descent still went downhill from the interpolant
  CHECK(res.energy <=
        dirichlet_energy(grid, boundary_interpolant(grid, g), PExponent(4.0)) + 1e-14);
}

TEST_CASE("solver rejects bad inputs") {
  auto grid = grid_1d(11);
  Field g = sample_field(grid, [](double x) { return x; });
  CHECK_THROWS_AS(solve_stationary(grid, g, PExponent(2.0), 0.0, 10), std::invalid_argument);
  g[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(solve_stationary(grid, g, PExponent(2.0), 1e-8, 10), std::invalid_argument);
}

TEST_CASE("minimality gap is nonnegative over admissible competitors") {
  auto grid = grid_1d(41);
  PExponent p(3.0);
  Field g = sample_field(grid, [](double x) { return 2.0 * x; });
  StationaryResult res = solve_stationary(grid, g, p, 1e-10, 10000);
  REQUIRE(res.converged);

  CHECK(minimality_gap(grid, res.u_star, res.u_star, p) == 0.0);

  Field bump = res.u_star;
  bump[grid->node_count() / 2] += 0.25;
  CHECK(minimality_gap(grid, res.u_star, bump, p) > 0.0);

  std::mt19937 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    Field v = res.u_star;
    Field noise = random_noise_field(grid, rng, 0.5);
    for (int i = 0; i < grid->node_count(); ++i)
      if (!grid->is_boundary(i)) v[i] += noise[i];
    REQUIRE(minimality_gap(grid, res.u_star, v, p) >= -1e-9);
  }

  Field wrong = res.u_star;
  wrong[0] += 1.0;
  CHECK_THROWS_AS(minimality_gap(grid, res.u_star, wrong, p), std::invalid_argument);
}
