#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pflow/energy.hpp"
#include "pflow/operators.hpp"
#include "test_helpers.hpp"

using namespace pflow;
using namespace pflow::testing;

TEST_CASE("gradient is exact on affine functions") {
  auto g1 = grid_1d(9);
  Field u = sample_field(g1, [](double x) { return x; });
  GradientField gf = gradient(g1, u);
  for (int e = 0; e < gf.location_count(); ++e)
    CHECK(gf.data[e] == Catch::Approx(1.0).margin(1e-14));

  Field c(g1, 3.0);
  gf = gradient(g1, c);
  for (double v : gf.data) CHECK(v == 0.0);

  auto g2 = grid_2d(6, 5, 2.0, 1.0);
  Field ux = sample_field(g2, [](double x, double) { return x; });
  gf = gradient(g2, ux);
  REQUIRE(gf.components == 2);
  for (int c2 = 0; c2 < gf.location_count(); ++c2) {
    CHECK(gf.data[2 * c2] == Catch::Approx(1.0).margin(1e-13));
    CHECK(gf.data[2 * c2 + 1] == Catch::Approx(0.0).margin(1e-13));
  }

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    double a = coef(rng), b = coef(rng), c3 = coef(rng);
    Field w = sample_field(g2, [&](double x, double y) { return a + b * x + c3 * y; });
    gf = gradient(g2, w);
    for (int cc = 0; cc < gf.location_count(); ++cc) {
      REQUIRE(gf.data[2 * cc] == Catch::Approx(b).margin(1e-12));
      REQUIRE(gf.data[2 * cc + 1] == Catch::Approx(c3).margin(1e-12));
    }
  }
}

TEST_CASE("p_laplacian vanishes on affine data") {
  auto grid = grid_1d(11);
  Field u = sample_field(grid, [](double x) { return 2.0 * x - 0.5; });
  for (double pv : {2.0, 3.0, 4.5}) {
    Field lap = p_laplacian(grid, u, PExponent(pv));
    for (int i = 0; i < grid->node_count(); ++i) CHECK(std::abs(lap[i]) < 1e-11);
  }
}

TEST_CASE("p=2 p_laplacian is the three-point stencil, exact on quadratics") {
  auto grid = grid_1d(21);
  Field u = sample_field(grid, [](double x) { return x * x; });
  Field lap = p_laplacian(grid, u, PExponent(2.0));
  for (int i = 1; i < grid->node_count() - 1; ++i)
    CHECK(lap[i] == Catch::Approx(2.0).epsilon(1e-11));
  CHECK(lap[0] == 0.0);
  CHECK(lap[grid->node_count() - 1] == 0.0);
}

TEST_CASE("p_laplacian matches the finite-difference energy oracle") {
  std::mt19937 rng(11);
  for (auto grid : {grid_1d(13), grid_2d(7, 8)}) {
    Field u = random_smooth_field(grid, rng);
    PExponent p(3.0);
    Field lap = p_laplacian(grid, u, p);
    for (int i = 0; i < grid->node_count(); ++i) {
      if (grid->is_boundary(i)) {
        REQUIRE(lap[i] == 0.0);
        continue;
      }
      double oracle = -fd_energy_gradient(grid, u, p, i) / grid->node_weight(i);
      REQUIRE(lap[i] == Catch::Approx(oracle).epsilon(1e-6).margin(1e-8));
    }
  }
}

TEST_CASE("energy gradient and p_laplacian are weight-conjugate") {
  std::mt19937 rng(13);
  auto grid = grid_2d(6, 6);
  Field u = random_smooth_field(grid, rng);
  PExponent p(4.0);
  Field eg = energy_gradient(grid, u, p);
  Field lap = p_laplacian(grid, u, p);
  for (int i = 0; i < grid->node_count(); ++i) {
    if (grid->is_boundary(i))
      CHECK(eg[i] == 0.0);
    else
      CHECK(eg[i] == Catch::Approx(-lap[i] * grid->node_weight(i)).epsilon(1e-13));
  }
}

// Directional-derivative consistency: dE(u)[delta] = -sum w_i lap_i delta_i.
TEST_CASE("discrete energy and p_laplacian are adjoint") {
  std::mt19937 rng(17);
  for (double pv : {2.0, 3.0, 4.0}) {
    for (auto grid : {grid_1d(15), grid_2d(6, 7)}) {
      PExponent p(pv);
      Field u = random_smooth_field(grid, rng);
      Field delta = random_noise_field(grid, rng);
      for (int i = 0; i < grid->node_count(); ++i)
        if (grid->is_boundary(i)) delta[i] = 0.0;

      double eta = 1e-6;
      Field up = u, um = u;
      for (int i = 0; i < grid->node_count(); ++i) {
        up[i] += eta * delta[i];
        um[i] -= eta * delta[i];
      }
      double directional =
          (dirichlet_energy(grid, up, p) - dirichlet_energy(grid, um, p)) / (2.0 * eta);

      Field lap = p_laplacian(grid, u, p);
      double pairing = 0.0;
      for (int i = 0; i < grid->node_count(); ++i)
        pairing -= grid->node_weight(i) * lap[i] * delta[i];
      REQUIRE(directional == Catch::Approx(pairing).epsilon(1e-6).margin(1e-9));
    }
  }
}

TEST_CASE("lp_norm basics") {
  auto grid = grid_1d(41);
  Field one(grid, 1.0);
  for (double p : {1.0, 2.0, 3.5, 6.0})
    CHECK(lp_norm(grid, one, p) == Catch::Approx(1.0).epsilon(1e-12));

  Field zero(grid, 0.0);
  CHECK(lp_norm(grid, zero, 2.0) == 0.0);

  auto g2 = grid_2d(9, 9, 2.0, 0.5);
  Field one2(g2, 1.0);
  CHECK(lp_norm(g2, one2, 3.0) == Catch::Approx(1.0).epsilon(1e-12));  // measure = 1

  CHECK_THROWS_AS(lp_norm(grid, one, 0.5), std::invalid_argument);
}

TEST_CASE("lp_norm of x on (0,1) approximates 1/sqrt(3)") {
  auto grid = grid_1d(101);
  Field u = sample_field(grid, [](double x) { return x; });
  CHECK(lp_norm(grid, u, 2.0) == Catch::Approx(1.0 / std::sqrt(3.0)).margin(1e-3));
}

TEST_CASE("lp_norm homogeneity") {
  std::mt19937 rng(23);
  auto grid = grid_2d(8, 6);
  Field u = random_noise_field(grid, rng);
  for (double lambda : {-3.25, 0.5, 7.0}) {
    Field v = u;
    for (double& x : v.values) x *= lambda;
    for (double p : {1.0, 2.0, 4.0})
      REQUIRE(lp_norm(grid, v, p) ==
              Catch::Approx(std::abs(lambda) * lp_norm(grid, u, p)).epsilon(1e-12));
  }
}

TEST_CASE("w1p_seminorm exact and approximate values") {
  auto grid = grid_1d(201);
  Field u = sample_field(grid, [](double x) { return x; });
  for (double pv : {2.0, 3.0, 4.0, 6.0})
    CHECK(w1p_seminorm(grid, u, PExponent(pv)) == Catch::Approx(1.0).epsilon(1e-12));

  Field c(grid, 2.0);
  CHECK(w1p_seminorm(grid, c, PExponent(3.0)) == 0.0);

  // || d/dx sin(pi x) ||_2 = pi / sqrt(2)
  Field s = sample_field(grid, [](double x) { return std::sin(M_PI * x); });
  CHECK(w1p_seminorm(grid, s, PExponent(2.0)) ==
        Catch::Approx(M_PI / std::sqrt(2.0)).margin(1e-2));
}

TEST_CASE("ineq_a1_gap equality cases and positivity") {
  PExponent p2(2.0);
  std::vector<double> a{1.0}, b{-1.0};
  CHECK(ineq_a1_gap(a, a, p2) == Catch::Approx(0.0).margin(1e-15));
  // <|a|^{p-2}a - |b|^{p-2}b, a-b> = 4 and the bound 2^{2-p}|a-b|^p = 4
  CHECK(ineq_a1_gap(a, b, p2) == Catch::Approx(0.0).margin(1e-14));

  std::mt19937 rng(31);
  std::uniform_real_distribution<double> coef(-3.0, 3.0), pdist(2.0, 6.0);
  for (int trial = 0; trial < 1000; ++trial) {
    int dim = 1 + trial % 3;
    std::vector<double> x(dim), y(dim);
    for (int k = 0; k < dim; ++k) {
      x[k] = coef(rng);
      y[k] = coef(rng);
    }
    REQUIRE(ineq_a1_gap(x, y, PExponent(pdist(rng))) >= -1e-12);
  }

  CHECK_THROWS_AS(ineq_a1_gap(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}, p2),
                  std::invalid_argument);
}

TEST_CASE("ineq_a2_gap equality cases and positivity with the default constant") {
  PExponent p3(3.0);
  std::vector<double> a{0.7, -0.2}, zero{0.0, 0.0};
  CHECK(ineq_a2_gap(a, a, p3, default_a2_constant(p3)) == Catch::Approx(0.0).margin(1e-15));
  // a = 0, c = 1: gap = |b|^p - c |b|^p = 0
  CHECK(ineq_a2_gap(zero, a, p3, 1.0) == Catch::Approx(0.0).margin(1e-14));

  std::mt19937 rng(37);
  std::uniform_real_distribution<double> coef(-3.0, 3.0), pdist(2.0, 6.0);
  for (int trial = 0; trial < 1000; ++trial) {
    int dim = 1 + trial % 3;
    std::vector<double> x(dim), y(dim);
    for (int k = 0; k < dim; ++k) {
      x[k] = coef(rng);
      y[k] = coef(rng);
    }
    PExponent p(pdist(rng));
    REQUIRE(ineq_a2_gap(x, y, p, default_a2_constant(p)) >= -1e-12);
  }
}

TEST_CASE("ineq_a3_check diagnostics") {
  auto grid = grid_1d(33);
  std::mt19937 rng(41);
  PExponent p(3.0);

  Field u = random_smooth_field(grid, rng);
  GradientField f = gradient(grid, u);
  A3Check same = ineq_a3_check(grid, f, f, p, 100.0);
  CHECK(same.lhs == 0.0);
  CHECK(same.rhs == 0.0);

  Field z(grid, 0.0);
  GradientField gz = gradient(grid, z);
  A3Check vs_zero = ineq_a3_check(grid, f, gz, p, 100.0);
  double nf = gradient_lp_norm(f, 3.0);
  CHECK(vs_zero.lhs == Catch::Approx(std::pow(nf, 3.0)).epsilon(1e-12));

  // ratio lhs/rhs is bounded by p 2^{p-1} (mean value + Hoelder); observe it
  double max_ratio = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Field ua = random_smooth_field(grid, rng);
    Field ub = random_smooth_field(grid, rng);
    GradientField fa = gradient(grid, ua), fb = gradient(grid, ub);
    double M = std::max(gradient_lp_norm(fa, 3.0), gradient_lp_norm(fb, 3.0));
    A3Check chk = ineq_a3_check(grid, fa, fb, p, M);
    if (chk.rhs > 1e-12) max_ratio = std::max(max_ratio, chk.lhs / chk.rhs);
  }
  CHECK(max_ratio > 0.0);
  CHECK(max_ratio <= 3.0 * std::pow(2.0, 2.0) + 1e-9);

  CHECK_THROWS_AS(ineq_a3_check(grid, f, gz, p, 0.5 * nf), std::invalid_argument);
}

TEST_CASE("PExponent rejects p below 2") {
  CHECK_THROWS_AS(PExponent(1.5), std::invalid_argument);
  CHECK_NOTHROW(PExponent(2.0));
}
