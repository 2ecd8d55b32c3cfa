#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "slhjb/grid.hpp"

using namespace slhjb;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("grid spacing matches the published mesh parameters") {
  const Grid g = build_grid_2d(-pi, pi, 161, -pi, pi, 161);
  CHECK(g.mesh_width() == Approx(pi / 80.0).epsilon(1e-14));
  CHECK(g.mesh_width() == Approx(3.93e-2).epsilon(2e-3));

  const Grid h = build_grid_2d(0.0, 3.0, 21, 0.0, 3.0, 21);
  CHECK(h.mesh_width() == Approx(1.5e-1).epsilon(1e-14));
}

TEST_CASE("five-node axis produces the uniform partition") {
  const Grid g = build_grid_1d(0.0, 1.0, 5);
  for (int i = 0; i < 5; ++i) CHECK(g.coord(0, i) == Approx(0.25 * i).margin(1e-15));
}

TEST_CASE("node coordinates reproduce the bounds without drift") {
  const Grid g = build_grid_1d(-pi, pi, 1281);
  CHECK(g.coord(0, 0) == -pi);
  CHECK(g.coord(0, 1280) == Approx(pi).margin(1e-13));
}

TEST_CASE("grid construction rejects bad configurations") {
  CHECK_THROWS_AS(build_grid_1d(0.0, 1.0, 4), ConfigError);
  CHECK_THROWS_AS(build_grid_1d(1.0, 1.0, 9), ConfigError);
  CHECK_THROWS_AS(build_grid_1d(2.0, 1.0, 9), ConfigError);
}

TEST_CASE("flat and multi indices are inverse maps") {
  const Grid g = build_grid_2d(0.0, 1.0, 6, 0.0, 2.0, 9);
  for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j)
    CHECK(g.flat_index(g.multi_index(j)) == j);
}

TEST_CASE("monotone direction check on the reference cases") {
  SECTION("u = x1 increases along axis 0") {
    const Grid g = build_grid_2d(-1.0, 1.0, 9, -1.0, 1.0, 7);
    const GridFunction u = sample_on_grid(g, 0.0, [](const Vec& x) { return x[0]; });
    CHECK(check_monotone_direction(u, 0, +1));
    CHECK_FALSE(check_monotone_direction(u, 0, -1));
  }
  SECTION("sin x1 on a full period is not monotone") {
    const Grid g = build_grid_1d(-pi, pi, 33);
    const GridFunction u = sample_on_grid(g, 0.0, [](const Vec& x) { return std::sin(x[0]); });
    CHECK_FALSE(check_monotone_direction(u, 0, +1));
  }
  SECTION("sin x1 on the half period is monotone") {
    const Grid g = build_grid_1d(-pi / 2, pi / 2, 33);
    const GridFunction u = sample_on_grid(g, 0.0, [](const Vec& x) { return std::sin(x[0]); });
    CHECK(check_monotone_direction(u, 0, +1));
  }
}

TEST_CASE("monotone direction check is invariant under constant shifts") {
  std::mt19937_64 rng(11u);
  std::uniform_real_distribution<double> uv(-1.0, 1.0);
  const Grid g = build_grid_2d(0.0, 1.0, 7, 0.0, 1.0, 8);
  for (int trial = 0; trial < 50; ++trial) {
    GridFunction u(g);
    for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) u[j] = uv(rng);
    const double kappa = 10.0 * uv(rng);
    GridFunction v = u;
    for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) v[j] += kappa;
    for (int axis = 0; axis < 2; ++axis)
      CHECK(check_monotone_direction(u, axis) == check_monotone_direction(v, axis));
  }
}
