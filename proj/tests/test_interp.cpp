#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>

#include "slhjb/interp.hpp"
#include "slhjb/verify.hpp"

using namespace slhjb;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("multilinear weights at a node collapse to a delta") {
  const Grid g = build_grid_2d(0.0, 1.0, 5, 0.0, 1.0, 5);
  const InterpolationWeights w = multilinear_weights(g, {0.25, 0.75, 0});
  double total = 0.0;
  for (const auto& [i, wi] : w.entries) total += wi;
  CHECK(total == Approx(1.0).margin(1e-15));

  const InterpolationWeights d = multilinear_weights(g, g.node(std::ptrdiff_t{7}));
  double at_node = 0.0;
  for (const auto& [i, wi] : d.entries)
    if (i == 7) at_node += wi;
  CHECK(at_node == Approx(1.0).margin(1e-13));
}

TEST_CASE("1d cell midpoint weights are half and half") {
  const Grid g = build_grid_1d(0.0, 4.0, 5);  // unit cells
  const InterpolationWeights w = multilinear_weights(g, {0.5, 0, 0});
  REQUIRE(w.entries.size() == 2);
  CHECK(w.entries[0].second == Approx(0.5).margin(1e-15));
  CHECK(w.entries[1].second == Approx(0.5).margin(1e-15));
}

TEST_CASE("2d unit cell weights at (0.25, 0.75)") {
  // frozen tensor products (1-x or x)(1-y or y)
  const Grid g = build_grid_2d(0.0, 4.0, 5, 0.0, 4.0, 5);  // unit cells
  const InterpolationWeights w = multilinear_weights(g, {0.25, 0.75, 0});
  double w00 = 0, w10 = 0, w01 = 0, w11 = 0;
  for (const auto& [i, wi] : w.entries) {
    const auto idx = g.multi_index(i);
    if (idx[0] == 0 && idx[1] == 0) w00 = wi;
    if (idx[0] == 1 && idx[1] == 0) w10 = wi;
    if (idx[0] == 0 && idx[1] == 1) w01 = wi;
    if (idx[0] == 1 && idx[1] == 1) w11 = wi;
  }
  CHECK(w00 == Approx(0.1875).margin(1e-15));
  CHECK(w10 == Approx(0.0625).margin(1e-15));
  CHECK(w01 == Approx(0.5625).margin(1e-15));
  CHECK(w11 == Approx(0.1875).margin(1e-15));
}

TEST_CASE("points outside the box raise an overstep error") {
  const Grid g = build_grid_1d(0.0, 1.0, 5);
  CHECK_THROWS_AS(multilinear_weights(g, {1.5, 0, 0}), OverstepError);
  CHECK_THROWS_AS(multilinear_weights(g, {-0.5, 0, 0}), OverstepError);
}

TEST_CASE("derivative estimate is exact through degree four") {
  CHECK(derivative_estimate({-2, -1, 0, 1, 2}, 1.0) == Approx(1.0).margin(1e-14));
  // phi = x^2 centered at 1: values at -1,0,(1),2,3
  CHECK(derivative_estimate({1, 0, 1, 4, 9}, 1.0) == Approx(2.0).margin(1e-14));
  // phi = x^4 centered at 1: values at -1,0,(1),2,3
  CHECK(derivative_estimate({1, 0, 1, 16, 81}, 1.0) == Approx(4.0).margin(1e-14));
}

TEST_CASE("slope limiter reference cases") {
  SECTION("flat interval zeroes both slopes") {
    const auto [l0, l1] = limit_slopes(3.7, -1.2, 0.0);
    CHECK(l0 == 0.0);
    CHECK(l1 == 0.0);
  }
  SECTION("ratio (1,1) is interior to the ellipse and unchanged") {
    const auto [l0, l1] = limit_slopes(0.8, 0.8, 0.8);
    CHECK(l0 == Approx(0.8));
    CHECK(l1 == Approx(0.8));
  }
  SECTION("ratios (4,4) project to the corner (3,3)") {
    const auto [l0, l1] = limit_slopes(4.0, 4.0, 1.0);
    CHECK(l0 == Approx(3.0));
    CHECK(l1 == Approx(3.0));
  }
  SECTION("negative ratio clips to zero, partner stays") {
    const auto [l0, l1] = limit_slopes(-1.0, 1.0, 1.0);
    CHECK(l0 == 0.0);
    CHECK(l1 == Approx(1.0));
  }
}

TEST_CASE("cubic segment evaluation") {
  SECTION("Hermite endpoint conditions") {
    CHECK(cubic_eval_1d(2.0, 5.0, 1.3, -0.4, 0.7, 0.0) == Approx(2.0));
    CHECK(cubic_eval_1d(2.0, 5.0, 1.3, -0.4, 0.7, 0.7) == Approx(5.0).margin(1e-13));
  }
  SECTION("linear data with exact slopes reproduces the line") {
    for (double xi : {0.1, 0.25, 0.6}) {
      CHECK(cubic_eval_1d(1.0, 1.0 + 2.0 * 0.8, 2.0, 2.0, 0.8, xi) ==
            Approx(1.0 + 2.0 * xi).margin(1e-14));
    }
  }
  SECTION("x^3 on [0,1] with exact end slopes is reproduced") {
    CHECK(cubic_eval_1d(0.0, 1.0, 0.0, 3.0, 1.0, 0.5) == Approx(0.125).margin(1e-14));
  }
}

TEST_CASE("interpolation reproduces node values for both kinds") {
  const Grid g = build_grid_2d(-1.0, 2.0, 7, 0.0, 1.0, 6);
  const GridFunction u =
      sample_on_grid(g, 0.0, [](const Vec& x) { return std::sin(3 * x[0]) + x[1] * x[1]; });
  for (std::ptrdiff_t j = 0; j < g.num_nodes; j += 5) {
    const Vec p = g.node(j);
    CHECK(interpolate(u, p, InterpKind::Multilinear) == Approx(u[j]).margin(1e-13));
    CHECK(interpolate(u, p, InterpKind::MonotoneCubic) == Approx(u[j]).margin(1e-13));
  }
}

TEST_CASE("monotone cubic stays within neighbouring node values on monotone data") {
  const Grid g = build_grid_1d(-pi, pi, 17);
  const GridFunction u = sample_on_grid(g, 0.0, [](const Vec& x) { return std::sin(x[0] / 2.0); });
  for (int i = 0; i + 1 < 17; ++i) {
    for (int s = 0; s <= 50; ++s) {
      const double x = g.coord(0, i) + s / 50.0 * g.dx[0];
      const double v = interpolate(u, {x, 0, 0}, InterpKind::MonotoneCubic);
      CHECK(v >= u[i] - 1e-12);
      CHECK(v <= u[i + 1] + 1e-12);
    }
  }
}

TEST_CASE("tensor product cubic reproduces bilinear data at cell centers") {
  const Grid g = build_grid_2d(0.0, 1.0, 6, 0.0, 1.0, 6);
  const GridFunction u = sample_on_grid(g, 0.0, [](const Vec& x) { return x[0] * x[1]; });
  for (int i = 0; i + 1 < 6; ++i)
    for (int j = 0; j + 1 < 6; ++j) {
      const Vec p{g.coord(0, i) + 0.5 * g.dx[0], g.coord(1, j) + 0.5 * g.dx[1], 0};
      CHECK(interpolate(u, p, InterpKind::MonotoneCubic) == Approx(p[0] * p[1]).margin(1e-13));
    }
}

TEST_CASE("interp property suite passes") {
  const SuiteResult sr = verify_suite_interp();
  for (const CheckResult& c : sr.checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.pass);
  }
}
