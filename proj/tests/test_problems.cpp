#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "slhjb/problems.hpp"
#include "slhjb/verify.hpp"

using namespace slhjb;

namespace {
constexpr double pi = std::numbers::pi;
constexpr double fd_h = 0.01;

// fourth-order finite differences of the exact solution; the independent
// oracle for the coefficient transcriptions
template <typename F>
double d1(F&& f, double h) {
  return (f(-2 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2 * h)) / (12.0 * h);
}
template <typename F>
double d2(F&& f, double h) {
  return (-f(-2 * h) + 16.0 * f(-h) - 30.0 * f(0.0) + 16.0 * f(h) - f(2 * h)) / (12.0 * h * h);
}

struct ExactDerivs {
  double ut, u1, u2, u11, u22, u12;
};

ExactDerivs fd_derivs(const std::function<double(double, const Vec&)>& u, double t, const Vec& x,
                      double h = fd_h) {
  ExactDerivs d;
  d.ut = d1([&](double s) { return u(t + s, x); }, h);
  d.u1 = d1([&](double s) { return u(t, Vec{x[0] + s, x[1], 0}); }, h);
  d.u2 = d1([&](double s) { return u(t, Vec{x[0], x[1] + s, 0}); }, h);
  d.u11 = d2([&](double s) { return u(t, Vec{x[0] + s, x[1], 0}); }, h);
  d.u22 = d2([&](double s) { return u(t, Vec{x[0], x[1] + s, 0}); }, h);
  d.u12 = d1(
      [&](double s1) {
        return d1([&](double s2) { return u(t, Vec{x[0] + s1, x[1] + s2, 0}); }, h);
      },
      h);
  return d;
}

double trace_a_d2(const Problem& p, double t, const Vec& x, const Control& c, const ExactDerivs& d) {
  Mat s;
  s.set_zero(p.dim, p.sigma_cols);
  p.sigma(t, x, c, s);
  double a11 = 0, a12 = 0, a22 = 0;
  for (int col = 0; col < s.cols; ++col) {
    a11 += 0.5 * s(0, col) * s(0, col);
    a12 += 0.5 * s(0, col) * s(1, col);
    a22 += 0.5 * s(1, col) * s(1, col);
  }
  return a11 * d.u11 + 2.0 * a12 * d.u12 + a22 * d.u22;
}
}  // namespace

TEST_CASE("smooth linear problem satisfies its own PDE") {
  std::mt19937_64 rng(4242u);
  std::uniform_real_distribution<double> ux(-2.5, 2.5), ut_(0.05, 0.95);
  for (double beta2 : {0.1, 0.0}) {
    const BenchmarkProblem bp = smooth_linear(beta2);
    const Problem p = bp.make(0.1);
    REQUIRE(p.exact.has_value());
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const double t = ut_(rng);
      const Vec x{ux(rng), ux(rng), 0};
      const ExactDerivs d = fd_derivs(*p.exact, t, x);
      const Control c0 = p.control_set.at(0, 0);
      const double R = d.ut - trace_a_d2(p, t, x, c0, d) - p.eval_f(t, x, c0);
      worst = std::max(worst, std::abs(R));
    }
    INFO("beta2 = " << beta2);
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("smooth linear exact values") {
  const Problem p = smooth_linear(0.1).make(0.1);
  CHECK((*p.exact)(1.0, {pi / 2, pi / 2, 0}) == Approx(1.0).margin(1e-14));
  std::mt19937_64 rng(7u);
  std::uniform_real_distribution<double> ux(-pi, pi);
  for (int i = 0; i < 20; ++i) {
    const Vec x{ux(rng), ux(rng), 0};
    CHECK(p.g(x) == Approx((*p.exact)(0.0, x)).margin(1e-15));
  }
}

TEST_CASE("non-smooth linear problem: continuity and branchwise PDE") {
  const BenchmarkProblem bp = nonsmooth_linear();
  const Problem p = bp.make(0.1);

  SECTION("solution is continuous across the kink line") {
    for (double x2 : {-2.0, 0.4, 3.0}) {
      const double left = (*p.exact)(0.7, {-1e-12, x2, 0});
      const double right = (*p.exact)(0.7, {1e-12, x2, 0});
      CHECK(left == Approx(right).margin(1e-11));
    }
  }
  SECTION("published spot value at t=1, x=(pi/2, pi)") {
    CHECK((*p.exact)(1.0, {pi / 2, pi, 0}) == Approx(2.0 * std::sin(pi / 8.0)).margin(1e-14));
  }
  SECTION("PDE residual away from the kink") {
    std::mt19937_64 rng(99u);
    std::uniform_real_distribution<double> ux(0.3, 2.9), ut_(0.05, 0.95), uside(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const double t = ut_(rng);
      const double sgn = uside(rng) < 0.5 ? -1.0 : 1.0;
      const Vec x{sgn * ux(rng), ux(rng) - 1.5, 0};
      const ExactDerivs d = fd_derivs(*p.exact, t, x);
      const Control c0 = p.control_set.at(0, 0);
      const double R = d.ut - trace_a_d2(p, t, x, c0, d) - p.eval_f(t, x, c0);
      worst = std::max(worst, std::abs(R));
    }
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("control problem (a): analytic infimum closes the PDE") {
  const BenchmarkProblem bp = control_problem_a();
  const Problem p = bp.make(0.15);
  std::mt19937_64 rng(5150u);
  std::uniform_real_distribution<double> ux(-2.8, 2.8), ut_(0.02, 0.48);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double t = ut_(rng);
    const Vec x{ux(rng), ux(rng), 0};
    const ExactDerivs d = fd_derivs(*p.exact, t, x);
    const Control c0 = p.control_set.at(0, 0);
    // inf over the unit circle of alpha . Du is -|Du|
    const double R = d.ut - trace_a_d2(p, t, x, c0, d) + std::hypot(d.u1, d.u2) - p.eval_f(t, x, c0);
    worst = std::max(worst, std::abs(R));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("control problem (b): every frozen control closes the PDE") {
  const BenchmarkProblem bp = control_problem_b();
  const Problem p = bp.make(0.15);
  std::mt19937_64 rng(31415u);
  std::uniform_real_distribution<double> ux(-2.8, 2.8), ut_(0.02, 0.48), ua(0.0, 2 * pi);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double t = ut_(rng);
    const Vec x{ux(rng), ux(rng), 0};
    const double ang = ua(rng);
    const Control c{Vec{std::cos(ang), std::sin(ang), 0}, zero_vec()};
    const ExactDerivs d = fd_derivs(*p.exact, t, x);
    const double R = d.ut - trace_a_d2(p, t, x, c, d) - p.eval_f(t, x, c);
    worst = std::max(worst, std::abs(R));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("super-replication test: eigenvalue form matches the source term") {
  const BenchmarkProblem bp = superrep_convergence_test();
  const Problem p = bp.make(0.15);
  REQUIRE(p.form == HamiltonianForm::TimeWeighted);
  std::mt19937_64 rng(2718u);
  std::uniform_real_distribution<double> ux(0.2, 2.8), ut_(0.05, 0.95);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double t = ut_(rng);
    const Vec x{ux(rng), ux(rng), 0};
    const ExactDerivs d = fd_derivs(*p.exact, t, x, 0.005);
    const double eta = x[1] * (3.0 - x[1]);
    const double A = d.ut - 0.5 * x[0] * x[0] * x[1] * d.u11;
    const double B = -0.5 * eta * eta * d.u22;
    const double C = -x[0] * std::sqrt(x[1] * x[1] * x[1]) * (3.0 - x[1]) * d.u12;
    const double inf_val = 0.5 * (A + B) - 0.5 * std::sqrt((A - B) * (A - B) + C * C);
    const double R = inf_val - p.eval_f(t, x, p.control_set.at(0, 0));
    worst = std::max(worst, std::abs(R));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("super-replication spot values and boundary layout") {
  const BenchmarkProblem bp = superrep_convergence_test();
  const Problem p = bp.make(0.15);
  CHECK((*p.exact)(0.0, {0, 0, 0}) == Approx(0.0).margin(1e-15));
  CHECK(p.boundary.condition[0][0] == FaceCondition::DirichletFromFunction);
  CHECK(p.boundary.condition[0][1] == FaceCondition::NeumannHomogeneous);
  CHECK(p.boundary.condition[1][1] == FaceCondition::NeumannHomogeneous);
  CHECK(p.time_weight(Control{Vec{0.6, 0.8, 0}, zero_vec()}) == Approx(0.36));
  // sigma vanishes at x2 = 0 without domain errors
  Mat s;
  s.set_zero(2, 1);
  p.sigma(0.0, {1.0, 0.0, 0}, p.control_set.at(0, 0), s);
  CHECK(s(0, 0) == 0.0);
  // half-circle control discretization: N = 3/dx points
  CHECK(p.control_set.num_alphas() == 20);
}

TEST_CASE("pricing problem data") {
  const BenchmarkProblem bp = superrep_pricing();
  const Problem p = bp.make(0.15);
  CHECK(p.g({0.0, 1.0, 0}) == 1.0);
  CHECK(p.g({1.0, 2.0, 0}) == 0.0);
  CHECK(p.g({2.5, 0.5, 0}) == 0.0);
  CHECK(p.g({0.25, 0.5, 0}) == Approx(0.75));
  CHECK_FALSE(p.exact.has_value());
}

TEST_CASE("monotone adapted grids place the extrema on nodes") {
  const BenchmarkProblem bp = smooth_linear(0.1);
  for (double dx : {pi / 40.0, pi / 80.0}) {
    const Grid g = bp.grid_for(dx);
    // pi/2 must be a node coordinate
    const double idx = (pi / 2 - g.lower[0]) / g.dx[0];
    CHECK(idx == Approx(std::round(idx)).margin(1e-9));
  }
  // the kink line x1 = 0 of the non-smooth problem sits at a cell center
  const BenchmarkProblem ns = nonsmooth_linear();
  const Grid g2 = ns.grid_for(ns.dx0_lisl);
  CHECK(g2.count[0] % 2 == 0);  // odd interval count
  const double frac = (0.0 - g2.lower[0]) / g2.dx[0];
  CHECK(frac - std::floor(frac) == Approx(0.5).margin(1e-9));
}

TEST_CASE("registry exposes the published problem names") {
  for (const std::string& name : benchmark_names()) CHECK(benchmark_by_name(name).name == name);
  CHECK_THROWS_AS(benchmark_by_name("bogus"), ConfigError);
}

TEST_CASE("control circle counts follow 4 pi / dx rounded to even") {
  const Problem pa = control_problem_a().make(pi / 80.0);
  CHECK(pa.control_set.num_alphas() == 320);
  const Problem pb = control_problem_b().make(pi / 40.0);
  CHECK(pb.control_set.num_alphas() == 160);
}

TEST_CASE("stability property suite passes") {
  const SuiteResult sr = verify_suite_stability();
  for (const CheckResult& c : sr.checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.pass);
  }
}
