// Property suites behind the `verify` command: moment conditions, monotone
// interpolation properties, scheme monotonicity, and stability diagnostics
// on the benchmark problems.
#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "slhjb/bench.hpp"
#include "slhjb/common.hpp"
#include "slhjb/interp.hpp"
#include "slhjb/operators.hpp"
#include "slhjb/problems.hpp"
#include "slhjb/solver.hpp"

namespace slhjb {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

namespace verify_detail {

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

template <typename Rng>
Mat random_sigma(Rng& rng, int N, int P) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Mat s;
  s.set_zero(N, P);
  for (int c = 0; c < P; ++c)
    for (int r = 0; r < N; ++r) s(r, c) = u(rng);
  return s;
}

// Smooth two-control test problem with x-dependent coefficients, c <= 0,
// all-Neumann boundary; used by the scheme monotonicity checks.
inline Problem random_monotonicity_problem(unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a1 = u(rng), a2 = u(rng), a3 = u(rng), a4 = u(rng);

  Problem p;
  p.dim = 2;
  p.sigma_cols = 2;
  p.sigma = [=](double, const Vec& x, const Control& c, Mat& s) {
    s(0, 0) = 0.5 + 0.3 * std::sin(x[0] + a1 * c.alpha[0]);
    s(1, 0) = 0.2 * std::cos(x[1] + c.alpha[0]);
    s(0, 1) = 0.1 * a2;
    s(1, 1) = 0.4 + 0.2 * std::sin(a3 + x[0] * x[1]);
  };
  p.b = [=](double, const Vec& x, const Control& c, Vec& b) {
    b[0] = 0.3 * std::sin(x[1]) + 0.1 * c.alpha[0];
    b[1] = a4 * 0.2;
  };
  p.c = [=](double, const Vec& x, const Control& c) {
    return -0.5 - 0.3 * std::sin(x[0] + c.alpha[0]);  // non-positive
  };
  p.f = [=](double t, const Vec& x, const Control& c) {
    return std::cos(3.0 * x[0] - x[1]) + 0.2 * c.alpha[0] + 0.1 * t;
  };
  p.g = [](const Vec& x) { return std::sin(x[0]) * std::cos(x[1]); };
  p.control_set.alphas = {Vec{-0.7, 0, 0}, Vec{0.4, 0, 0}, Vec{1.1, 0, 0}};
  p.boundary = BoundarySpec::all_neumann();
  p.time_horizon = 1.0;
  return p;
}

}  // namespace verify_detail

// Moment conditions for all five displacement variants over random draws.
inline SuiteResult verify_suite_y1(int draws = 100) {
  SuiteResult suite{"y1", {}};
  std::mt19937_64 rng(20240601u);
  std::uniform_real_distribution<double> uk(1e-3, 1.0);
  std::uniform_real_distribution<double> ub(-2.0, 2.0);
  std::uniform_int_distribution<int> up(1, 3);

  for (int v = 1; v <= 5; ++v) {
    const Variant variant = variant_from_int(v);
    int failures = 0;
    double worst = 0.0;
    for (int d = 0; d < draws; ++d) {
      const int N = 2;
      const int P = up(rng);
      Mat sigma = verify_detail::random_sigma(rng, N, P);
      if (variant == Variant::Falcone1) sigma.set_zero(N, P);  // drift-only set
      Vec b{ub(rng), ub(rng), 0.0};
      if (variant == Variant::CrandallLions2) b = zero_vec();  // diffusion-only set
      const double k = uk(rng);
      const DisplacementSet ds = displacement_set(sigma, b, k, variant);
      const MomentReport rep = verify_y1(ds, sigma, b, k);
      if (!rep.pass()) ++failures;
      for (double r : rep.residual) worst = std::max(worst, rep.bound > 0 ? r / rep.bound : r);
    }
    CheckResult cr;
    cr.name = "moment conditions, variant " + std::to_string(v) + " x " + std::to_string(draws) + " draws";
    cr.pass = failures == 0;
    cr.detail = "worst residual/bound = " + verify_detail::num(worst);
    suite.checks.push_back(cr);
  }
  return suite;
}

inline SuiteResult verify_suite_interp() {
  SuiteResult suite{"interp", {}};
  std::mt19937_64 rng(977121u);

  {  // weight positivity, partition of unity, linear reproduction
    double worst_negative = 0.0, worst_sum = 0.0, worst_linear = 0.0;
    std::uniform_real_distribution<double> ubox(-3.0, 3.0);
    for (int trial = 0; trial < 6; ++trial) {
      const int dim = 1 + trial % 3;
      Vec lo = zero_vec(), hi = zero_vec();
      std::array<int, kMaxDim> counts{1, 1, 1};
      std::uniform_int_distribution<int> ucount(5, 17);
      for (int a = 0; a < dim; ++a) {
        const double c0 = ubox(rng), c1 = ubox(rng);
        lo[a] = std::min(c0, c1) - 0.5;
        hi[a] = std::max(c0, c1) + 0.5;
        counts[a] = ucount(rng);
      }
      const Grid g = build_grid(dim, lo, hi, counts);
      std::uniform_real_distribution<double> upt(0.0, 1.0);
      for (int q = 0; q < 10000; ++q) {
        Vec p = zero_vec();
        for (int a = 0; a < dim; ++a) p[a] = lo[a] + upt(rng) * (hi[a] - lo[a]);
        const InterpolationWeights w = multilinear_weights(g, p);
        worst_negative = std::min(worst_negative, w.min_weight());
        worst_sum = std::max(worst_sum, std::abs(w.sum() - 1.0));
        for (int a = 0; a < dim; ++a) {
          double xa = 0.0;
          for (const auto& [i, wi] : w.entries) xa += g.node(i)[a] * wi;
          worst_linear = std::max(worst_linear, std::abs(xa - p[a]));
        }
      }
    }
    CheckResult cr;
    cr.name = "multilinear weight positivity and partition of unity (1e4 points/grid)";
    cr.pass = worst_negative >= 0.0 && worst_sum <= 1e-13 && worst_linear <= 1e-12;
    cr.detail = "min weight " + verify_detail::num(worst_negative) + ", |sum-1| " +
                verify_detail::num(worst_sum) + ", linear reproduction " + verify_detail::num(worst_linear);
    suite.checks.push_back(cr);
  }

  {  // limiter region membership on random slope triples
    std::uniform_real_distribution<double> us(-10.0, 10.0);
    int bad = 0;
    for (int trial = 0; trial < 100000; ++trial) {
      double delta = us(rng);
      if (trial % 17 == 0) delta = 0.0;
      const auto [l0, l1] = limit_slopes(us(rng), us(rng), delta);
      if (delta == 0.0) {
        if (l0 != 0.0 || l1 != 0.0) ++bad;
        continue;
      }
      const double alpha = l0 / delta, beta = l1 / delta;
      if (!(alpha >= -1e-12 && beta >= -1e-12)) ++bad;
      if (!in_monotone_region(alpha, beta, 1e-12)) ++bad;
    }
    CheckResult cr;
    cr.name = "limiter region membership on 1e5 random slope triples";
    cr.pass = bad == 0;
    cr.detail = std::to_string(bad) + " violations";
    suite.checks.push_back(cr);
  }

  {  // monotonicity preservation on random monotone data sets
    std::uniform_real_distribution<double> ujump(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 8 + trial % 9;
      const Grid g = build_grid_1d(0.0, 1.0, n);
      GridFunction u(g);
      double acc = ujump(rng) - 0.5;
      for (int i = 0; i < n; ++i) {
        double inc = ujump(rng);
        if (inc < 0.15) inc = 0.0;  // flat runs included
        acc += inc;
        u[i] = acc;
      }
      const bool flip = trial % 2 == 0;
      if (flip)
        for (int i = 0; i < n; ++i) u[i] = -u[i];
      double prev = u[0];
      for (int i = 0; i + 1 < n; ++i) {
        for (int s = 0; s <= 1000; ++s) {
          Vec p{g.coord(0, i) + s / 1000.0 * g.dx[0], 0, 0};
          const double v = interpolate(u, p, InterpKind::MonotoneCubic);
          const double d = flip ? prev - v : v - prev;
          worst = std::min(worst, d);
          prev = v;
        }
      }
    }
    CheckResult cr;
    cr.name = "monotone cubic preserves monotone data (1e3 data sets, 1e3 samples/interval)";
    cr.pass = worst >= -1e-12;
    cr.detail = "worst directional decrement " + verify_detail::num(worst);
    suite.checks.push_back(cr);
  }

  {  // interpolation orders on strictly monotone data
    const double a = -std::numbers::pi / 2 + 0.1, b = std::numbers::pi / 2 - 0.1;
    auto f = [](double x) { return std::sin(x / 2.0); };
    std::vector<double> err_cubic, err_lin;
    for (int level = 0; level < 5; ++level) {
      const int n = (16 << level) + 1;
      const Grid g = build_grid_1d(a, b, n);
      GridFunction u(g);
      for (int i = 0; i < n; ++i) u[i] = f(g.coord(0, i));
      double ec = 0.0, el = 0.0;
      for (int s = 0; s <= 4000; ++s) {
        const double x = a + (b - a) * s / 4000.0;
        const Vec p{x, 0, 0};
        ec = std::max(ec, std::abs(interpolate(u, p, InterpKind::MonotoneCubic) - f(x)));
        el = std::max(el, std::abs(interpolate(u, p, InterpKind::Multilinear) - f(x)));
      }
      err_cubic.push_back(ec);
      err_lin.push_back(el);
    }
    const double rate4 = std::log(err_cubic.front() / err_cubic.back()) / (4.0 * std::log(2.0));
    const double rate2 = std::log(err_lin.front() / err_lin.back()) / (4.0 * std::log(2.0));
    CheckResult c4;
    c4.name = "monotone cubic interpolation order 4.0 +- 0.3";
    c4.pass = std::abs(rate4 - 4.0) <= 0.3;
    c4.detail = "observed " + verify_detail::num(rate4);
    suite.checks.push_back(c4);
    CheckResult c2;
    c2.name = "multilinear interpolation order 2.0 +- 0.2";
    c2.pass = std::abs(rate2 - 2.0) <= 0.2;
    c2.detail = "observed " + verify_detail::num(rate2);
    suite.checks.push_back(c2);
  }

  return suite;
}

inline SuiteResult verify_suite_monotone() {
  SuiteResult suite{"monotone", {}};
  std::mt19937_64 rng(55100u);

  {  // one explicit step preserves ordering of grid functions
    const Problem prob = verify_detail::random_monotonicity_problem(7u);
    const Grid g = build_grid_2d(0.0, 1.0, 9, 0.0, 1.0, 9);
    SchemeConfig cfg;
    cfg.k = 0.3;
    cfg.variant = Variant::Efficient5;
    cfg.interp = InterpKind::Multilinear;
    cfg.dt = 0.9 * cfl_check(cfg, prob, g, 0.0).max_dt;
    std::uniform_real_distribution<double> uval(-1.0, 1.0);
    std::uniform_real_distribution<double> upos(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      GridFunction u(g), v(g);
      for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) {
        u[j] = uval(rng);
        v[j] = u[j] + upos(rng);
      }
      const GridFunction su = theta_step(u, cfg.dt, prob, cfg).first;
      const GridFunction sv = theta_step(v, cfg.dt, prob, cfg).first;
      for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) worst = std::max(worst, su[j] - sv[j]);
    }
    CheckResult cr;
    cr.name = "scheme monotonicity on 100 random ordered pairs (tol 1e-10)";
    cr.pass = worst <= 1e-10;
    cr.detail = "worst ordering violation " + verify_detail::num(worst);
    suite.checks.push_back(cr);
  }

  {  // constants are preserved exactly when c = f = 0
    Problem prob;
    prob.dim = 2;
    prob.sigma_cols = 1;
    prob.sigma = [](double, const Vec& x, const Control&, Mat& s) {
      s(0, 0) = 0.4 + 0.2 * std::sin(x[0]);
      s(1, 0) = 0.3 * std::cos(x[1]);
    };
    prob.g = [](const Vec&) { return 2.375; };
    prob.boundary = BoundarySpec::all_neumann();
    const Grid g = build_grid_2d(0.0, 1.0, 11, 0.0, 1.0, 11);
    double worst = 0.0;
    for (InterpKind kind : {InterpKind::Multilinear, InterpKind::MonotoneCubic}) {
      SchemeConfig cfg;
      cfg.k = 0.25;
      cfg.interp = kind;
      cfg.variant = Variant::CrandallLions2;
      cfg.dt = cfl_check(cfg, prob, g, 0.0).max_dt;
      GridFunction u = sample_on_grid(g, 0.0, prob.g);
      const GridFunction su = theta_step(u, cfg.dt, prob, cfg).first;
      for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j)
        worst = std::max(worst, std::abs(su[j] - 2.375));
    }
    CheckResult cr;
    cr.name = "constant grid functions are fixed points (exact)";
    cr.pass = worst == 0.0;
    cr.detail = "worst deviation " + verify_detail::num(worst);
    suite.checks.push_back(cr);
  }

  {  // shift-invariant data monotone along +x1 stays monotone at all levels
    Problem prob;
    prob.dim = 2;
    prob.sigma_cols = 1;
    prob.sigma = [](double, const Vec&, const Control&, Mat& s) {
      s(0, 0) = 0.4;
      s(1, 0) = 0.25;
    };
    prob.b = [](double, const Vec&, const Control&, Vec& b) {
      b[0] = 0.1;
      b[1] = 0.0;
    };
    prob.g = [](const Vec& x) { return std::tanh(2.0 * x[0]); };
    prob.boundary = BoundarySpec::all_dirichlet(
        [](double, const Vec& x) { return std::tanh(2.0 * x[0]); });
    prob.time_horizon = 10.0;
    const Grid g = build_grid_2d(-2.0, 2.0, 21, -2.0, 2.0, 21);
    bool ok = true;
    for (Scheme s : {Scheme::LISL, Scheme::MCSL}) {
      SchemeConfig cfg;
      cfg.k = scheme_k(s, g.mesh_width());
      cfg.interp = scheme_interp(s);
      cfg.variant = Variant::Efficient5;
      cfg.dt = std::min(cfg.k * cfg.k, cfl_check(cfg, prob, g, 0.0).max_dt);
      const int steps = 8;
      run(prob, g, cfg, steps * cfg.dt, [&](const GridFunction& u, int) {
        if (!check_monotone_direction(u, 0, +1)) ok = false;
      });
    }
    CheckResult cr;
    cr.name = "computed solution stays monotone along a shift-invariant direction";
    cr.pass = ok;
    suite.checks.push_back(cr);
  }

  {  // Howard iterates decrease for an inf problem
    const BenchmarkProblem bp = control_problem_a();
    const double dx = std::numbers::pi / 20.0;
    const Grid g = bp.grid_for(dx);
    const Problem prob = bp.make(dx);
    SchemeConfig cfg;
    cfg.theta = 1.0;
    cfg.solver = SolverKind::Howard;
    cfg.k = std::sqrt(dx);
    cfg.variant = bp.variant;
    cfg.dt = 0.05;
    GridFunction u0 = sample_on_grid(g, 0.0, prob.g);
    const StepReport rep = theta_step(u0, cfg.dt, prob, cfg).second;
    CheckResult cr;
    cr.name = "Howard iterates are monotone across policy iterations";
    cr.pass = rep.howard_order_violation <= 1e-9;
    cr.detail = "worst violation " + verify_detail::num(rep.howard_order_violation) + " in " +
                std::to_string(rep.iterations) + " iterations";
    suite.checks.push_back(cr);
  }

  {  // runs are deterministic
    const BenchmarkProblem bp = smooth_linear(0.1);
    const double dx = std::numbers::pi / 20.0;
    const Grid g = bp.grid_for(dx);
    const Problem prob = bp.make(dx);
    StudyConfig sc;
    const SchemeConfig cfg = study_level_config(bp, prob, g, sc, 0.25);
    const GridFunction u1 = run(prob, g, cfg, 0.25).first;
    const GridFunction u2 = run(prob, g, cfg, 0.25).first;
    bool same = true;
    for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j)
      if (u1[j] != u2[j]) same = false;
    CheckResult cr;
    cr.name = "identical configurations produce bit-identical runs";
    cr.pass = same;
    suite.checks.push_back(cr);
  }

  return suite;
}

inline SuiteResult verify_suite_stability() {
  SuiteResult suite{"stability", {}};

  for (const std::string& name : benchmark_names()) {  // bound on every benchmark
    const BenchmarkProblem bp = benchmark_by_name(name);
    const double dx = bp.dx0_lisl;
    const Grid g = bp.grid_for(dx);
    const Problem prob = bp.make(dx);
    StudyConfig sc;
    sc.scheme = Scheme::LISL;
    const SchemeConfig cfg = study_level_config(bp, prob, g, sc, bp.report_time);
    const RunReport rep = run(prob, g, cfg, bp.report_time).second;
    CheckResult cr;
    cr.name = "sup-norm stability bound on " + name;
    cr.pass = rep.stability_ok;
    cr.detail = "worst |U|/bound = " + verify_detail::num(rep.worst_stability_ratio);
    suite.checks.push_back(cr);
  }

  {  // max norm cannot grow when c = f = 0
    Problem prob;
    prob.dim = 2;
    prob.sigma_cols = 1;
    prob.sigma = [](double, const Vec& x, const Control&, Mat& s) {
      s(0, 0) = 0.5 * std::sin(x[0] + x[1]);
      s(1, 0) = 0.5 * std::cos(x[0] - x[1]);
    };
    prob.g = [](const Vec& x) { return std::sin(x[0]) * std::sin(2.0 * x[1]); };
    prob.boundary = BoundarySpec::all_neumann();
    prob.time_horizon = 10.0;
    const Grid g = build_grid_2d(0.0, 2.0, 17, 0.0, 2.0, 17);
    SchemeConfig cfg;
    cfg.k = 0.25;
    cfg.variant = Variant::CrandallLions2;
    cfg.dt = cfl_check(cfg, prob, g, 0.0).max_dt;
    const RunReport rep = run(prob, g, cfg, 20 * cfg.dt).second;
    CheckResult cr;
    cr.name = "max norm non-increasing with zero c and f";
    cr.pass = rep.max_norm_growth <= 1e-12;
    cr.detail = "max growth " + verify_detail::num(rep.max_norm_growth);
    suite.checks.push_back(cr);
  }

  {  // pricing solution is a put surface: bounded in [0,1], decreasing in x1
    const BenchmarkProblem bp = superrep_pricing();
    const Grid g = bp.grid_for(bp.dx0_lisl);
    const Problem prob = bp.make(bp.dx0_lisl);
    StudyConfig sc;
    const SchemeConfig cfg = study_level_config(bp, prob, g, sc, 1.0);
    const GridFunction u = run(prob, g, cfg, 1.0).first;
    double lo = 0.0, hi = 0.0;
    for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) {
      lo = std::min(lo, u[j]);
      hi = std::max(hi, u[j]);
    }
    CheckResult cr;
    cr.name = "pricing solution bounded in [0,1] and non-increasing in x1";
    cr.pass = lo >= -1e-10 && hi <= 1.0 + 1e-10 && check_monotone_direction(u, 0, -1);
    cr.detail = "range [" + verify_detail::num(lo) + ", " + verify_detail::num(hi) + "]";
    suite.checks.push_back(cr);
  }

  {  // fixed point and Howard agree on the same implicit step
    const BenchmarkProblem bp = superrep_convergence_test();
    const Grid g = bp.grid_for(0.15);
    const Problem prob = bp.make(0.15);
    SchemeConfig cfg;
    cfg.theta = 1.0;
    cfg.k = std::sqrt(0.15);
    cfg.variant = bp.variant;
    cfg.dt = 0.15;
    cfg.tol = 1e-12;  // inner tolerance well below the agreement target
    cfg.max_iter = 50000;
    const double agree_tol = 1e-10;
    GridFunction u0 = sample_on_grid(g, 0.0, prob.g);
    const GridFunction uh = solve_howard(u0, cfg.dt, prob, cfg).first;
    const GridFunction uf = solve_fixed_point(u0, cfg.dt, prob, cfg).first;
    double diff = 0.0;
    for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) diff = std::max(diff, std::abs(uh[j] - uf[j]));
    CheckResult cr;
    cr.name = "fixed point vs Howard agreement to 10*tol on the super-replication test";
    cr.pass = diff <= 10.0 * agree_tol;
    cr.detail = "max difference " + verify_detail::num(diff);
    suite.checks.push_back(cr);
  }

  {  // temporal orders against a fine-dt reference on a fixed grid
    const BenchmarkProblem bp = smooth_linear(0.1);
    const double dx = std::numbers::pi / 10.0;
    const Grid g = bp.grid_for(dx);
    const Problem prob = bp.make(dx);
    const double T = 0.4;
    const double kfix = std::sqrt(dx);

    const auto run_theta = [&](double theta, double dt) {
      SchemeConfig cfg;
      cfg.theta = theta;
      cfg.solver = theta == 0.0 ? SolverKind::Explicit : SolverKind::FixedPoint;
      cfg.k = kfix;
      cfg.variant = bp.variant;
      cfg.dt = dt;
      cfg.tol = 1e-12;
      cfg.max_iter = 5000;
      return run(prob, g, cfg, T).first;
    };
    const GridFunction ref = run_theta(0.5, T / 2048.0);

    for (double theta : {0.0, 0.5, 1.0}) {
      std::vector<double> errs;
      for (int lev = 0; lev < 4; ++lev) {
        const GridFunction u = run_theta(theta, T / (8 << lev));
        double e = 0.0;
        for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) e = std::max(e, std::abs(u[j] - ref[j]));
        errs.push_back(e);
      }
      const double obs = std::log(errs.front() / errs.back()) / (3.0 * std::log(2.0));
      const double target = theta == 0.5 ? 2.0 : 1.0;
      const double window = theta == 0.5 ? 0.3 : 0.2;
      CheckResult cr;
      cr.name = "temporal order at theta " + verify_detail::num(theta);
      cr.pass = std::abs(obs - target) <= window;
      cr.detail = "observed " + verify_detail::num(obs);
      suite.checks.push_back(cr);
    }
  }

  return suite;
}

inline std::vector<SuiteResult> verify_all() {
  return {verify_suite_y1(), verify_suite_interp(), verify_suite_monotone(), verify_suite_stability()};
}

inline SuiteResult verify_suite(const std::string& name) {
  if (name == "y1") return verify_suite_y1();
  if (name == "interp") return verify_suite_interp();
  if (name == "monotone") return verify_suite_monotone();
  if (name == "stability") return verify_suite_stability();
  throw ConfigError("unknown verify suite: " + name + " (expected y1|interp|monotone|stability)");
}

}  // namespace slhjb
