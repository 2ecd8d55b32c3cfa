// Command line front end: solve a single configuration, run a refinement
// study, or run the verification suites.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <numbers>
#include <string>

#include "slhjb/slhjb.hpp"

namespace {

slhjb::InterpKind parse_interp(const std::string& s) {
  if (s == "linear") return slhjb::InterpKind::Multilinear;
  if (s == "cubic") return slhjb::InterpKind::MonotoneCubic;
  throw slhjb::ConfigError("interp must be linear or cubic");
}

slhjb::SolverKind parse_solver(const std::string& s) {
  if (s == "explicit") return slhjb::SolverKind::Explicit;
  if (s == "fixedpoint") return slhjb::SolverKind::FixedPoint;
  if (s == "howard") return slhjb::SolverKind::Howard;
  throw slhjb::ConfigError("solver must be explicit, fixedpoint, or howard");
}

int run_solve(const std::string& problem, double dx, double theta, const std::string& interp,
              int variant, const std::string& solver, double tend, double k_override,
              double dt_override, const std::string& out_path) {
  using namespace slhjb;
  const BenchmarkProblem bp = benchmark_by_name(problem);
  const Grid g = bp.grid_for(dx);
  const Problem prob = bp.make(g.mesh_width());

  SchemeConfig cfg;
  cfg.interp = parse_interp(interp);
  cfg.theta = theta >= 0.0 ? theta : bp.theta;
  cfg.variant = variant > 0 ? variant_from_int(variant) : bp.variant;
  cfg.k = k_override > 0.0 ? k_override
                           : scheme_k(cfg.interp == InterpKind::Multilinear ? Scheme::LISL : Scheme::MCSL,
                                      g.mesh_width());
  if (!solver.empty()) {
    cfg.solver = parse_solver(solver);
  } else if (cfg.theta == 0.0) {
    cfg.solver = SolverKind::Explicit;
  } else {
    cfg.solver = cfg.interp == InterpKind::Multilinear ? bp.solver_lisl : bp.solver_mcsl;
  }
  const double t_end = tend > 0.0 ? tend : bp.report_time;

  double dt = dt_override > 0.0 ? dt_override : cfg.k * cfg.k;
  cfg.dt = dt;
  const CflReport cfl = cfl_check(cfg, prob, g, 0.0);
  if (dt_override <= 0.0 && std::isfinite(cfl.max_dt)) dt = std::min(dt, cfl.max_dt);
  cfg.dt = t_end / std::ceil(t_end / dt - 1e-12);

  auto [u, rep] = run(prob, g, cfg, t_end);
  std::cout << "problem " << problem << "  dx " << format_shortest(g.mesh_width()) << "  dt "
            << format_shortest(cfg.dt) << "  k " << format_shortest(cfg.k) << "  steps "
            << rep.steps << "  wall " << rep.wall_seconds << " s\n";
  if (prob.exact) {
    const ErrorNorms e = error_norms(u, *prob.exact, rep.final_time);
    std::cout << "errors at t=" << rep.final_time << ":  linf " << e.linf << "  l2 " << e.l2
              << "  l1 " << e.l1 << "\n";
  }
  if (!rep.stability_ok) std::cout << "WARNING: sup-norm stability bound violated\n";
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw ConfigError("cannot open output file " + out_path);
    write_surface_csv(u, os);
    std::cout << "surface written to " << out_path << "\n";
  }
  return 0;
}

int run_study_cmd(const std::string& problem, int levels, const std::string& scheme,
                  double dx0, double tend, const std::string& out_path) {
  using namespace slhjb;
  StudyConfig sc;
  sc.scheme = scheme == "mcsl" ? Scheme::MCSL : Scheme::LISL;
  sc.levels = levels;
  sc.dx0 = dx0;
  sc.t_end = tend;
  const ConvergenceTable table = run_study(benchmark_by_name(problem), sc);
  write_csv(table, std::cout);
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw ConfigError("cannot open output file " + out_path);
    write_csv(table, os);
  }
  return 0;
}

int run_verify(const std::string& suite) {
  using namespace slhjb;
  std::vector<SuiteResult> results;
  if (suite == "all" || suite.empty()) {
    results = verify_all();
  } else {
    results.push_back(verify_suite(suite));
  }
  int failures = 0;
  for (const SuiteResult& sr : results) {
    for (const CheckResult& c : sr.checks) {
      std::cout << (c.pass ? "[pass] " : "[FAIL] ") << sr.suite << ": " << c.name;
      if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
      std::cout << "\n";
      if (!c.pass) ++failures;
    }
  }
  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " checks FAILED")
            << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-Lagrangian solver for degenerate Bellman-Isaacs equations"};
  app.set_config("--config", "", "flat key=value config file mirroring the flags");
  app.require_subcommand(1);

  std::string problem, interp = "linear", solver, scheme = "lisl", out_path, suite = "all";
  double dx = std::numbers::pi / 80.0, theta = -1.0, tend = 0.0, k_override = 0.0, dt_override = 0.0,
         dx0 = 0.0;
  int variant = 0, levels = 3;

  CLI::App* solve = app.add_subcommand("solve", "run one configuration and emit the surface");
  solve->add_option("--problem", problem, "benchmark problem name")->required();
  solve->add_option("--dx", dx, "mesh width");
  solve->add_option("--theta", theta, "time discretization parameter in [0,1]");
  solve->add_option("--interp", interp, "linear|cubic");
  solve->add_option("--variant", variant, "operator variant 1..5");
  solve->add_option("--solver", solver, "explicit|fixedpoint|howard");
  solve->add_option("--tend", tend, "report time");
  solve->add_option("--k", k_override, "override the displacement scale k");
  solve->add_option("--dt", dt_override, "override the time step");
  solve->add_option("--out", out_path, "surface CSV path");

  CLI::App* study = app.add_subcommand("study", "refinement study with halved mesh widths");
  study->add_option("--problem", problem, "benchmark problem name")->required();
  study->add_option("--levels", levels, "number of refinement levels");
  study->add_option("--scheme", scheme, "lisl|mcsl");
  study->add_option("--dx0", dx0, "coarsest mesh width (default per problem)");
  study->add_option("--tend", tend, "report time");
  study->add_option("--out", out_path, "table CSV path");

  CLI::App* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--suite", suite, "y1|interp|monotone|stability|all");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return run_solve(problem, dx, theta, interp, variant, solver, tend, k_override, dt_override,
                       out_path);
    if (study->parsed()) return run_study_cmd(problem, levels, scheme, dx0, tend, out_path);
    if (verify->parsed()) return run_verify(suite);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
