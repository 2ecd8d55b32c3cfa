// Error norms, convergence tables, refinement studies, and their CSV form.
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "slhjb/bench_fwd.hpp"
#include "slhjb/common.hpp"
#include "slhjb/grid.hpp"
#include "slhjb/problems.hpp"
#include "slhjb/solver.hpp"

namespace slhjb {

struct ErrorNorms {
  double linf = 0.0;
  double l2 = 0.0;
  double l1 = 0.0;
};

// Grid norms of u minus the exact solution at time t. L2 and L1 use
// trapezoidal cell weights, so a constant error kappa on a unit-volume
// domain gives kappa in every norm.
inline ErrorNorms error_norms(const GridFunction& u,
                              const std::function<double(double, const Vec&)>& exact, double t) {
  const Grid& g = u.grid;
  ErrorNorms n;
  double sum2 = 0.0, sum1 = 0.0;
  for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) {
    const auto idx = g.multi_index(j);
    const Vec x = g.node(idx);
    double w = 1.0;
    for (int a = 0; a < g.dim; ++a) {
      const bool edge = idx[a] == 0 || idx[a] == g.count[a] - 1;
      w *= g.dx[a] * (edge ? 0.5 : 1.0);
    }
    const double e = std::abs(u[j] - exact(t, x));
    n.linf = std::max(n.linf, e);
    sum2 += w * e * e;
    sum1 += w * e;
  }
  n.l2 = std::sqrt(sum2);
  n.l1 = sum1;
  return n;
}

// Observed convergence rate between two refinement levels. Zero error has
// no defined rate; callers emit it as blank.
inline double rate(double e_prev, double e_cur, double dx_prev, double dx_cur) {
  if (!(e_prev > 0.0) || !(e_cur > 0.0) || !(dx_prev > 0.0) || !(dx_cur > 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  return (std::log(e_cur) - std::log(e_prev)) / (std::log(dx_cur) - std::log(dx_prev));
}

struct TableRow {
  double dx = 0.0, dt = 0.0, k = 0.0;
  double linf = std::numeric_limits<double>::quiet_NaN();
  double l2 = std::numeric_limits<double>::quiet_NaN();
  double l1 = std::numeric_limits<double>::quiet_NaN();
  double rate_linf = std::numeric_limits<double>::quiet_NaN();
  double rate_l2 = std::numeric_limits<double>::quiet_NaN();
  double rate_l1 = std::numeric_limits<double>::quiet_NaN();
  double wall_s = 0.0;
};

struct ConvergenceTable {
  std::vector<TableRow> rows;
};

inline double scheme_k(Scheme s, double dx) {
  return s == Scheme::LISL ? std::sqrt(dx) : dx;
}

inline InterpKind scheme_interp(Scheme s) {
  return s == Scheme::LISL ? InterpKind::Multilinear : InterpKind::MonotoneCubic;
}

struct StudyConfig {
  Scheme scheme = Scheme::LISL;
  int levels = 3;
  double dx0 = 0.0;      // 0: use the benchmark's recommended coarsest level
  double t_end = 0.0;    // 0: the benchmark's report time
  double theta = -1.0;   // <0: benchmark default
  int solver = -1;       // <0: benchmark default, else SolverKind value
  int variant = 0;       // 0: benchmark default
  double tol = 1e-10;
  int max_iter = 400;
};

// Scheme configuration for one refinement level. The displacement scale
// follows the random-walk normalization k = sqrt(M dt) with dt the nominal
// parabolic step (dx for LISL, dx^2 for MCSL), so the explicit scheme sits
// exactly at the CFL equality and reduces to the averaging form of the
// dynamic-programming construction. dt is then capped at the CFL bound and
// rounded down so that t_end/dt is an integer.
inline SchemeConfig study_level_config(const BenchmarkProblem& bp, const Problem& prob,
                                       const Grid& g, const StudyConfig& sc, double t_end) {
  SchemeConfig cfg;
  cfg.interp = scheme_interp(sc.scheme);
  cfg.variant = sc.variant > 0 ? variant_from_int(sc.variant) : bp.variant;
  const int M = detail::variant_pair_count(cfg.variant, prob.sigma_cols);
  const double bench_coeff = sc.scheme == Scheme::LISL ? bp.k_coeff_lisl : bp.k_coeff_mcsl;
  const double coeff = bench_coeff > 0.0 ? bench_coeff : std::sqrt(static_cast<double>(M));
  cfg.k = coeff * scheme_k(sc.scheme, g.mesh_width());
  cfg.theta = sc.theta >= 0.0 ? sc.theta : bp.theta;
  if (sc.solver >= 0) {
    cfg.solver = static_cast<SolverKind>(sc.solver);
  } else if (cfg.theta == 0.0) {
    cfg.solver = SolverKind::Explicit;
  } else {
    cfg.solver = sc.scheme == Scheme::LISL ? bp.solver_lisl : bp.solver_mcsl;
  }
  cfg.tol = sc.tol;
  if (sc.scheme == Scheme::MCSL && bp.mcsl_tol > 0.0 && sc.tol < bp.mcsl_tol) cfg.tol = bp.mcsl_tol;
  cfg.max_iter = sc.max_iter;

  double dt = cfg.k * cfg.k;
  cfg.dt = dt;
  const CflReport cfl = cfl_check(cfg, prob, g, 0.0);
  if (std::isfinite(cfl.max_dt)) dt = std::min(dt, cfl.max_dt);
  const int steps = static_cast<int>(std::ceil(t_end / dt - 1e-12));
  cfg.dt = t_end / steps;
  return cfg;
}

// Halving refinement study for one benchmark and scheme.
inline ConvergenceTable run_study(const BenchmarkProblem& bp, const StudyConfig& sc) {
  if (sc.levels < 1) throw ConfigError("study needs at least one level");
  const double t_end = sc.t_end > 0.0 ? sc.t_end : bp.report_time;
  const double dx0 = sc.dx0 > 0.0 ? sc.dx0 : (sc.scheme == Scheme::LISL ? bp.dx0_lisl : bp.dx0_mcsl);

  std::array<std::int64_t, kMaxDim> intervals0{};
  for (int a = 0; a < bp.dim; ++a) {
    intervals0[a] = std::lround((bp.upper[a] - bp.lower[a]) / dx0);
    if (bp.odd_interval_refinement) intervals0[a] |= 1;
  }

  ConvergenceTable table;
  for (int level = 0; level < sc.levels; ++level) {
    std::array<int, kMaxDim> counts{1, 1, 1};
    for (int a = 0; a < bp.dim; ++a) {
      const std::int64_t n = bp.odd_interval_refinement
                                 ? ((intervals0[a] - 1) << level) + 1
                                 : intervals0[a] << level;
      counts[a] = static_cast<int>(n + 1);
    }
    const Grid g = build_grid(bp.dim, bp.lower, bp.upper, counts);
    const double dx = g.mesh_width();
    const Problem prob = bp.make(dx);
    if (!prob.exact) throw ConfigError("convergence study requires an exact solution");
    const SchemeConfig cfg = study_level_config(bp, prob, g, sc, t_end);

    TableRow row;
    row.dx = dx;
    row.dt = cfg.dt;
    row.k = cfg.k;
    try {
      auto [U, rep] = run(prob, g, cfg, t_end);
      const ErrorNorms e = error_norms(U, *prob.exact, rep.final_time);
      row.linf = e.linf;
      row.l2 = e.l2;
      row.l1 = e.l1;
      row.wall_s = rep.wall_seconds;
    } catch (const SolveError&) {
      // level aborted; the row keeps NaN errors
    }
    if (!table.rows.empty()) {
      const TableRow& p = table.rows.back();
      row.rate_linf = rate(p.linf, row.linf, p.dx, row.dx);
      row.rate_l2 = rate(p.l2, row.l2, p.dx, row.dx);
      row.rate_l1 = rate(p.l1, row.l1, p.dx, row.dx);
    }
    table.rows.push_back(row);
  }
  return table;
}

inline ConvergenceTable run_study(const std::string& problem_name, int levels, StudyConfig sc) {
  sc.levels = levels;
  return run_study(benchmark_by_name(problem_name), sc);
}

// ---- CSV (bit-exact round trip) ----

inline std::string format_shortest(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_shortest(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{}) throw ConfigError("bad float field in CSV: '" + s + "'");
  return v;
}

inline constexpr const char* kTableHeader = "dx,dt,k,linf,l2,l1,rate_linf,rate_l2,rate_l1,wall_s";

inline void write_csv(const ConvergenceTable& t, std::ostream& os) {
  os << kTableHeader << "\n";
  for (const TableRow& r : t.rows) {
    os << format_shortest(r.dx) << ',' << format_shortest(r.dt) << ',' << format_shortest(r.k)
       << ',' << format_shortest(r.linf) << ',' << format_shortest(r.l2) << ','
       << format_shortest(r.l1) << ',' << format_shortest(r.rate_linf) << ','
       << format_shortest(r.rate_l2) << ',' << format_shortest(r.rate_l1) << ','
       << format_shortest(r.wall_s) << "\n";
  }
}

inline ConvergenceTable read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTableHeader)
    throw ConfigError("convergence CSV must start with the canonical header");
  ConvergenceTable t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    if (fields.size() != 10) throw ConfigError("convergence CSV row must have 10 fields");
    TableRow r;
    r.dx = parse_shortest(fields[0]);
    r.dt = parse_shortest(fields[1]);
    r.k = parse_shortest(fields[2]);
    r.linf = parse_shortest(fields[3]);
    r.l2 = parse_shortest(fields[4]);
    r.l1 = parse_shortest(fields[5]);
    r.rate_linf = parse_shortest(fields[6]);
    r.rate_l2 = parse_shortest(fields[7]);
    r.rate_l1 = parse_shortest(fields[8]);
    r.wall_s = parse_shortest(fields[9]);
    t.rows.push_back(r);
  }
  return t;
}

// Solution surface as x1,...,xN,u rows for external plotting.
inline void write_surface_csv(const GridFunction& u, std::ostream& os) {
  const Grid& g = u.grid;
  for (int a = 0; a < g.dim; ++a) os << "x" << (a + 1) << ',';
  os << "u\n";
  for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) {
    const Vec x = g.node(j);
    for (int a = 0; a < g.dim; ++a) os << format_shortest(x[a]) << ',';
    os << format_shortest(u[j]) << "\n";
  }
}

}  // namespace slhjb
