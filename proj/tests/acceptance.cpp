// Acceptance suite: runs the benchmark convergence studies and property
// suites at their published configurations and prints one pass/fail line
// per criterion. Exit status is the number of failed criteria.
//
// usage: acceptance [criterion ...]   (default: all of 1..7)

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "slhjb/slhjb.hpp"

namespace {

using namespace slhjb;

struct Criterion {
  int id;
  std::string summary;
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
  }
  void info(const std::string& what) { notes.push_back("       " + what); }
};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

bool within_factor(double value, double reference, double factor) {
  return value >= reference / factor && value <= reference * factor;
}

bool within_rel(double value, double reference, double rel) {
  return std::abs(value - reference) <= rel * std::abs(reference);
}

void print_table(Criterion& c, const std::string& tag, const ConvergenceTable& t) {
  for (const TableRow& r : t.rows)
    c.info(tag + "  dx " + num(r.dx) + "  linf " + num(r.linf) + "  rate " + num(r.rate_linf) +
           "  wall " + num(r.wall_s) + " s");
}

ConvergenceTable study(const std::string& name, Scheme scheme, int levels) {
  StudyConfig sc;
  sc.scheme = scheme;
  sc.levels = levels;
  return run_study(benchmark_by_name(name), sc);
}

// ---- criteria 1 and 2: smooth linear problem, both beta cases ----

Criterion smooth_linear_criterion(int id, const std::string& name, double lisl_ref, double mcsl_ref) {
  Criterion c{id, "smooth linear problem (" + name + ")"};

  const ConvergenceTable lisl = study(name, Scheme::LISL, 4);
  print_table(c, "LISL", lisl);
  for (size_t row : {2, 3})
    c.check(lisl.rows[row].rate_linf >= 0.85 && lisl.rows[row].rate_linf <= 1.15,
            "LISL rate at level " + std::to_string(row) + " in [0.85, 1.15]: " +
                num(lisl.rows[row].rate_linf));
  c.check(within_factor(lisl.rows[1].linf, lisl_ref, 2.0),
          "LISL error at dx=1.96e-2 within factor 2 of " + num(lisl_ref) + ": " +
              num(lisl.rows[1].linf));
  c.info("4th-level wall time " + num(lisl.rows[3].wall_s) + " s (expected < 600 s)");

  const ConvergenceTable mcsl = study(name, Scheme::MCSL, 3);
  print_table(c, "MCSL", mcsl);
  for (size_t row : {1, 2})
    c.check(mcsl.rows[row].rate_linf >= 1.9 && mcsl.rows[row].rate_linf <= 2.1,
            "MCSL rate at level " + std::to_string(row) + " in [1.9, 2.1]: " +
                num(mcsl.rows[row].rate_linf));
  c.check(within_factor(mcsl.rows[2].linf, mcsl_ref, 2.0),
          "MCSL error at dx=1.96e-2 within factor 2 of " + num(mcsl_ref) + ": " +
              num(mcsl.rows[2].linf));
  return c;
}

Criterion criterion1() { return smooth_linear_criterion(1, "smooth_linear_b01", 1.93e-2, 2.57e-4); }
Criterion criterion2() { return smooth_linear_criterion(2, "smooth_linear_b0", 1.98e-2, 2.57e-4); }

// ---- criterion 3: non-smooth problem rates ----

Criterion criterion3() {
  Criterion c{3, "non-smooth linear problem"};
  const ConvergenceTable lisl = study("nonsmooth_linear", Scheme::LISL, 3);
  print_table(c, "LISL", lisl);
  for (size_t row : {1, 2})
    c.check(std::abs(lisl.rows[row].rate_linf - 0.50) <= 0.10,
            "LISL rate 0.50 +- 0.10 at level " + std::to_string(row) + ": " +
                num(lisl.rows[row].rate_linf));
  const ConvergenceTable mcsl = study("nonsmooth_linear", Scheme::MCSL, 3);
  print_table(c, "MCSL", mcsl);
  for (size_t row : {1, 2})
    c.check(mcsl.rows[row].rate_linf >= 0.9 && mcsl.rows[row].rate_linf <= 1.1,
            "MCSL rate in [0.9, 1.1] at level " + std::to_string(row) + ": " +
                num(mcsl.rows[row].rate_linf));
  return c;
}

// ---- criterion 4: control problems ----

Criterion criterion4() {
  Criterion c{4, "optimal control problems"};
  const struct {
    const char* name;
    double lisl_ref, mcsl_ref;  // published errors at dx = 1.96e-2
  } probs[2] = {{"control_a", 1.61e-2, 2.12e-4}, {"control_b", 1.07e-2, 1.29e-4}};

  for (const auto& p : probs) {
    const ConvergenceTable lisl = study(p.name, Scheme::LISL, 3);
    print_table(c, std::string(p.name) + " LISL", lisl);
    for (size_t row : {1, 2})
      c.check(lisl.rows[row].rate_linf >= 0.85 && lisl.rows[row].rate_linf <= 1.15,
              std::string(p.name) + " LISL rate in [0.85, 1.15]: " + num(lisl.rows[row].rate_linf));
    c.check(within_factor(lisl.rows[1].linf, p.lisl_ref, 2.0),
            std::string(p.name) + " LISL error at dx=1.96e-2 within factor 2 of " +
                num(p.lisl_ref) + ": " + num(lisl.rows[1].linf));

    const ConvergenceTable mcsl = study(p.name, Scheme::MCSL, 3);
    print_table(c, std::string(p.name) + " MCSL", mcsl);
    for (size_t row : {1, 2})
      c.check(mcsl.rows[row].rate_linf >= 1.9 && mcsl.rows[row].rate_linf <= 2.1,
              std::string(p.name) + " MCSL rate in [1.9, 2.1]: " + num(mcsl.rows[row].rate_linf));
    c.check(within_factor(mcsl.rows[2].linf, p.mcsl_ref, 2.0),
            std::string(p.name) + " MCSL error at dx=1.96e-2 within factor 2 of " +
                num(p.mcsl_ref) + ": " + num(mcsl.rows[2].linf));
  }
  return c;
}

// ---- criterion 5: super-replication convergence test ----

Criterion criterion5() {
  Criterion c{5, "super-replication convergence test (Howard, theta = 1)"};
  const double lisl_ref[3][3] = {{2.01e-1, 1.80e-1, 3.12e-1},
                                 {9.49e-2, 9.58e-2, 1.73e-1},
                                 {4.29e-2, 4.49e-2, 8.27e-2}};
  const double mcsl_ref[3][3] = {{8.21e-2, 7.63e-2, 1.23e-1},
                                 {1.83e-2, 1.81e-2, 3.31e-2},
                                 {5.03e-3, 4.10e-3, 8.13e-3}};

  const ConvergenceTable lisl = study("superrep_test", Scheme::LISL, 3);
  print_table(c, "LISL", lisl);
  for (size_t row : {1, 2})
    c.check(lisl.rows[row].rate_linf >= 0.95 && lisl.rows[row].rate_linf <= 1.25,
            "LISL rate in [0.95, 1.25]: " + num(lisl.rows[row].rate_linf));
  for (size_t row = 0; row < 3; ++row) {
    const TableRow& r = lisl.rows[row];
    c.check(within_rel(r.linf, lisl_ref[row][0], 0.30) && within_rel(r.l2, lisl_ref[row][1], 0.30) &&
                within_rel(r.l1, lisl_ref[row][2], 0.30),
            "LISL errors within 30% of the published row at dx " + num(r.dx) + ": (" + num(r.linf) +
                ", " + num(r.l2) + ", " + num(r.l1) + ")");
  }
  c.check(lisl.rows[2].wall_s <= 757.3,
          "LISL wall time at dx=3.75e-2 within 10x of 75.73 s: " + num(lisl.rows[2].wall_s) + " s");

  const ConvergenceTable mcsl = study("superrep_test", Scheme::MCSL, 3);
  print_table(c, "MCSL", mcsl);
  for (size_t row : {1, 2})
    c.check(mcsl.rows[row].rate_linf >= 1.7 && mcsl.rows[row].rate_linf <= 2.3,
            "MCSL rate in [1.7, 2.3]: " + num(mcsl.rows[row].rate_linf));
  for (size_t row = 0; row < 3; ++row) {
    const TableRow& r = mcsl.rows[row];
    c.check(within_rel(r.linf, mcsl_ref[row][0], 0.30) && within_rel(r.l2, mcsl_ref[row][1], 0.30) &&
                within_rel(r.l1, mcsl_ref[row][2], 0.30),
            "MCSL errors within 30% of the published row at dx " + num(r.dx) + ": (" + num(r.linf) +
                ", " + num(r.l2) + ", " + num(r.l1) + ")");
  }
  return c;
}

// ---- criterion 6: property suites via verify ----

Criterion criterion6() {
  Criterion c{6, "property suites (verify)"};
  for (const SuiteResult& sr : verify_all())
    for (const CheckResult& cr : sr.checks)
      c.check(cr.pass, sr.suite + ": " + cr.name + (cr.detail.empty() ? "" : " (" + cr.detail + ")"));
  return c;
}

// ---- criterion 7: theoretical error bound as an upper envelope ----

Criterion criterion7() {
  Criterion c{7, "theoretical bound envelope on the smooth linear study"};
  const ConvergenceTable lisl = study("smooth_linear_b01", Scheme::LISL, 4);
  print_table(c, "LISL", lisl);
  const auto bound = [](const TableRow& r) {
    // theta = 0 form of the convex-case bound scaling
    return std::pow(r.dt, 0.25) + std::pow(r.dt, 1.0 / 3.0) + std::sqrt(r.k) + r.dx / (r.k * r.k);
  };
  const double scale = lisl.rows[0].linf / bound(lisl.rows[0]);
  for (const TableRow& r : lisl.rows)
    c.check(r.linf <= 10.0 * scale * bound(r),
            "observed error " + num(r.linf) + " below 10x the bound scaling " +
                num(10.0 * scale * bound(r)) + " at dx " + num(r.dx));
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7};

  int failures = 0;
  for (int id : wanted) {
    Criterion c = [&] {
      switch (id) {
        case 1: return criterion1();
        case 2: return criterion2();
        case 3: return criterion3();
        case 4: return criterion4();
        case 5: return criterion5();
        case 6: return criterion6();
        case 7: return criterion7();
        default: throw ConfigError("unknown criterion " + std::to_string(id));
      }
    }();
    std::printf("[%s] criterion %d: %s\n", c.pass ? "PASS" : "FAIL", c.id, c.summary.c_str());
    for (const std::string& n : c.notes) std::printf("%s\n", n.c_str());
    std::fflush(stdout);
    if (!c.pass) ++failures;
  }
  return failures;
}
