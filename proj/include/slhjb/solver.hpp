// Theta-scheme time stepping with explicit, damped fixed-point, and Howard
// policy-iteration solvers, plus the CFL admissibility check and the
// L-infinity stability diagnostic.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "slhjb/common.hpp"
#include "slhjb/grid.hpp"
#include "slhjb/interp.hpp"
#include "slhjb/operators.hpp"
#include "slhjb/problem.hpp"

namespace slhjb {

enum class SolverKind { Explicit, FixedPoint, Howard };

struct SchemeConfig {
  double theta = 0.0;
  double dt = 0.0;
  double k = 0.0;
  InterpKind interp = InterpKind::Multilinear;
  Variant variant = Variant::Efficient5;
  SolverKind solver = SolverKind::Explicit;
  double fp_epsilon = 0.0;  // 0 means the automatic rule
  double tol = 1e-10;
  int max_iter = 200;
  bool track_howard_monotonicity = true;

  void validate(const Problem& prob) const {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(k > 0.0)) throw ConfigError("k must be positive");
    if (theta < 0.0 || theta > 1.0) throw ConfigError("theta must lie in [0,1]");
    if (solver == SolverKind::Explicit && theta != 0.0)
      throw ConfigError("explicit solver requires theta = 0");
    if (solver == SolverKind::FixedPoint && theta <= 0.0)
      throw ConfigError("fixed-point solver requires theta > 0");
    if (solver == SolverKind::Howard) {
      if (theta != 1.0) throw ConfigError("Howard solver requires theta = 1");
      if (interp != InterpKind::Multilinear)
        throw UnsupportedError("Howard policy evaluation requires multilinear interpolation");
      if (!prob.control_set.beta_singleton())
        throw UnsupportedError("Howard solver supports a singleton beta set only");
    }
    if (prob.form == HamiltonianForm::TimeWeighted) {
      if (theta != 1.0) throw ConfigError("time-weighted problems require theta = 1");
      if (solver == SolverKind::Explicit)
        throw ConfigError("time-weighted problems need an implicit solver");
    }
  }
};

struct StepReport {
  int iterations = 0;
  double final_residual = 0.0;
  int policy_changes = 0;
  double wall_seconds = 0.0;
  // worst violation of the classical Howard iterate ordering, 0 when clean
  double howard_order_violation = 0.0;
  // fixed point only: sup-norm residual per iteration
  std::vector<double> residual_history;
};

struct CflReport {
  bool admissible = false;
  double max_dt = 0.0;
};

namespace detail {

inline int variant_pair_count(Variant v, int P) {
  switch (v) {
    case Variant::Falcone1: return 1;
    case Variant::Combined4: return P + 1;
    default: return P;
  }
}

// Coefficient suprema over grid nodes and controls, sampled at the given
// times; used by the stability bound and the fixed-point damping rule.
struct CoeffBounds {
  double sup_c_plus = 0.0;
  double sup_c_abs = 0.0;
  double sup_f_abs = 0.0;
  double max_time_weight = 1.0;
};

inline CoeffBounds scan_coefficients(const Problem& prob, const Grid& g,
                                     const std::vector<double>& times) {
  CoeffBounds cb;
  if (prob.form == HamiltonianForm::TimeWeighted) {
    cb.max_time_weight = 0.0;
    for (const Vec& a : prob.control_set.alphas) {
      Control ctrl{a, prob.control_set.betas[0]};
      cb.max_time_weight = std::max(cb.max_time_weight, prob.time_weight(ctrl));
    }
  }
  if (!prob.c && !prob.f) return cb;
  for (double t : times) {
    for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) {
      const Vec x = g.node(j);
      for (const Vec& a : prob.control_set.alphas)
        for (const Vec& be : prob.control_set.betas) {
          const Control ctrl{a, be};
          if (prob.c) {
            const double cv = prob.c(t, x, ctrl);
            cb.sup_c_plus = std::max(cb.sup_c_plus, cv);
            cb.sup_c_abs = std::max(cb.sup_c_abs, std::abs(cv));
          }
          if (prob.f) cb.sup_f_abs = std::max(cb.sup_f_abs, std::abs(prob.f(t, x, ctrl)));
        }
    }
  }
  return cb;
}

// Per-step evaluator of the node Hamiltonian/residual. Holds the
// displacement-set cache when sigma and b do not depend on x.
class NodeEval {
 public:
  NodeEval(const Problem& prob, const Grid& g, const SchemeConfig& cfg, double t_c)
      : prob_(prob), g_(g), cfg_(cfg), t_c_(t_c) {
    M_ = variant_pair_count(cfg.variant, prob.sigma_cols);
    inv2k2_ = 1.0 / (2.0 * cfg.k * cfg.k);
    var4_shared_sigma_ =
        cfg.variant == Variant::Combined4 && prob.sigma_control_independent && prob.sigma_cols > 0;
    if (prob.sigma_b_x_independent) {
      const Vec x0 = g.node(std::ptrdiff_t{0});
      ds_cache_.reserve(prob.control_set.num_alphas() * prob.control_set.num_betas());
      for (const Vec& a : prob.control_set.alphas)
        for (const Vec& be : prob.control_set.betas)
          ds_cache_.push_back(build_ds(t_c, x0, Control{a, be}));
      use_cache_ = true;
    }
  }

  int pair_count() const { return M_; }

  DisplacementSet build_ds(double t, const Vec& x, const Control& ctrl) const {
    Mat sig;
    sig.set_zero(prob_.dim, prob_.sigma_cols);
    if (prob_.sigma) prob_.sigma(t, x, ctrl, sig);
    Vec bv = zero_vec();
    if (prob_.b) prob_.b(t, x, ctrl, bv);
    return displacement_set(sig, bv, cfg_.k, cfg_.variant);
  }

  // inf over alpha of sup over beta of { L_k[IW](x) + c W(x) + f }
  double hamiltonian(const GridFunction& W, const Vec& x, double w_at_x, int* arg_alpha = nullptr) const {
    const auto& cs = prob_.control_set;
    const size_t na = cs.num_alphas(), nb = cs.num_betas();
    double f_shared = 0.0;
    if (prob_.f_control_independent && prob_.f)
      f_shared = prob_.f(t_c_, x, Control{cs.alphas[0], cs.betas[0]});

    double shared_sigma_L = 0.0;
    if (var4_shared_sigma_) {
      // diffusion pairs are the same for every control; fold them once
      const DisplacementSet ds =
          use_cache_ ? ds_cache_[0] : build_ds(t_c_, x, Control{cs.alphas[0], cs.betas[0]});
      for (int m = 0; m + 1 < ds.M; ++m) {
        shared_sigma_L += stencil_diff(W, x, w_at_x, ds.pairs[m].plus);
        shared_sigma_L += stencil_diff(W, x, w_at_x, ds.pairs[m].minus);
      }
      shared_sigma_L *= inv2k2_;
    }

    double best = std::numeric_limits<double>::infinity();
    int best_ia = 0;
    for (size_t ia = 0; ia < na; ++ia) {
      double sup_b = -std::numeric_limits<double>::infinity();
      for (size_t ib = 0; ib < nb; ++ib) {
        const Control ctrl{cs.alphas[ia], cs.betas[ib]};
        double L;
        if (var4_shared_sigma_) {
          Vec bv = zero_vec();
          if (prob_.b) prob_.b(t_c_, x, ctrl, bv);
          Vec p = x;
          const double kk = cfg_.k * cfg_.k;
          for (int a = 0; a < g_.dim; ++a) p[a] += kk * bv[a];
          L = shared_sigma_L + 2.0 * stencil_diff(W, x, w_at_x, p, true) * inv2k2_;
        } else {
          const DisplacementSet& ds = use_cache_ ? ds_cache_[ia * nb + ib] : ds_tmp_ref(t_c_, x, ctrl);
          double acc = 0.0;
          for (int m = 0; m < ds.M; ++m) {
            acc += stencil_diff(W, x, w_at_x, ds.pairs[m].plus);
            acc += stencil_diff(W, x, w_at_x, ds.pairs[m].minus);
          }
          L = acc * inv2k2_;
        }
        double v = L;
        if (prob_.c) v += prob_.c(t_c_, x, ctrl) * w_at_x;
        v += prob_.f_control_independent ? f_shared : (prob_.f ? prob_.f(t_c_, x, ctrl) : 0.0);
        if (v > sup_b) sup_b = v;
      }
      if (sup_b < best) {
        best = sup_b;
        best_ia = static_cast<int>(ia);
      }
    }
    if (arg_alpha) *arg_alpha = best_ia;
    return best;
  }

  // L_k[IW](x) for a single control (beta fixed to the first entry).
  double lk_value(const GridFunction& W, const Vec& x, double w_at_x, size_t ia) const {
    const auto& cs = prob_.control_set;
    const Control ctrl{cs.alphas[ia], cs.betas[0]};
    const DisplacementSet& ds = use_cache_ ? ds_cache_[ia * cs.num_betas()] : ds_tmp_ref(t_c_, x, ctrl);
    double acc = 0.0;
    for (int m = 0; m < ds.M; ++m) {
      acc += stencil_diff(W, x, w_at_x, ds.pairs[m].plus);
      acc += stencil_diff(W, x, w_at_x, ds.pairs[m].minus);
    }
    return acc * inv2k2_;
  }

  // min over alpha of { w(a) (U(x)-Uprev(x)) - dt (L_k[IU](x) + c U(x) + f) }.
  // arg_alpha (when requested) is the minimizer over controls whose node
  // equation can actually determine U(x): a control with vanishing time
  // weight and vanishing displacements yields a constant row and cannot be
  // used for policy evaluation.
  double weighted_residual(const GridFunction& U, const Vec& x, double u_at_x, double uprev_at_x,
                           double dt, int* arg_alpha = nullptr) const {
    const auto& cs = prob_.control_set;
    const size_t na = cs.num_alphas();
    double f_shared = 0.0;
    if (prob_.f_control_independent && prob_.f)
      f_shared = prob_.f(t_c_, x, Control{cs.alphas[0], cs.betas[0]});

    double best = std::numeric_limits<double>::infinity();
    double best_usable = std::numeric_limits<double>::infinity();
    int best_ia = 0;
    const double du = u_at_x - uprev_at_x;
    for (size_t ia = 0; ia < na; ++ia) {
      const Control ctrl{cs.alphas[ia], cs.betas[0]};
      const DisplacementSet& ds = use_cache_ ? ds_cache_[ia] : ds_tmp_ref(t_c_, x, ctrl);
      double acc = 0.0;
      double reach = 0.0;
      for (int m = 0; m < ds.M; ++m) {
        acc += stencil_diff(U, x, u_at_x, ds.pairs[m].plus);
        acc += stencil_diff(U, x, u_at_x, ds.pairs[m].minus);
        for (int a = 0; a < g_.dim; ++a)
          reach = std::max(reach, std::max(std::abs(ds.pairs[m].plus[a]), std::abs(ds.pairs[m].minus[a])));
      }
      double rhs = acc * inv2k2_;
      if (prob_.c) rhs += prob_.c(t_c_, x, ctrl) * u_at_x;
      rhs += prob_.f_control_independent ? f_shared : (prob_.f ? prob_.f(t_c_, x, ctrl) : 0.0);
      const double w = prob_.time_weight(ctrl);
      const double r = w * du - dt * rhs;
      best = std::min(best, r);
      const bool usable = w > 1e-12 || reach > 1e-10 * cfg_.k;
      if (usable && r < best_usable) {
        best_usable = r;
        best_ia = static_cast<int>(ia);
      }
    }
    if (arg_alpha) *arg_alpha = best_ia;
    return best;
  }

  const DisplacementSet& cached_ds(size_t ia, size_t ib) const {
    return ds_cache_[ia * prob_.control_set.num_betas() + ib];
  }
  bool has_cache() const { return use_cache_; }

 private:
  // displacement difference term Iu(x+y) - u(x), resolved through the boundary
  double stencil_diff(const GridFunction& W, const Vec& x, double w_at_x, const Vec& y,
                      bool y_is_point = false) const {
    Vec p;
    if (y_is_point) {
      p = y;
    } else {
      p = x;
      for (int a = 0; a < g_.dim; ++a) p[a] += y[a];
    }
    const ResolvedPoint r = resolve_point(g_, prob_.boundary, p, t_c_);
    return r.is_value ? (r.value - w_at_x)
                      : interpolate_diff(g_, W.values, r.point, cfg_.interp, w_at_x);
  }

  const DisplacementSet& ds_tmp_ref(double t, const Vec& x, const Control& ctrl) const {
    thread_local DisplacementSet tmp;
    tmp = build_ds(t, x, ctrl);
    return tmp;
  }

  const Problem& prob_;
  const Grid& g_;
  const SchemeConfig& cfg_;
  double t_c_;
  int M_ = 0;
  double inv2k2_ = 0.0;
  bool use_cache_ = false;
  bool var4_shared_sigma_ = false;
  std::vector<DisplacementSet> ds_cache_;
};

// Node roles under the boundary specification. Dirichlet faces pin their
// nodes to the boundary function. Homogeneous Neumann faces pin theirs to
// the inward neighbour (constant extension in the normal direction, the
// monotone first-kind discretization of a vanishing normal derivative);
// this also determines face values when the normal diffusion degenerates
// on the face and the scheme decouples there. Everything else evolves by
// the scheme.
enum class NodeKind : uint8_t { Free = 0, Dirichlet = 1, NeumannCopy = 2 };

struct StepTopology {
  std::vector<NodeKind> kind;
  std::vector<std::ptrdiff_t> unknowns;  // free nodes only
  // (node, source) pairs applied in order; corners chain through faces
  std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>> neumann_copy;

  StepTopology(const Grid& g, const BoundarySpec& bc)
      : kind(static_cast<size_t>(g.num_nodes), NodeKind::Free) {
    for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) {
      const auto idx = g.multi_index(j);
      bool dirichlet = false, neumann = false;
      for (int a = 0; a < g.dim; ++a)
        for (int side = 0; side < 2; ++side) {
          if (!g.on_face(idx, a, side)) continue;
          if (bc.condition[a][side] == FaceCondition::DirichletFromFunction) dirichlet = true;
          if (bc.condition[a][side] == FaceCondition::NeumannHomogeneous) neumann = true;
        }
      if (dirichlet)
        kind[static_cast<size_t>(j)] = NodeKind::Dirichlet;
      else if (neumann)
        kind[static_cast<size_t>(j)] = NodeKind::NeumannCopy;
    }
    for (int a = 0; a < g.dim; ++a)
      for (int side = 0; side < 2; ++side) {
        if (bc.condition[a][side] != FaceCondition::NeumannHomogeneous) continue;
        for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) {
          if (kind[static_cast<size_t>(j)] != NodeKind::NeumannCopy) continue;
          const auto idx = g.multi_index(j);
          if (!g.on_face(idx, a, side)) continue;
          const std::ptrdiff_t src = side == 0 ? j + g.stride[a] : j - g.stride[a];
          neumann_copy.emplace_back(j, src);
        }
      }
    unknowns.reserve(kind.size());
    for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j)
      if (kind[static_cast<size_t>(j)] == NodeKind::Free) unknowns.push_back(j);
  }

  bool free(std::ptrdiff_t j) const { return kind[static_cast<size_t>(j)] == NodeKind::Free; }
};

inline void pin_dirichlet(GridFunction& u, const BoundarySpec& bc, const StepTopology& topo, double t) {
  if (!bc.dirichlet) return;
  const Grid& g = u.grid;
  for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j)
    if (topo.kind[static_cast<size_t>(j)] == NodeKind::Dirichlet) u[j] = bc.dirichlet(t, g.node(j));
}

inline void refresh_neumann(GridFunction& u, const StepTopology& topo) {
  for (const auto& [node, src] : topo.neumann_copy) u[node] = u[src];
}

}  // namespace detail

// Evaluates the CFL/monotonicity condition
//   (1-theta) dt [M/k^2 - c] <= 1   and   theta dt c <= 1
// over all grid nodes and controls; max_dt is the largest admissible dt.
inline CflReport cfl_check(const SchemeConfig& cfg, const Problem& prob, const Grid& g, double t) {
  const int M = detail::variant_pair_count(cfg.variant, prob.sigma_cols);
  const double mk2 = M / (cfg.k * cfg.k);
  const double inf = std::numeric_limits<double>::infinity();
  double max_dt = inf;

  const auto fold = [&](double c_val) {
    const double d1 = (1.0 - cfg.theta) * (mk2 - c_val);
    if (d1 > 0.0) max_dt = std::min(max_dt, 1.0 / d1);
    const double d2 = cfg.theta * c_val;
    if (d2 > 0.0) max_dt = std::min(max_dt, 1.0 / d2);
  };

  if (!prob.c) {
    fold(0.0);
  } else {
    for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j) {
      const Vec x = g.node(j);
      for (const Vec& a : prob.control_set.alphas)
        for (const Vec& be : prob.control_set.betas) fold(prob.c(t, x, Control{a, be}));
    }
  }

  CflReport rep;
  rep.max_dt = max_dt;
  rep.admissible = cfg.dt <= max_dt * (1.0 + 1e-12);
  return rep;
}

namespace detail {

inline std::pair<GridFunction, StepReport> explicit_step(const GridFunction& U_prev, double t_n,
                                                         const Problem& prob, const SchemeConfig& cfg,
                                                         const StepTopology& topo) {
  const Grid& g = U_prev.grid;
  const double t_c = t_n - cfg.dt;  // theta = 0
  const NodeEval ne(prob, g, cfg, t_c);
  GridFunction out(g, t_n);

  parallel_for(g.num_nodes, [&](std::ptrdiff_t j) {
    switch (topo.kind[static_cast<size_t>(j)]) {
      case NodeKind::Dirichlet:
        out[j] = prob.boundary.dirichlet(t_n, g.node(j));
        break;
      case NodeKind::Free:
        out[j] = U_prev[j] + cfg.dt * ne.hamiltonian(U_prev, g.node(j), U_prev[j]);
        break;
      case NodeKind::NeumannCopy:
        break;  // filled afterwards
    }
  });
  refresh_neumann(out, topo);

  StepReport rep;
  rep.iterations = 1;
  return {std::move(out), rep};
}

inline std::pair<GridFunction, StepReport> howard_step(const GridFunction&, double, const Problem&,
                                                       const SchemeConfig&, const StepTopology&,
                                                       const CoeffBounds&, bool);

inline std::pair<GridFunction, StepReport> fixed_point_step(const GridFunction& U_prev, double t_n,
                                                            const Problem& prob, const SchemeConfig& cfg,
                                                            const StepTopology& topo,
                                                            const CoeffBounds& cb) {
  // Implicit cubic steps of the time-weighted form go through the
  // defect-corrected policy iteration: the plain damped sweep contracts
  // like 1 - eps*min(time weight), which degenerates under control
  // refinement on the super-replication set.
  if (prob.form == HamiltonianForm::TimeWeighted && cfg.interp == InterpKind::MonotoneCubic)
    return howard_step(U_prev, t_n, prob, cfg, topo, cb, true);
  const Grid& g = U_prev.grid;
  const double theta = cfg.theta;
  const double t_c = t_n - cfg.dt + theta * cfg.dt;
  const NodeEval ne(prob, g, cfg, t_c);
  const int M = ne.pair_count();

  double eps = cfg.fp_epsilon;
  if (eps <= 0.0) {
    const double w_max = prob.form == HamiltonianForm::TimeWeighted ? cb.max_time_weight : 1.0;
    eps = 1.0 / (w_max + cfg.dt * theta * (M / (cfg.k * cfg.k) + cb.sup_c_abs));
  }

  GridFunction U = U_prev;  // warm start
  U.time = t_n;
  pin_dirichlet(U, prob.boundary, topo, t_n);
  refresh_neumann(U, topo);

  GridFunction W(g, t_c);  // theta combination buffer (standard form, theta < 1)
  const bool need_comb = prob.form == HamiltonianForm::Standard && theta < 1.0;

  std::vector<double> R(static_cast<size_t>(g.num_nodes), 0.0);
  std::vector<double> history;
  StepReport rep;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const GridFunction* Wp = &U;
    if (need_comb) {
      parallel_for(g.num_nodes, [&](std::ptrdiff_t j) {
        W[j] = theta * U[j] + (1.0 - theta) * U_prev[j];
      });
      Wp = &W;
    }

    parallel_for(g.num_nodes, [&](std::ptrdiff_t j) {
      if (!topo.free(j)) {
        R[static_cast<size_t>(j)] = 0.0;
        return;
      }
      const Vec x = g.node(j);
      if (prob.form == HamiltonianForm::Standard) {
        R[static_cast<size_t>(j)] =
            U[j] - U_prev[j] - cfg.dt * ne.hamiltonian(*Wp, x, (*Wp)[j]);
      } else {
        R[static_cast<size_t>(j)] = ne.weighted_residual(U, x, U[j], U_prev[j], cfg.dt);
      }
    });

    double resid = 0.0;
    for (double r : R) resid = std::max(resid, std::abs(r));
    history.push_back(resid);
    rep.iterations = it;
    rep.final_residual = resid;
    if (resid <= cfg.tol) {
      rep.residual_history = std::move(history);
      return {std::move(U), rep};
    }

    parallel_for(g.num_nodes, [&](std::ptrdiff_t j) {
      if (topo.free(j)) U[j] -= eps * R[static_cast<size_t>(j)];
    });
    refresh_neumann(U, topo);
  }

  std::ostringstream msg;
  msg << "fixed-point solver did not reach tol " << cfg.tol << " in " << cfg.max_iter
      << " iterations; residual history tail:";
  for (size_t i = history.size() >= 5 ? history.size() - 5 : 0; i < history.size(); ++i)
    msg << " " << history[i];
  throw SolveError(rep.final_residual, msg.str());
}

// Policy evaluation system rows (Gauss-Seidel form).
struct PolicySystem {
  std::vector<double> diag, rhs;
  std::vector<std::vector<std::pair<int, double>>> off;  // (unknown id, +coefficient)
};

// Policy iteration at theta = 1. With `cubic_defect` the rows stay
// multilinear while a per-control source carries the cubic-vs-linear
// operator defect, refreshed from the current iterate; the stopping
// residual is then the true monotone-cubic residual.
inline std::pair<GridFunction, StepReport> howard_step(const GridFunction& U_prev, double t_n,
                                                       const Problem& prob, const SchemeConfig& cfg,
                                                       const StepTopology& topo,
                                                       const CoeffBounds& /*cb*/,
                                                       bool cubic_defect = false) {
  const Grid& g = U_prev.grid;
  const double t_c = t_n;  // theta = 1
  SchemeConfig cfg_lin = cfg;
  if (cubic_defect) cfg_lin.interp = InterpKind::Multilinear;
  const NodeEval ne(prob, g, cfg_lin, t_c);
  std::optional<NodeEval> ne_cub;
  if (cubic_defect) ne_cub.emplace(prob, g, cfg, t_c);
  const int M = ne.pair_count();
  const double mk2 = M / (cfg.k * cfg.k);
  const auto& alphas = prob.control_set.alphas;
  const Vec beta0 = prob.control_set.betas[0];
  const bool weighted = prob.form == HamiltonianForm::TimeWeighted;
  if (cubic_defect && !weighted)
    throw UnsupportedError("defect-corrected implicit cubic steps support the time-weighted form only");

  // solve for free nodes plus Neumann-copied face nodes
  std::vector<std::ptrdiff_t> solve_nodes = topo.unknowns;
  std::vector<std::ptrdiff_t> copy_source(static_cast<size_t>(g.num_nodes), -1);
  for (const auto& [node, src] : topo.neumann_copy) copy_source[static_cast<size_t>(node)] = src;
  for (std::ptrdiff_t j = 0; j < g.num_nodes; ++j)
    if (topo.kind[static_cast<size_t>(j)] == NodeKind::NeumannCopy) solve_nodes.push_back(j);
  const size_t nfree = topo.unknowns.size();
  const size_t nu = solve_nodes.size();
  std::vector<int> unknown_id(static_cast<size_t>(g.num_nodes), -1);
  for (size_t u = 0; u < nu; ++u) unknown_id[static_cast<size_t>(solve_nodes[u])] = static_cast<int>(u);

  GridFunction U = U_prev;
  U.time = t_n;
  pin_dirichlet(U, prob.boundary, topo, t_n);
  refresh_neumann(U, topo);

  const size_t na = alphas.size();
  std::vector<double> defect;
  std::vector<int> defect_policy;
  if (cubic_defect) {
    defect.assign(nfree * na, 0.0);
    defect_policy.assign(nfree, 0);
  }

  // Defect refresh fused with the true-residual and policy sweep. `blend`
  // averages the new defect with the previous one, which breaks the limit
  // cycles the limiter's branch switches can otherwise sustain; the policy
  // only moves when the improvement beats a tol/10 hysteresis, which stops
  // sub-tolerance policy flips from doing the same.
  const auto refresh_defect = [&](double blend) {
    double resid = 0.0;
    std::vector<double> node_res(nfree, 0.0);
    parallel_for(static_cast<std::ptrdiff_t>(nfree), [&](std::ptrdiff_t u) {
      const std::ptrdiff_t j = topo.unknowns[static_cast<size_t>(u)];
      const Vec x = g.node(j);
      const double du = U[j] - U_prev[j];
      double best = std::numeric_limits<double>::infinity();
      double best_usable = std::numeric_limits<double>::infinity();
      int best_ia = defect_policy[static_cast<size_t>(u)];
      double r_current = 0.0;
      for (size_t ia = 0; ia < na; ++ia) {
        const Control ctrl{alphas[ia], beta0};
        const double lc = ne_cub->lk_value(U, x, U[j], ia);
        const double ll = ne.lk_value(U, x, U[j], ia);
        double& d = defect[static_cast<size_t>(u) * na + ia];
        d = blend * (lc - ll) + (1.0 - blend) * d;
        double rhs = lc;
        if (prob.c) rhs += prob.c(t_c, x, ctrl) * U[j];
        rhs += prob.eval_f(t_c, x, ctrl);
        const double w = prob.time_weight(ctrl);
        const double r = w * du - cfg.dt * rhs;
        best = std::min(best, r);
        bool usable = w > 1e-12;
        if (!usable) {
          const DisplacementSet ds = ne.has_cache() ? ne.cached_ds(ia, 0) : ne.build_ds(t_c, x, ctrl);
          double reach = 0.0;
          for (int m = 0; m < ds.M; ++m)
            for (int a = 0; a < g.dim; ++a)
              reach = std::max(reach,
                               std::max(std::abs(ds.pairs[m].plus[a]), std::abs(ds.pairs[m].minus[a])));
          usable = reach > 1e-10 * cfg.k;
        }
        if (usable && r < best_usable) {
          best_usable = r;
          best_ia = static_cast<int>(ia);
        }
        if (static_cast<int>(ia) == defect_policy[static_cast<size_t>(u)]) r_current = r;
      }
      if (best_usable >= r_current - 0.1 * cfg.tol)
        best_ia = defect_policy[static_cast<size_t>(u)];  // hysteresis
      defect_policy[static_cast<size_t>(u)] = best_ia;
      node_res[static_cast<size_t>(u)] = std::abs(best);
    });
    for (double r : node_res) resid = std::max(resid, r);
    return resid;
  };
  // initial policy from the warm start
  std::vector<int> policy(nfree, 0);
  if (cubic_defect) {
    refresh_defect(1.0);
    policy = defect_policy;
  } else {
    parallel_for(static_cast<std::ptrdiff_t>(nfree), [&](std::ptrdiff_t u) {
      const std::ptrdiff_t j = topo.unknowns[static_cast<size_t>(u)];
      const Vec x = g.node(j);
      int arg = 0;
      if (weighted) {
        ne.weighted_residual(U, x, U[j], U_prev[j], cfg.dt, &arg);
      } else {
        ne.hamiltonian(U, x, U[j], &arg);
      }
      policy[static_cast<size_t>(u)] = arg;
    });
  }

  PolicySystem sys;
  sys.diag.resize(nu);
  sys.rhs.resize(nu);
  sys.off.resize(nu);
  std::vector<double> xsol(nu);
  StepReport rep;
  const double inner_tol = cfg.tol / 10.0;
  double defect_blend = 0.5;
  double best_resid = std::numeric_limits<double>::infinity();
  int stall_count = 0;
  bool average_iterates = false;  // Krasnoselskii step against 2-cycles
  std::vector<double> u_snapshot;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    // assemble for the frozen policy
    parallel_for(static_cast<std::ptrdiff_t>(nu), [&](std::ptrdiff_t u) {
      const std::ptrdiff_t j = solve_nodes[static_cast<size_t>(u)];
      auto& off = sys.off[static_cast<size_t>(u)];
      off.clear();
      xsol[static_cast<size_t>(u)] = U[j];
      if (u >= static_cast<std::ptrdiff_t>(nfree)) {  // Neumann copy row
        const std::ptrdiff_t src = copy_source[static_cast<size_t>(j)];
        sys.diag[static_cast<size_t>(u)] = 1.0;
        if (topo.kind[static_cast<size_t>(src)] == NodeKind::Dirichlet) {
          sys.rhs[static_cast<size_t>(u)] = U[src];
        } else {
          sys.rhs[static_cast<size_t>(u)] = 0.0;
          off.emplace_back(unknown_id[static_cast<size_t>(src)], 1.0);
        }
        return;
      }
      const Vec x = g.node(j);
      const Control ctrl{alphas[static_cast<size_t>(policy[static_cast<size_t>(u)])], beta0};
      const DisplacementSet ds = ne.has_cache()
                                     ? ne.cached_ds(static_cast<size_t>(policy[static_cast<size_t>(u)]), 0)
                                     : ne.build_ds(t_c, x, ctrl);
      const CoefficientRow row = lk_coefficient_form(g, x, ds, cfg_lin.interp, prob.boundary, t_c);
      const double w = weighted ? prob.time_weight(ctrl) : 1.0;
      const double c_val = prob.eval_c(t_c, x, ctrl);
      double diag = w + cfg.dt * (mk2 - c_val);
      double rhs = w * U_prev[j] + cfg.dt * (prob.eval_f(t_c, x, ctrl) + row.constant);
      if (cubic_defect)
        rhs += cfg.dt * defect[static_cast<size_t>(u) * na +
                               static_cast<size_t>(policy[static_cast<size_t>(u)])];
      for (const auto& [i, l] : row.weights) {
        if (i == j) {
          diag -= cfg.dt * l;
        } else if (topo.kind[static_cast<size_t>(i)] == NodeKind::Dirichlet) {
          rhs += cfg.dt * l * U[i];
        } else {
          off.emplace_back(unknown_id[static_cast<size_t>(i)], cfg.dt * l);
        }
      }
      sys.diag[static_cast<size_t>(u)] = diag;
      sys.rhs[static_cast<size_t>(u)] = rhs;
    });

    // Gauss-Seidel in fixed lexicographic order
    double scale = 1.0;
    for (size_t u = 0; u < nu; ++u) scale = std::max(scale, std::abs(sys.rhs[u]));
    const double gs_tol = inner_tol * scale;
    bool solved = false;
    for (int sweep = 0; sweep < 200000; ++sweep) {
      for (size_t u = 0; u < nu; ++u) {
        double s = sys.rhs[u];
        for (const auto& [i, a] : sys.off[u]) s += a * xsol[static_cast<size_t>(i)];
        xsol[u] = s / sys.diag[u];
      }
      double gs_res = 0.0;
      for (size_t u = 0; u < nu; ++u) {
        double s = sys.rhs[u] - sys.diag[u] * xsol[u];
        for (const auto& [i, a] : sys.off[u]) s += a * xsol[static_cast<size_t>(i)];
        gs_res = std::max(gs_res, std::abs(s));
      }
      if (gs_res <= gs_tol) {
        solved = true;
        break;
      }
    }
    if (!solved) throw SolveError(0.0, "policy-evaluation Gauss-Seidel solve did not converge");

    // ordering diagnostic: inf-problems decrease, time-weighted ones increase
    if (cfg.track_howard_monotonicity && !cubic_defect && it >= 2) {
      double viol = 0.0;
      for (size_t u = 0; u < nfree; ++u) {
        const double delta = xsol[u] - U[solve_nodes[u]];
        viol = std::max(viol, weighted ? -delta : delta);
      }
      rep.howard_order_violation = std::max(rep.howard_order_violation, viol);
    }
    if (cubic_defect && average_iterates) {
      u_snapshot.resize(nu);
      for (size_t u = 0; u < nu; ++u) u_snapshot[u] = U[solve_nodes[u]];
      for (size_t u = 0; u < nu; ++u) U[solve_nodes[u]] = 0.5 * (xsol[u] + u_snapshot[u]);
    } else {
      for (size_t u = 0; u < nu; ++u) U[solve_nodes[u]] = xsol[u];
    }
    refresh_neumann(U, topo);
    rep.iterations = it;

    double resid = 0.0;
    int changes = 0;
    if (cubic_defect) {
      // defect, policy, and true cubic residual track the new iterate;
      // damp the defect update harder on stagnation
      resid = refresh_defect(it <= 4 ? 1.0 : defect_blend);
      if (resid < 0.98 * best_resid) {
        best_resid = resid;
        stall_count = 0;
      } else if (++stall_count >= 6) {
        stall_count = 0;
        if (!average_iterates) {
          average_iterates = true;  // damp near-(-1) outer modes first
        } else if (defect_blend > 0.02) {
          defect_blend *= 0.5;  // then break limiter-branch limit cycles
        }
      }
      for (size_t u = 0; u < nfree; ++u)
        if (defect_policy[u] != policy[u]) ++changes;
      rep.final_residual = resid;
      rep.residual_history.push_back(resid);
      rep.policy_changes += changes;
      if (resid <= cfg.tol) return {std::move(U), rep};
      policy = defect_policy;
      continue;
    }

    // policy improvement and equation residual
    std::vector<int> next(nfree);
    std::vector<double> res(nfree);
    parallel_for(static_cast<std::ptrdiff_t>(nfree), [&](std::ptrdiff_t u) {
      const std::ptrdiff_t j = topo.unknowns[static_cast<size_t>(u)];
      const Vec x = g.node(j);
      int arg = 0;
      double r;
      if (weighted) {
        r = ne.weighted_residual(U, x, U[j], U_prev[j], cfg.dt, &arg);
      } else {
        r = U[j] - U_prev[j] - cfg.dt * ne.hamiltonian(U, x, U[j], &arg);
      }
      next[static_cast<size_t>(u)] = arg;
      res[static_cast<size_t>(u)] = r;
    });
    for (size_t u = 0; u < nfree; ++u) {
      resid = std::max(resid, std::abs(res[u]));
      if (next[u] != policy[u]) ++changes;
    }
    rep.final_residual = resid;
    rep.residual_history.push_back(resid);
    rep.policy_changes += changes;
    if (resid <= cfg.tol || changes == 0) return {std::move(U), rep};
    policy = std::move(next);
  }

  throw SolveError(rep.final_residual, "Howard iteration did not converge within max_iter");
}

inline std::pair<GridFunction, StepReport> dispatch_step(const GridFunction& U_prev, double t_n,
                                                         const Problem& prob, const SchemeConfig& cfg,
                                                         const StepTopology& topo,
                                                         const CoeffBounds& cb) {
  const auto t0 = std::chrono::steady_clock::now();
  std::pair<GridFunction, StepReport> out = [&] {
    switch (cfg.solver) {
      case SolverKind::Explicit: return explicit_step(U_prev, t_n, prob, cfg, topo);
      case SolverKind::FixedPoint: return fixed_point_step(U_prev, t_n, prob, cfg, topo, cb);
      case SolverKind::Howard: return howard_step(U_prev, t_n, prob, cfg, topo, cb);
    }
    throw ConfigError("unknown solver kind");
  }();
  out.second.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!out.first.all_finite()) throw SolveError(0.0, "step produced non-finite values");
  return out;
}

}  // namespace detail

// One theta step from U_prev (at t_n - dt) to t_n.
inline std::pair<GridFunction, StepReport> theta_step(const GridFunction& U_prev, double t_n,
                                                      const Problem& prob, const SchemeConfig& cfg) {
  prob.validate();
  cfg.validate(prob);
  const detail::StepTopology topo(U_prev.grid, prob.boundary);
  const detail::CoeffBounds cb =
      detail::scan_coefficients(prob, U_prev.grid, {t_n - cfg.dt, t_n - cfg.dt + cfg.theta * cfg.dt});
  return detail::dispatch_step(U_prev, t_n, prob, cfg, topo, cb);
}

inline std::pair<GridFunction, StepReport> solve_fixed_point(const GridFunction& U_prev, double t_n,
                                                             const Problem& prob, SchemeConfig cfg) {
  cfg.solver = SolverKind::FixedPoint;
  return theta_step(U_prev, t_n, prob, cfg);
}

inline std::pair<GridFunction, StepReport> solve_howard(const GridFunction& U_prev, double t_n,
                                                        const Problem& prob, SchemeConfig cfg) {
  cfg.solver = SolverKind::Howard;
  return theta_step(U_prev, t_n, prob, cfg);
}

struct RunReport {
  int steps = 0;
  std::vector<StepReport> step_reports;
  bool stability_ok = true;
  double worst_stability_ratio = 0.0;  // max over steps of |U^n| / bound(t_n)
  double sup_c_plus = 0.0;
  double sup_f_abs = 0.0;
  double max_norm_growth = 0.0;  // max over steps of |U^n| - |U^{n-1}|
  double wall_seconds = 0.0;
  double final_time = 0.0;
};

// Full run from U^0 = g to t_end in ceil(t_end/dt) theta steps. The
// observer, when given, sees every level including the initial one.
inline std::pair<GridFunction, RunReport> run(
    const Problem& prob, const Grid& g, const SchemeConfig& cfg, double t_end,
    const std::function<void(const GridFunction&, int)>& observer = {}) {
  prob.validate();
  cfg.validate(prob);
  if (t_end > prob.time_horizon * (1.0 + 1e-12))
    throw ConfigError("t_end exceeds the problem time horizon");
  const CflReport cfl = cfl_check(cfg, prob, g, 0.0);
  if (!cfl.admissible)
    throw ConfigError("dt is not CFL admissible; largest admissible dt is " + std::to_string(cfl.max_dt));

  const auto wall0 = std::chrono::steady_clock::now();
  const detail::StepTopology topo(g, prob.boundary);
  const detail::CoeffBounds cb = detail::scan_coefficients(prob, g, {0.0, 0.5 * t_end, t_end});

  GridFunction U = sample_on_grid(g, 0.0, prob.g);
  const double g_norm = U.max_abs();
  RunReport rep;
  rep.sup_c_plus = cb.sup_c_plus;
  rep.sup_f_abs = cb.sup_f_abs;
  if (observer) observer(U, 0);

  const int n_steps = static_cast<int>(std::ceil(t_end / cfg.dt - 1e-9));
  for (int n = 1; n <= n_steps; ++n) {
    const double t_n = n * cfg.dt;
    double prev_norm = U.max_abs();
    auto [U_next, srep] = detail::dispatch_step(U, t_n, prob, cfg, topo, cb);
    U = std::move(U_next);
    rep.step_reports.push_back(srep);
    rep.max_norm_growth = std::max(rep.max_norm_growth, U.max_abs() - prev_norm);

    const double bound = std::exp(2.0 * cb.sup_c_plus * t_n) * (g_norm + t_n * cb.sup_f_abs);
    const double ratio = bound > 0.0 ? U.max_abs() / bound : (U.max_abs() > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.worst_stability_ratio = std::max(rep.worst_stability_ratio, ratio);
    if (ratio > 1.0 + 1e-9) rep.stability_ok = false;

    if (observer) observer(U, n);
  }
  rep.steps = n_steps;
  rep.final_time = n_steps * cfg.dt;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return {std::move(U), rep};
}

}  // namespace slhjb
