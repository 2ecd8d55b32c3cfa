// Displacement sets y^{+-} for the five difference approximations of the
// generator, moment-condition verification, and application of the wide
// stencil operator through a monotone interpolant.
#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "slhjb/common.hpp"
#include "slhjb/grid.hpp"
#include "slhjb/interp.hpp"
#include "slhjb/problem.hpp"

namespace slhjb {

enum class Variant {
  Falcone1 = 1,        // pure drift, y = k^2 b
  CrandallLions2 = 2,  // pure diffusion, y_j = +-k sigma_j
  CamilliFalcone3 = 3, // y_j = +-k sigma_j + (k^2/P) b
  Combined4 = 4,       // diffusion pairs plus one drift pair
  Efficient5 = 5,      // drift folded into the last diffusion pair
};

inline Variant variant_from_int(int v) {
  if (v < 1 || v > 5) throw ConfigError("operator variant must be in 1..5");
  return static_cast<Variant>(v);
}

struct DisplacementPair {
  Vec plus = zero_vec();
  Vec minus = zero_vec();
};

// One instance of the operator L_k: M displacement pairs at scale k.
struct DisplacementSet {
  std::array<DisplacementPair, kMaxCols + 1> pairs{};
  int M = 0;
  double k = 0.0;
  Variant variant = Variant::CrandallLions2;
};

inline DisplacementSet displacement_set(const Mat& sigma, const Vec& b, double k, Variant variant) {
  if (!(k > 0.0)) throw ConfigError("displacement scale k must be positive");
  const int N = sigma.rows;
  const int P = sigma.cols;
  DisplacementSet ds;
  ds.k = k;
  ds.variant = variant;
  const double k2 = k * k;

  const auto drift = [&](double scale) {
    Vec y = zero_vec();
    for (int r = 0; r < N; ++r) y[r] = scale * b[r];
    return y;
  };
  const auto column = [&](int j, double sign, const Vec& shift) {
    Vec y = shift;
    for (int r = 0; r < N; ++r) y[r] += sign * k * sigma(r, j);
    return y;
  };

  switch (variant) {
    case Variant::Falcone1: {
      if (sigma.frobenius_norm() != 0.0)
        throw ConfigError("variant 1 is drift-only; sigma must vanish");
      const Vec y = drift(k2);
      ds.pairs[0] = {y, y};
      ds.M = 1;
      break;
    }
    case Variant::CrandallLions2: {
      if (P < 1) throw ConfigError("variant 2 needs at least one sigma column");
      for (int j = 0; j < P; ++j) ds.pairs[j] = {column(j, +1.0, zero_vec()), column(j, -1.0, zero_vec())};
      ds.M = P;
      break;
    }
    case Variant::CamilliFalcone3: {
      if (P < 1) throw ConfigError("variant 3 needs at least one sigma column");
      const Vec shift = drift(k2 / P);
      for (int j = 0; j < P; ++j) ds.pairs[j] = {column(j, +1.0, shift), column(j, -1.0, shift)};
      ds.M = P;
      break;
    }
    case Variant::Combined4: {
      for (int j = 0; j < P; ++j) ds.pairs[j] = {column(j, +1.0, zero_vec()), column(j, -1.0, zero_vec())};
      const Vec y = drift(k2);
      ds.pairs[P] = {y, y};
      ds.M = P + 1;
      break;
    }
    case Variant::Efficient5: {
      if (P < 1) throw ConfigError("variant 5 needs at least one sigma column");
      for (int j = 0; j + 1 < P; ++j) ds.pairs[j] = {column(j, +1.0, zero_vec()), column(j, -1.0, zero_vec())};
      const Vec shift = drift(k2);
      ds.pairs[P - 1] = {column(P - 1, +1.0, shift), column(P - 1, -1.0, shift)};
      ds.M = P;
      break;
    }
  }
  return ds;
}

// Max-norm residuals of the four moment sums against their targets
//   sum[y+ + y-]           = 2 k^2 b
//   sum[y+(x)y+ + y-(x)y-] = 2 k^2 sigma sigma^T
//   third and fourth tensor moments = 0,
// each required to be O(k^4).
struct MomentReport {
  std::array<double, 4> residual{};
  double bound = 0.0;  // C * k^4
  bool pass() const {
    for (double r : residual)
      if (!(r <= bound)) return false;
    return true;
  }
};

inline MomentReport verify_y1(const DisplacementSet& ds, const Mat& sigma, const Vec& b, double k) {
  const int N = sigma.rows;
  const double k2 = k * k;

  std::array<double, kMaxDim> m1{};
  std::array<std::array<double, kMaxDim>, kMaxDim> m2{};
  double m3 = 0.0, m4 = 0.0;  // max-norm accumulators need full tensors
  std::array<std::array<std::array<double, kMaxDim>, kMaxDim>, kMaxDim> t3{};
  std::array<std::array<std::array<std::array<double, kMaxDim>, kMaxDim>, kMaxDim>, kMaxDim> t4{};

  for (int m = 0; m < ds.M; ++m) {
    for (const Vec* y : {&ds.pairs[m].plus, &ds.pairs[m].minus}) {
      for (int i = 0; i < N; ++i) {
        m1[i] += (*y)[i];
        for (int j = 0; j < N; ++j) {
          m2[i][j] += (*y)[i] * (*y)[j];
          for (int l = 0; l < N; ++l) {
            t3[i][j][l] += (*y)[i] * (*y)[j] * (*y)[l];
            for (int q = 0; q < N; ++q) t4[i][j][l][q] += (*y)[i] * (*y)[j] * (*y)[l] * (*y)[q];
          }
        }
      }
    }
  }

  MomentReport rep;
  for (int i = 0; i < N; ++i) rep.residual[0] = std::max(rep.residual[0], std::abs(m1[i] - 2.0 * k2 * b[i]));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double ssT = 0.0;
      for (int p = 0; p < sigma.cols; ++p) ssT += sigma(i, p) * sigma(j, p);
      rep.residual[1] = std::max(rep.residual[1], std::abs(m2[i][j] - 2.0 * k2 * ssT));
    }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        m3 = std::max(m3, std::abs(t3[i][j][l]));
        for (int q = 0; q < N; ++q) m4 = std::max(m4, std::abs(t4[i][j][l][q]));
      }
  rep.residual[2] = m3;
  rep.residual[3] = m4;

  const double scale = 1.0 + sigma.frobenius_norm() + std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
  const double C = 8.0 * (ds.M + 1) * scale * scale * scale * scale;
  rep.bound = C * k2 * k2;
  return rep;
}

// Result of pushing a stencil point through the boundary specification:
// either a point inside the box to interpolate at, or a ready value from a
// Dirichlet face.
struct ResolvedPoint {
  bool is_value = false;
  Vec point = zero_vec();
  double value = 0.0;
};

inline ResolvedPoint resolve_point(const Grid& g, const BoundarySpec& bc, Vec p, double t) {
  bool dirichlet_exit = false;
  int dir_axis = -1, dir_side = 0;
  for (int a = 0; a < g.dim; ++a) {
    const double tol = 1e-13 * (std::abs(g.lower[a]) + std::abs(g.upper[a]) + 1.0);
    for (int side = 0; side < 2; ++side) {
      const double bound = side == 0 ? g.lower[a] : g.upper[a];
      const double excess = side == 0 ? bound - p[a] : p[a] - bound;
      if (excess <= 0.0) continue;
      if (excess <= tol) {  // roundoff, not a real overstep
        p[a] = bound;
        continue;
      }
      switch (bc.condition[a][side]) {
        case FaceCondition::NeumannHomogeneous:
          p[a] = bound;  // exact extension in the normal direction
          break;
        case FaceCondition::Degenerate:
          throw OverstepError(p, a, side, "stencil exited a degenerate face on axis " + std::to_string(a));
        case FaceCondition::DirichletFromFunction:
          switch (bc.overstep) {
            case OverstepPolicy::Error:
              throw OverstepError(p, a, side, "stencil overstepped a Dirichlet face on axis " + std::to_string(a));
            case OverstepPolicy::ClampToBoundary:
              p[a] = bound;
              break;
            case OverstepPolicy::UseExtension:
              dirichlet_exit = true;
              if (dir_axis < 0) {
                dir_axis = a;
                dir_side = side;
              }
              break;
          }
          break;
      }
    }
  }
  ResolvedPoint out;
  if (dirichlet_exit) {
    if (!bc.dirichlet) throw ConfigError("Dirichlet face without a boundary function");
    out.is_value = true;
    out.value = bc.dirichlet(t, p);
    out.point = p;
  } else {
    out.point = p;
  }
  return out;
}

// L_k applied to the interpolant of u at node x_j:
//   sum_i [Iu(x_j + y_i^+) - 2 u(x_j) + Iu(x_j + y_i^-)] / (2 k^2).
// Stencil points are resolved through the boundary specification first;
// `t_bdry` is the time at which exterior Dirichlet values are taken.
inline double apply_Lk(const GridFunction& u, const Vec& x, double u_at_x,
                       const DisplacementSet& ds, InterpKind kind, const BoundarySpec& bc,
                       double t_bdry) {
  const Grid& g = u.grid;
  double acc = 0.0;
  for (int m = 0; m < ds.M; ++m) {
    for (const Vec* y : {&ds.pairs[m].plus, &ds.pairs[m].minus}) {
      Vec p = x;
      for (int a = 0; a < g.dim; ++a) p[a] += (*y)[a];
      const ResolvedPoint r = resolve_point(g, bc, p, t_bdry);
      acc += r.is_value ? (r.value - u_at_x)
                        : interpolate_diff(g, u.values, r.point, kind, u_at_x);
    }
  }
  return acc / (2.0 * ds.k * ds.k);
}

inline double apply_Lk(const GridFunction& u, std::ptrdiff_t node, const DisplacementSet& ds,
                       InterpKind kind, const BoundarySpec& bc, double t_bdry) {
  return apply_Lk(u, u.grid.node(node), u[node], ds, kind, bc, t_bdry);
}

// Same difference quotient with phi evaluated exactly (no grid, no
// interpolation); used to measure the pure operator consistency error.
template <typename Fn>
double apply_Lk_exact(Fn&& phi, const Vec& x, const DisplacementSet& ds) {
  const int N = kMaxDim;
  double acc = 0.0;
  const double center = phi(x);
  for (int m = 0; m < ds.M; ++m) {
    Vec p = x, q = x;
    for (int a = 0; a < N; ++a) {
      p[a] += ds.pairs[m].plus[a];
      q[a] += ds.pairs[m].minus[a];
    }
    acc += phi(p) - 2.0 * center + phi(q);
  }
  return acc / (2.0 * ds.k * ds.k);
}

// Sparse coefficient row of L_k at node j under multilinear interpolation:
//   L_k[Iu](x_j) = sum_i l_{j,i} u_i - (M/k^2) u_j + constant,
// where the constant collects exterior Dirichlet values. Entries may repeat
// a node index; consumers accumulate.
struct CoefficientRow {
  std::vector<std::pair<std::ptrdiff_t, double>> weights;  // l_{j,i} contributions
  double constant = 0.0;
  double center_scale = 0.0;  // M / k^2

  double weight_sum() const {
    double s = 0.0;
    for (const auto& [i, w] : weights) s += w;
    return s;
  }
};

inline CoefficientRow lk_coefficient_form(const Grid& g, const Vec& x_j, const DisplacementSet& ds,
                                          InterpKind kind, const BoundarySpec& bc, double t_bdry) {
  if (kind != InterpKind::Multilinear)
    throw UnsupportedError("coefficient form requires multilinear interpolation; cubic weights are data dependent");
  CoefficientRow row;
  const double inv2k2 = 1.0 / (2.0 * ds.k * ds.k);
  row.center_scale = ds.M / (ds.k * ds.k);
  row.weights.reserve(static_cast<size_t>(2 * ds.M) << g.dim);
  for (int m = 0; m < ds.M; ++m) {
    for (const Vec* y : {&ds.pairs[m].plus, &ds.pairs[m].minus}) {
      Vec p = x_j;
      for (int a = 0; a < g.dim; ++a) p[a] += (*y)[a];
      const ResolvedPoint r = resolve_point(g, bc, p, t_bdry);
      if (r.is_value) {
        row.constant += r.value * inv2k2;
      } else {
        for (const auto& [idx, w] : multilinear_weights(g, r.point).entries)
          row.weights.emplace_back(idx, w * inv2k2);
      }
    }
  }
  return row;
}

// Advisory variant choice following the efficiency discussion of the five
// approximations: 4 when sigma is control independent but b is not, 5 in
// the other mixed cases, and the pure drift/diffusion variants when one
// coefficient vanishes.
inline Variant recommend_variant(const Problem& prob, const Grid& g) {
  Mat s;
  Vec bv = zero_vec();
  double sigma_norm = 0.0, b_norm = 0.0, sigma_spread = 0.0, b_spread = 0.0;
  const std::array<double, 3> times{0.0, 0.5 * prob.time_horizon, prob.time_horizon};
  std::vector<Vec> points{g.node(std::ptrdiff_t{0}), g.node(g.num_nodes / 2), g.node(g.num_nodes - 1)};

  const size_t na = std::min<size_t>(prob.control_set.num_alphas(), 64);
  const size_t nb = std::min<size_t>(prob.control_set.num_betas(), 8);
  for (double t : times)
    for (const Vec& x : points) {
      Mat s0;
      Vec b0 = zero_vec();
      for (size_t ia = 0; ia < na; ++ia)
        for (size_t ib = 0; ib < nb; ++ib) {
          const Control ctrl = prob.control_set.at(ia, ib);
          s.set_zero(prob.dim, prob.sigma_cols);
          if (prob.sigma) prob.sigma(t, x, ctrl, s);
          bv = zero_vec();
          if (prob.b) prob.b(t, x, ctrl, bv);
          sigma_norm = std::max(sigma_norm, s.frobenius_norm());
          for (int a = 0; a < prob.dim; ++a) b_norm = std::max(b_norm, std::abs(bv[a]));
          if (ia == 0 && ib == 0) {
            s0 = s;
            b0 = bv;
          } else {
            Mat d = s;
            for (size_t q = 0; q < d.a.size(); ++q) d.a[q] -= s0.a[q];
            sigma_spread = std::max(sigma_spread, d.frobenius_norm());
            for (int a = 0; a < prob.dim; ++a) b_spread = std::max(b_spread, std::abs(bv[a] - b0[a]));
          }
        }
    }

  if (sigma_norm == 0.0) return Variant::Falcone1;
  if (b_norm == 0.0) return Variant::CrandallLions2;
  if (sigma_spread == 0.0 && b_spread > 0.0) return Variant::Combined4;
  return Variant::Efficient5;
}

}  // namespace slhjb
