// Monotone interpolation operators: multilinear and monotone cubic Hermite
// with limited slopes, extended to tensor-product grids dimension by
// dimension.
#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "slhjb/common.hpp"
#include "slhjb/grid.hpp"

namespace slhjb {

enum class InterpKind { Multilinear, MonotoneCubic };

// Sparse nodal weights of one interpolation query. All weights are
// non-negative and sum to one.
struct InterpolationWeights {
  std::vector<std::pair<std::ptrdiff_t, double>> entries;

  double sum() const {
    double s = 0.0;
    for (const auto& [i, w] : entries) s += w;
    return s;
  }
  double min_weight() const {
    double m = 1.0;
    for (const auto& [i, w] : entries) m = std::min(m, w);
    return m;
  }
};

namespace detail {

struct Cell {
  int index;      // lower node of the containing interval
  double offset;  // in [0, dx]
  double frac;    // offset / dx
};

inline Cell locate(const Grid& g, int axis, double p) {
  const double h = g.dx[axis];
  int i = static_cast<int>(std::floor((p - g.lower[axis]) / h));
  i = std::clamp(i, 0, g.count[axis] - 2);
  double off = p - g.coord(axis, i);
  off = std::clamp(off, 0.0, h);
  return {i, off, off / h};
}

}  // namespace detail

inline void check_inside(const Grid& g, const Vec& p) {
  for (int a = 0; a < g.dim; ++a) {
    const double tol = 1e-12 * (std::abs(g.lower[a]) + std::abs(g.upper[a]) + 1.0);
    if (p[a] < g.lower[a] - tol)
      throw OverstepError(p, a, 0, "interpolation point below lower bound on axis " + std::to_string(a));
    if (p[a] > g.upper[a] + tol)
      throw OverstepError(p, a, 1, "interpolation point above upper bound on axis " + std::to_string(a));
  }
}

// Tensor-product hat-function weights of the cell containing `point`.
// Exact on affine functions; at most 2^N nonzero entries.
inline InterpolationWeights multilinear_weights(const Grid& g, const Vec& point) {
  check_inside(g, point);
  std::array<detail::Cell, kMaxDim> cell{};
  for (int a = 0; a < g.dim; ++a) cell[a] = detail::locate(g, a, point[a]);

  InterpolationWeights out;
  out.entries.reserve(static_cast<size_t>(1) << g.dim);
  const int corners = 1 << g.dim;
  for (int mask = 0; mask < corners; ++mask) {
    double w = 1.0;
    std::ptrdiff_t idx = 0;
    for (int a = 0; a < g.dim; ++a) {
      const int bit = (mask >> a) & 1;
      w *= bit ? cell[a].frac : (1.0 - cell[a].frac);
      idx += (cell[a].index + bit) * g.stride[a];
    }
    if (w != 0.0) out.entries.emplace_back(idx, w);
  }
  return out;
}

// Symmetric fourth-order derivative estimate from the five values
// phi_{i-2}, phi_{i-1}, phi_i, phi_{i+1}, phi_{i+2}.
inline double derivative_estimate(const std::array<double, 5>& phi, double dx) {
  return (phi[0] - 8.0 * phi[1] + 8.0 * phi[3] - phi[4]) / (12.0 * dx);
}

namespace detail {

// One-sided fourth-order slope formulas for the two nodes adjacent to each
// line end; values v0..v4 are the five nodes counted from the boundary.
inline double slope_end0(double v0, double v1, double v2, double v3, double v4, double dx) {
  return (-25.0 * v0 + 48.0 * v1 - 36.0 * v2 + 16.0 * v3 - 3.0 * v4) / (12.0 * dx);
}
inline double slope_end1(double v0, double v1, double v2, double v3, double v4, double dx) {
  return (-3.0 * v0 - 10.0 * v1 + 18.0 * v2 - 6.0 * v3 + v4) / (12.0 * dx);
}

}  // namespace detail

// Fritsch-Carlson region membership for the ratio pair (alpha, beta).
inline bool in_region_ellipse(double alpha, double beta, double tol = 0.0) {
  const double A = alpha - 1.0, B = beta - 1.0;
  return A * A + A * B + B * B - 3.0 * (A + B) <= tol;
}
inline bool in_region_box(double alpha, double beta, double tol = 0.0) {
  return alpha >= -tol && alpha <= 3.0 + tol && beta >= -tol && beta <= 3.0 + tol;
}
inline bool in_monotone_region(double alpha, double beta, double tol = 0.0) {
  return in_region_box(alpha, beta, tol) || in_region_ellipse(alpha, beta, tol);
}

namespace detail {

// Upper root in `b` of the ellipse boundary at fixed `a`; callers guarantee
// a is inside the ellipse's projection [0, 4].
inline double ellipse_upper_root(double a) {
  const double A = a - 1.0;
  const double disc = std::max(0.0, -3.0 * A * A + 6.0 * A + 9.0);
  return 1.0 + ((3.0 - A) + std::sqrt(disc)) / 2.0;
}

// Lower root in `b` of the ellipse boundary at fixed `a`.
inline double ellipse_lower_root(double a) {
  const double A = a - 1.0;
  const double disc = std::max(0.0, -3.0 * A * A + 6.0 * A + 9.0);
  return 1.0 + ((3.0 - A) - std::sqrt(disc)) / 2.0;
}

}  // namespace detail

// Slope limiter: clips negative slope/secant ratios and projects the pair
// onto the monotonicity region. Returns the limited (d_i, d_{i+1}).
// `flat_tol` is the secant magnitude below which the interval counts as
// flat and both slopes are zeroed.
inline std::pair<double, double> limit_slopes(double d0, double d1, double delta,
                                              double flat_tol = 0.0) {
  if (std::abs(delta) <= flat_tol || delta == 0.0) return {0.0, 0.0};

  double alpha = d0 / delta;
  double beta = d1 / delta;
  alpha = std::max(alpha, 0.0);
  beta = std::max(beta, 0.0);

  if (!in_monotone_region(alpha, beta)) {
    if (alpha >= 3.0 && beta >= 3.0) {
      alpha = 3.0;
      beta = 3.0;
    } else if (beta > 3.0 && alpha + beta >= 4.0) {
      beta = detail::ellipse_upper_root(alpha);
    } else if (beta > 3.0) {  // alpha + beta < 4
      const double alpha_root = detail::ellipse_lower_root(beta);
      if (alpha_root <= 4.0 - beta) {
        alpha = alpha_root;
      } else {
        alpha = 4.0 - beta;
        beta = detail::ellipse_upper_root(alpha);
      }
    } else if (alpha > 3.0 && alpha + beta >= 4.0) {
      alpha = detail::ellipse_upper_root(beta);  // region is symmetric in (alpha, beta)
    } else if (alpha > 3.0) {  // alpha + beta < 4
      const double beta_root = detail::ellipse_lower_root(alpha);
      if (beta_root <= 4.0 - alpha) {
        beta = beta_root;
      } else {
        beta = 4.0 - alpha;
        alpha = detail::ellipse_upper_root(beta);
      }
    }
  }
  return {alpha * delta, beta * delta};
}

// Cubic Hermite segment value at offset xi in [0, dx] with the given
// endpoint values and slopes.
inline double cubic_eval_1d(double phi0, double phi1, double d0, double d1, double dx, double xi) {
  const double delta = (phi1 - phi0) / dx;
  const double c2 = (3.0 * delta - d1 - 2.0 * d0) / dx;
  const double c3 = -(2.0 * delta - d1 - d0) / (dx * dx);
  return phi0 + xi * (d0 + xi * (c2 + xi * c3));
}

namespace detail {

// Slope estimate at node j of an n-node line whose values are read through
// `at`; centered stencil in the interior, one-sided fourth order at the two
// nodes adjacent to each end.
template <typename At>
double line_slope(const At& at, int n, int j, double dx) {
  if (j >= 2 && j <= n - 3)
    return (at(j - 2) - 8.0 * at(j - 1) + 8.0 * at(j + 1) - at(j + 2)) / (12.0 * dx);
  if (j == 0) return slope_end0(at(0), at(1), at(2), at(3), at(4), dx);
  if (j == 1) return slope_end1(at(0), at(1), at(2), at(3), at(4), dx);
  if (j == n - 2) return -slope_end1(at(n - 1), at(n - 2), at(n - 3), at(n - 4), at(n - 5), dx);
  return -slope_end0(at(n - 1), at(n - 2), at(n - 3), at(n - 4), at(n - 5), dx);
}

// Monotone cubic value minus `base` on the line read through `at`.
template <typename At>
double cubic_line_diff(const At& at, int n, double dx, const Cell& cell, double base) {
  const int i = cell.index;
  const double phi0 = at(i), phi1 = at(i + 1);
  const double d0 = line_slope(at, n, i, dx);
  const double d1 = line_slope(at, n, i + 1, dx);
  const double delta = (phi1 - phi0) / dx;
  const double flat_tol = 1e-14 * (1.0 + std::abs(phi0) + std::abs(phi1));
  const auto [l0, l1] = limit_slopes(d0, d1, delta, flat_tol);
  const double c2 = (3.0 * delta - l1 - 2.0 * l0) / dx;
  const double c3 = -(2.0 * delta - l1 - l0) / (dx * dx);
  return (phi0 - base) + cell.offset * (l0 + cell.offset * (c2 + cell.offset * c3));
}

// Tensor-product monotone cubic, ascending axis order: axis 0 is reduced
// first, then axis 1 acts on the reduced values, and so on.
struct CubicEvaluator {
  const Grid& g;
  const double* v;
  std::array<Cell, kMaxDim> cell;
  double base;

  double eval_axis(int axis, std::ptrdiff_t offset) const {
    const int n = g.count[axis];
    const double h = g.dx[axis];
    const Cell& c = cell[axis];
    if (axis == 0) {
      const double* line = v + offset;
      const std::ptrdiff_t s = g.stride[0];
      const auto at = [line, s](int j) { return line[j * s]; };
      return cubic_line_diff(at, n, h, c, base);
    }
    // rows of reduced values needed by the two slope stencils
    int r0, r1;
    if (c.index <= 1) {
      r0 = 0;
      r1 = std::max(4, c.index + 3);
    } else if (c.index >= n - 3) {
      r1 = n - 1;
      r0 = std::min(n - 5, c.index - 2);
    } else {
      r0 = c.index - 2;
      r1 = c.index + 3;
    }
    r0 = std::max(r0, 0);
    r1 = std::min(r1, n - 1);

    std::array<double, 8> w{};
    const std::ptrdiff_t s = g.stride[axis];
    for (int j = r0; j <= r1; ++j) w[j - r0] = eval_axis(axis - 1, offset + j * s);
    const auto at = [&w, r0](int j) { return w[j - r0]; };
    return cubic_line_diff(at, n, h, c, 0.0);
  }
};

inline double multilinear_diff(const Grid& g, const double* v, const Vec& p, double base) {
  std::array<Cell, kMaxDim> cell{};
  for (int a = 0; a < g.dim; ++a) cell[a] = locate(g, a, p[a]);
  double acc = 0.0;
  const int corners = 1 << g.dim;
  for (int mask = 0; mask < corners; ++mask) {
    double w = 1.0;
    std::ptrdiff_t idx = 0;
    for (int a = 0; a < g.dim; ++a) {
      const int bit = (mask >> a) & 1;
      w *= bit ? cell[a].frac : (1.0 - cell[a].frac);
      idx += (cell[a].index + bit) * g.stride[a];
    }
    acc += w * (v[idx] - base);
  }
  return acc;
}

inline double cubic_diff(const Grid& g, const double* v, const Vec& p, double base) {
  CubicEvaluator ev{g, v, {}, base};
  for (int a = 0; a < g.dim; ++a) ev.cell[a] = locate(g, a, p[a]);
  return ev.eval_axis(g.dim - 1, 0);
}

}  // namespace detail

// Interpolated value minus `base`, computed without forming the value
// itself so constant data interpolates exactly.
inline double interpolate_diff(const Grid& g, const std::vector<double>& values, const Vec& point,
                               InterpKind kind, double base) {
  return kind == InterpKind::Multilinear
             ? detail::multilinear_diff(g, values.data(), point, base)
             : detail::cubic_diff(g, values.data(), point, base);
}

inline double interpolate(const Grid& g, const GridFunction& u, const Vec& point, InterpKind kind) {
  check_inside(g, point);
  return interpolate_diff(g, u.values, point, kind, 0.0);
}

inline double interpolate(const GridFunction& u, const Vec& point, InterpKind kind) {
  return interpolate(u.grid, u, point, kind);
}

}  // namespace slhjb
