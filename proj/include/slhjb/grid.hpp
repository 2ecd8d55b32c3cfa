// Uniform tensor-product grids and grid functions.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "slhjb/common.hpp"

namespace slhjb {

// Uniform node lattice over a box. Node coordinates are always computed as
// lower + i*dx (never by repeated addition), so the first/last node
// reproduce the bounds up to one rounding of the product.
struct Grid {
  int dim = 0;
  Vec lower = zero_vec();
  Vec upper = zero_vec();
  std::array<int, kMaxDim> count{};    // nodes per axis, >= 5
  Vec dx = zero_vec();                 // (upper-lower)/(count-1) per axis
  std::array<std::ptrdiff_t, kMaxDim> stride{};
  std::ptrdiff_t num_nodes = 0;

  double coord(int axis, int i) const { return lower[axis] + i * dx[axis]; }

  // mesh parameter: max over axes of dx
  double mesh_width() const {
    double h = 0.0;
    for (int a = 0; a < dim; ++a) h = std::max(h, dx[a]);
    return h;
  }

  std::ptrdiff_t flat_index(const std::array<int, kMaxDim>& idx) const {
    std::ptrdiff_t f = 0;
    for (int a = 0; a < dim; ++a) f += stride[a] * idx[a];
    return f;
  }

  std::array<int, kMaxDim> multi_index(std::ptrdiff_t flat) const {
    std::array<int, kMaxDim> idx{};
    for (int a = dim - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat / stride[a]);
      flat -= idx[a] * stride[a];
    }
    return idx;
  }

  Vec node(const std::array<int, kMaxDim>& idx) const {
    Vec x = zero_vec();
    for (int a = 0; a < dim; ++a) x[a] = coord(a, idx[a]);
    return x;
  }

  Vec node(std::ptrdiff_t flat) const { return node(multi_index(flat)); }

  bool contains(const Vec& p, double tol = 0.0) const {
    for (int a = 0; a < dim; ++a)
      if (p[a] < lower[a] - tol || p[a] > upper[a] + tol) return false;
    return true;
  }

  bool on_face(const std::array<int, kMaxDim>& idx, int axis, int side) const {
    return side == 0 ? idx[axis] == 0 : idx[axis] == count[axis] - 1;
  }
};

inline Grid build_grid(int dim, const Vec& lower, const Vec& upper,
                       const std::array<int, kMaxDim>& counts) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("grid dimension out of range");
  Grid g;
  g.dim = dim;
  g.lower = lower;
  g.upper = upper;
  g.count = counts;
  std::ptrdiff_t s = 1;
  for (int a = 0; a < dim; ++a) {
    if (counts[a] < 5)
      throw ConfigError("axis " + std::to_string(a) +
                        ": need at least 5 nodes for the cubic derivative stencil");
    if (!(upper[a] > lower[a]))
      throw ConfigError("axis " + std::to_string(a) + ": degenerate bounds");
    g.dx[a] = (upper[a] - lower[a]) / (counts[a] - 1);
    g.stride[a] = s;
    s *= counts[a];
  }
  g.num_nodes = s;
  return g;
}

inline Grid build_grid_1d(double lo, double hi, int count) {
  return build_grid(1, {lo, 0, 0}, {hi, 0, 0}, {count, 1, 1});
}

inline Grid build_grid_2d(double lo0, double hi0, int n0, double lo1, double hi1, int n1) {
  return build_grid(2, {lo0, lo1, 0}, {hi0, hi1, 0}, {n0, n1, 1});
}

// Node values at one time level.
struct GridFunction {
  Grid grid;
  std::vector<double> values;
  double time = 0.0;

  GridFunction() = default;
  explicit GridFunction(const Grid& g, double t = 0.0)
      : grid(g), values(static_cast<size_t>(g.num_nodes), 0.0), time(t) {}

  double& operator[](std::ptrdiff_t i) { return values[static_cast<size_t>(i)]; }
  double operator[](std::ptrdiff_t i) const { return values[static_cast<size_t>(i)]; }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

template <typename Fn>
GridFunction sample_on_grid(const Grid& g, double t, Fn&& fn) {
  GridFunction u(g, t);
  for (std::ptrdiff_t i = 0; i < g.num_nodes; ++i) u[i] = fn(g.node(i));
  return u;
}

// True iff u is non-decreasing along the axis direction (sign=+1) or the
// reversed direction (sign=-1) on every grid line, within tolerance -1e-12.
inline bool check_monotone_direction(const GridFunction& u, int axis, int sign = +1) {
  const Grid& g = u.grid;
  const double tol = -1e-12;
  const std::ptrdiff_t s = g.stride[axis];
  const int n = g.count[axis];
  for (std::ptrdiff_t base = 0; base < g.num_nodes; ++base) {
    if (g.multi_index(base)[axis] != 0) continue;  // enumerate each line once
    for (int i = 0; i + 1 < n; ++i) {
      const double d = u[base + (i + 1) * s] - u[base + i * s];
      if (sign * d < tol) return false;
    }
  }
  return true;
}

}  // namespace slhjb
