// Small fixed-capacity linear-algebra types, error types, and a
// deterministic parallel_for used throughout the library.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace slhjb {

// Hard caps on the spatial dimension and the number of diffusion columns.
// All benchmark problems are 2D with at most 3 columns; the caps keep the
// hot-path types allocation free.
inline constexpr int kMaxDim = 3;
inline constexpr int kMaxCols = 4;

// Spatial point / vector with inline storage. The active dimension is
// carried by the Grid; Vec itself is a plain array.
using Vec = std::array<double, kMaxDim>;

inline Vec zero_vec() { return {0.0, 0.0, 0.0}; }

// N x P matrix (sigma) with inline storage, column-major by column index.
struct Mat {
  std::array<double, kMaxDim * kMaxCols> a{};
  int rows = 0;
  int cols = 0;

  double& operator()(int r, int c) { return a[static_cast<size_t>(c) * kMaxDim + r]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(c) * kMaxDim + r]; }

  // column c as a Vec (rows beyond `rows` are zero)
  Vec col(int c) const {
    Vec v = zero_vec();
    for (int r = 0; r < rows; ++r) v[r] = (*this)(r, c);
    return v;
  }

  void set_zero(int r, int c) {
    rows = r;
    cols = c;
    a.fill(0.0);
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) s += (*this)(r, c) * (*this)(r, c);
    return std::sqrt(s);
  }
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct UnsupportedError : std::runtime_error {
  explicit UnsupportedError(const std::string& what) : std::runtime_error(what) {}
};

// A stencil point left the domain through a face that does not allow it.
struct OverstepError : std::runtime_error {
  Vec point;
  int axis;
  int side;  // 0 = lower face, 1 = upper face
  OverstepError(const Vec& p, int ax, int sd, const std::string& what)
      : std::runtime_error(what), point(p), axis(ax), side(sd) {}
};

struct SolveError : std::runtime_error {
  double residual;
  SolveError(double res, const std::string& what) : std::runtime_error(what), residual(res) {}
};

// Worker count: hardware concurrency capped by SLHJB_THREADS.
inline int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("SLHJB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

// Parallel loop over [0, n). Chunking is static and the body writes only
// to its own indices, so results do not depend on the worker count.
template <typename Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
  const int workers = worker_count();
  if (workers <= 1 || n < 2048) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  const std::ptrdiff_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::ptrdiff_t lo = w * chunk;
    const std::ptrdiff_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::ptrdiff_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace slhjb
