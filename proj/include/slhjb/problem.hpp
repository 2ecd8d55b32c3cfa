// Problem definitions: coefficient evaluators over (t, x, control),
// control sets with inf/sup semantics, and boundary specifications.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slhjb/common.hpp"
#include "slhjb/grid.hpp"

namespace slhjb {

// One control point. `alpha` ranges over the inf-set A, `beta` over the
// sup-set B. Coordinates beyond the used dimension are zero.
struct Control {
  Vec alpha = zero_vec();
  Vec beta = zero_vec();
};

// Finite control set: the scheme takes inf over alphas of sup over betas.
// The beta list is a singleton for convex (pure control) problems.
struct ControlSet {
  std::vector<Vec> alphas{zero_vec()};
  std::vector<Vec> betas{zero_vec()};

  size_t num_alphas() const { return alphas.size(); }
  size_t num_betas() const { return betas.size(); }
  bool beta_singleton() const { return betas.size() == 1; }

  Control at(size_t ia, size_t ib) const { return Control{alphas[ia], betas[ib]}; }

  void validate() const {
    if (alphas.empty() || betas.empty()) throw ConfigError("control set must be non-empty");
  }
};

enum class FaceCondition {
  DirichletFromFunction,  // boundary values from a supplied function of (t, x)
  NeumannHomogeneous,     // exact extension: clamp the normal coordinate
  Degenerate,             // no regular points; must never be queried
};

enum class OverstepPolicy {
  Error,            // stencil point outside the box is a hard error
  ClampToBoundary,  // project the point onto the box, then interpolate
  UseExtension,     // evaluate the Dirichlet function at the exterior point
};

struct BoundarySpec {
  // condition[axis][side], side 0 = lower face, 1 = upper face
  std::array<std::array<FaceCondition, 2>, kMaxDim> condition{};
  OverstepPolicy overstep = OverstepPolicy::Error;
  // boundary value function for Dirichlet faces
  std::function<double(double t, const Vec& x)> dirichlet;

  static BoundarySpec all_dirichlet(std::function<double(double, const Vec&)> fn,
                                    OverstepPolicy policy = OverstepPolicy::UseExtension) {
    BoundarySpec b;
    for (auto& ax : b.condition) ax = {FaceCondition::DirichletFromFunction, FaceCondition::DirichletFromFunction};
    b.overstep = policy;
    b.dirichlet = std::move(fn);
    return b;
  }

  static BoundarySpec all_neumann() {
    BoundarySpec b;
    for (auto& ax : b.condition) ax = {FaceCondition::NeumannHomogeneous, FaceCondition::NeumannHomogeneous};
    return b;
  }
};

// How the node equation treats the time derivative. Standard problems read
//   u_t = inf_a sup_b { L u + c u + f }.
// TimeWeighted problems carry a control-dependent factor on u_t,
//   inf_a { w(a) u_t - L u - c u - f } = 0,
// and require an implicit (theta = 1) discretization.
enum class HamiltonianForm { Standard, TimeWeighted };

// Full problem description. a = sigma sigma^T / 2 is never stored; it is
// always formed from sigma.
struct Problem {
  int dim = 0;        // N
  int sigma_cols = 0; // P (0 means no diffusion term)

  // coefficient evaluators; null scalar evaluators mean identically zero
  std::function<void(double t, const Vec& x, const Control& c, Mat& out)> sigma;
  std::function<void(double t, const Vec& x, const Control& c, Vec& out)> b;
  std::function<double(double t, const Vec& x, const Control& c)> c;
  std::function<double(double t, const Vec& x, const Control& c)> f;
  std::function<double(const Vec& x)> g;

  ControlSet control_set;
  BoundarySpec boundary;
  std::optional<std::function<double(double t, const Vec& x)>> exact;
  double time_horizon = 1.0;

  HamiltonianForm form = HamiltonianForm::Standard;
  // TimeWeighted only: factor on the discrete time derivative
  std::function<double(const Control& c)> time_weight;

  // Evaluation hints; they never change results, only the loop structure.
  bool sigma_b_x_independent = false;   // sigma and b depend only on (t, control)
  bool sigma_control_independent = false;  // sigma depends only on (t, x)
  bool f_control_independent = false;   // f depends only on (t, x)

  double eval_c(double t, const Vec& x, const Control& ctrl) const {
    return c ? c(t, x, ctrl) : 0.0;
  }
  double eval_f(double t, const Vec& x, const Control& ctrl) const {
    return f ? f(t, x, ctrl) : 0.0;
  }
  double eval_w(const Control& ctrl) const {
    return form == HamiltonianForm::TimeWeighted ? time_weight(ctrl) : 1.0;
  }

  void validate() const {
    if (dim < 1 || dim > kMaxDim) throw ConfigError("problem dimension out of range");
    control_set.validate();
    if (!g) throw ConfigError("initial data g is required");
    for (int a = 0; a < dim; ++a)
      for (int side = 0; side < 2; ++side)
        if (boundary.condition[a][side] == FaceCondition::DirichletFromFunction && !boundary.dirichlet)
          throw ConfigError("Dirichlet face declared without a boundary value function");
    if (form == HamiltonianForm::TimeWeighted) {
      if (!time_weight) throw ConfigError("TimeWeighted form requires a time_weight evaluator");
      if (!control_set.beta_singleton())
        throw ConfigError("TimeWeighted form supports a singleton beta set only");
    }
  }
};

}  // namespace slhjb
