#pragma once

#include "sgdlim/linalg.hpp"
#include "sgdlim/loss.hpp"

#include <vector>

namespace sgdlim {

/// Time-stamped path of states with per-point loss and gradient norm.
struct Trajectory {
  std::vector<Scalar> times;
  std::vector<Vector> states;
  std::vector<Scalar> losses;
  std::vector<Scalar> grad_norms;

  size_t size() const { return times.size(); }
  const Vector& back_state() const { return states.back(); }
  void push(Scalar t, const Vector& x, Scalar loss, Scalar grad_norm);
};

enum class Integrator { kRk4Fixed, kRk45Adaptive };

struct FlowConfig {
  Integrator integrator = Integrator::kRk45Adaptive;
  Scalar dt = 1e-3;        // fixed step for rk4
  Scalar abs_tol = 1e-10;  // rk45 error control
  Scalar rel_tol = 1e-8;
  Scalar grad_stop = 1e-10;  // terminate when |grad L| falls below this
  Scalar t_max = 1e6;
  Index record_stride = 1;
  Index max_steps = 20'000'000;
};

/// Gradient flow did not reach the gradient-norm stopping criterion before
/// t_max; carries the partial trajectory.
struct NonConvergedError : NumericalError {
  NonConvergedError(const std::string& msg, Trajectory partial_)
      : NumericalError(msg), partial(std::move(partial_)) {}
  Trajectory partial;
};

/// Integrate dx/dt = -grad L(x) until |grad L| <= grad_stop. Loss is
/// non-increasing along the output; a step raising it by more than 1e-8 is
/// rejected and halved. Throws NonConvergedError when t_max or max_steps is
/// reached first.
Trajectory flow(const LossModel& loss, const Vector& x0, const FlowConfig& cfg);

/// Phi(x0): the gradient-flow limit, i.e. the final state of flow().
Vector phi_limit(const LossModel& loss, const Vector& x0,
                 const FlowConfig& cfg = {});

struct ManifoldDiagnostics {
  bool ok = false;
  Scalar grad_norm = 0;
  Index numerical_rank = 0;
  Index expected_rank = 0;
  Scalar min_positive_eigenvalue = 0;
  std::string message;
};

/// Membership test for the minimizer manifold: |grad L(x)| <= grad_tol,
/// numerical rank of the Hessian equals loss.manifold_rank(), and the
/// smallest above-cutoff eigenvalue is positive.
ManifoldDiagnostics on_manifold(const LossModel& loss, const Vector& x,
                                Scalar grad_tol = 1e-8,
                                Scalar rank_rel_tol = kDefaultRankRelTol);

}  // namespace sgdlim
