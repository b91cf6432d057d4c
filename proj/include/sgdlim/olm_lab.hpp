#pragma once

#include "sgdlim/dynamics.hpp"
#include "sgdlim/olm_problem.hpp"

namespace sgdlim {

/// Implicit regularizer R(x) = sum_j s_j (u_j^2 + v_j^2), with
/// s_j = (4/n) sum_i z_ij^2. Equals tr(Hessian) everywhere for the OLM loss.
Scalar regularizer(const OlmProblem& p, const Vector& x);

/// grad R.
Vector regularizer_gradient(const OlmProblem& p, const Vector& x);

/// Minimum-norm Lagrangian gradient F(x) = (I - G G^+) grad R(x), where
/// G collects the sample output gradients; orthogonal to every grad f_i.
/// Continuous extension of dPhi * grad R off the manifold.
Vector lagrangian_F(const OlmProblem& p, const Vector& x);

/// Point of the constraint manifold together with its per-coordinate products
/// and decay rates.
struct FlowState {
  Vector x;
  Vector uv_products;  // u_j v_j
  Vector decay_rates;  // s_j
};

FlowState make_flow_state(const OlmProblem& p, const Vector& x,
                          Scalar feas_tol = 1e-8);

struct RiemannianFlowOptions {
  Scalar stop_F_tol = 1e-9;    // stop when |F| falls below this
  Scalar feas_trigger = 1e-8;  // re-project when residual > trigger * |y|
  Index record_stride = 1;
};

/// RK4 integration of dx/dt = -1/4 F(x) from a manifold point, with one
/// Gauss-Newton constraint re-projection whenever feasibility drifts past the
/// trigger. R is non-increasing along the output; the trajectory's loss
/// column carries R and the gradient column carries |F|.
Trajectory riemannian_flow(const OlmProblem& p, const Vector& x0, Scalar T,
                           Scalar dt, const RiemannianFlowOptions& opts = {});

/// Horizon (3 / min_j s_j) * ln(max_j |u_j v_j| / target) from the analytic
/// decay of the products, and a stable RK4 step for the F-field.
Scalar default_flow_horizon(const OlmProblem& p, const Vector& x0,
                            Scalar target_uv = 1e-9);
Scalar default_flow_step(const OlmProblem& p);

struct ConvexOracleResult {
  Vector w_hat;
  Scalar objective = 0;
  bool certificate_ok = false;
  Scalar certificate_margin = 0;  // min slack of the off-support inequalities
  Index iterations = 0;
};

/// Weighted-l1 program: minimize sum_j a_j |w_j| subject to Z w = y, with
/// a_j = s_j. Projected subgradient descent on the affine feasible set with
/// decaying steps, polished by support identification plus least squares;
/// afterwards a dual certificate (least-squares multiplier fit + inequality
/// check) validates optimality. Certificate failure is reported, not thrown.
ConvexOracleResult convex_oracle(const OlmProblem& p, Index max_iter = 4000,
                                 Scalar tol = 1e-10);

enum class RecoveryMode { kFlow, kSgd };

std::string to_string(RecoveryMode mode);

struct RecoveryConfig {
  RecoveryMode mode = RecoveryMode::kFlow;
  Scalar eps = 1e-3;        // oracle/groundtruth agreement tolerance
  std::uint64_t seed = 0;   // initialization randomness
  Scalar eta = 0.01;        // sgd mode learning rate
  Scalar delta = 1.0;       // sgd mode label noise magnitude
  Scalar T = -1;            // manifold-time horizon; <= 0 selects the default
  Scalar dt = -1;           // flow step; <= 0 selects the default
};

struct RecoveryReport {
  Vector x_final;
  Vector w_final;
  Scalar linf_error = 0;       // |w_final - w_star|_inf
  Scalar reg_final = 0;        // R(x_final)
  Scalar reg_groundtruth = 0;  // R(canonical_param(w_star))
  bool oracle_agreement = false;
  bool dual_certificate_ok = false;
  Scalar oracle_linf_gap = 0;  // |w_final - w_oracle|_inf
  Scalar wallclock_seconds = 0;
  RecoveryMode mode = RecoveryMode::kFlow;
};

/// Run the recovery experiment: random initialization with every coordinate
/// magnitude in [0.5, 1.5], projection onto the manifold, then either the
/// Riemannian flow or label-noise SGD for floor(T / eta^2) steps; compares
/// the endpoint against the convex oracle and the groundtruth.
RecoveryReport run_recovery(const OlmProblem& p, const RecoveryConfig& cfg);

/// Structured text form of a report (JSON).
std::string report_to_json(const RecoveryReport& report);

struct KernelBaselineResult {
  Scalar mean_loss = 0;
  std::vector<Scalar> trial_losses;
};

/// Expected test loss of the linearized-model GD limit: the effective
/// predictor lies in the row span of Z, so each trial with a groundtruth
/// drawn uniformly from the sphere of radius |w_star| contributes
/// |(I - P_Z) w|^2. Requires n <= d.
KernelBaselineResult gd_kernel_baseline(const OlmProblem& p, Index trials,
                                        std::uint64_t seed);

}  // namespace sgdlim
