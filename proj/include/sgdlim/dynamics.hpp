#pragma once

#include "sgdlim/noise.hpp"
#include "sgdlim/phi.hpp"

#include <cstdint>

namespace sgdlim {

constexpr Scalar kDivergenceThreshold = 1e8;

struct SgdConfig {
  Scalar eta = 0.01;
  Index steps = 1000;
  std::uint64_t seed = 0;
  Index record_stride = 1;
};

struct SdeConfig {
  Scalar dt = 1e-3;
  Scalar T = 1.0;
  Index retraction_every = 20;
  std::uint64_t seed = 0;
  Index record_stride = 1;
};

/// Discrete SGD x_{k+1} = x_k - eta (grad L(x_k) + noise.sample(x_k)).
/// Trajectory timestamps use manifold time t = k eta^2. Throws
/// DivergenceError when |x| exceeds 1e8.
Trajectory sgd_run(const LossModel& loss, const NoiseModel& noise,
                   const SgdConfig& cfg, const Vector& x0);

/// Drift of the limiting SDE at a manifold point,
///   -1/2 H^+ T[sigma_par]
///   -1/2 P (2 T[sym(H^+ sigma_cross)] + T[Linv(sigma_perp)]),
/// which equals 1/2 d2phi_contract(x, Sigma).
Vector limiting_drift(const LossModel& loss, const NoiseModel& noise,
                      const Vector& x, Scalar grad_tol = kOnManifoldGradTol);

/// Symmetric PSD square root of sigma_par, the tangent diffusion factor.
Matrix limiting_diffusion_factor(const LossModel& loss, const NoiseModel& noise,
                                 const Vector& x,
                                 Scalar grad_tol = kOnManifoldGradTol);

/// Euler-Maruyama integration of the limiting SDE on the manifold with
/// periodic Phi-retraction. Reports the number of on-manifold check failures
/// observed at retraction points through `manifold_violations` if non-null.
Trajectory simulate_limit_sde(const LossModel& loss, const NoiseModel& noise,
                              const Vector& x0, const SdeConfig& cfg,
                              Index* manifold_violations = nullptr);

/// Deterministic label-noise limiting flow
///   dY/dt = -1/4 dPhi(Y) grad tr[c Hessian(Y)],
/// integrated with RK4 and periodic Phi-retraction; stops when the projected
/// gradient-of-trace norm falls below stop_grad_tol. tr(Hessian) is
/// non-increasing along the output.
Trajectory label_noise_flow(const LossModel& loss, Scalar c, const Vector& x0,
                            Scalar T, Scalar dt, Index retraction_every = 20,
                            Scalar stop_grad_tol = 1e-8);

/// Drift and diffusion of the isotropic-noise limiting SDE at x:
///   drift = -1/2 H^+ T[P] - 1/2 P T[H^+],  diffusion = P,
/// whose normal part is -1/2 P grad ln|Hessian|_+ .
std::pair<Vector, Matrix> isotropic_flow_step(const LossModel& loss,
                                              const Vector& x,
                                              Scalar grad_tol = kOnManifoldGradTol);

/// Exact limiting solution of the motor SDE: rotate the first two coordinates
/// by angle t (D-2)/2, zero elsewhere.
Vector motor_analytic(const Vector& x0, Scalar t);

}  // namespace sgdlim
