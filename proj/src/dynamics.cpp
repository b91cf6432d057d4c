#include "sgdlim/dynamics.hpp"

#include "sgdlim/rng.hpp"

#include <cmath>
#include <numbers>

namespace sgdlim {

Trajectory sgd_run(const LossModel& loss, const NoiseModel& noise,
                   const SgdConfig& cfg, const Vector& x0) {
  if (!x0.allFinite()) throw DomainError("sgd_run: non-finite initial state");
  if (cfg.eta <= 0 || cfg.steps < 1)
    throw DomainError("sgd_run: need eta > 0 and steps >= 1");
  std::mt19937_64 rng = seeded_rng(cfg.seed);
  Trajectory traj;
  Vector x = x0;
  const Scalar t_scale = cfg.eta * cfg.eta;
  traj.push(0.0, x, loss.value(x), loss.gradient(x).norm());
  for (Index k = 0; k < cfg.steps; ++k) {
    const Vector grad = loss.gradient(x);
    x -= cfg.eta * (grad + noise.sample(x, rng));
    if (!x.allFinite() || x.norm() > kDivergenceThreshold)
      throw DivergenceError("sgd_run: iterate diverged at step " +
                            std::to_string(k + 1));
    if ((k + 1) % cfg.record_stride == 0 || k + 1 == cfg.steps)
      traj.push(static_cast<Scalar>(k + 1) * t_scale, x, loss.value(x),
                loss.gradient(x).norm());
  }
  return traj;
}

namespace {

// Drift of the limiting SDE against a precomputed manifold Hessian
// decomposition; equals 1/2 d2phi_contract by Lemma-level algebra but is
// assembled in the Tangent-Compensation / Mixed / Normal grouping.
Vector drift_from_decomposition(const LossModel& loss, const Vector& x,
                                const SpectralDecomposition& dec,
                                const Matrix& Sigma) {
  const NoiseSplit split = split_noise(dec, Sigma);
  const Matrix pinv = pseudo_inverse(dec);
  const Scalar scale = std::max(Sigma.norm(), Scalar(1));

  Vector drift = -0.5 * (pinv * loss.third_contraction(x, split.sigma_par));
  const Matrix B = pinv * split.sigma_cross;
  Vector bracket =
      2.0 * loss.third_contraction(x, 0.5 * (B + B.transpose()));
  if (split.sigma_perp.norm() > 1e-12 * scale)
    bracket.noalias() += loss.third_contraction(
        x, lyapunov_inverse(dec, split.sigma_perp, kSigmaPerpMembershipTol));
  drift.noalias() -= 0.5 * (split.P * bracket);
  return drift;
}

void require_on_manifold(const LossModel& loss, const Vector& x,
                         Scalar grad_tol, const char* who) {
  const ManifoldDiagnostics diag = on_manifold(loss, x, grad_tol);
  if (!diag.ok)
    throw NotOnManifoldError(std::string(who) + ": " + diag.message);
}

// PSD square root of sigma_par. A tangent block that is numerically
// negligible against the full covariance is projector-sandwich junk (e.g.
// label noise, where sigma_par vanishes identically on the manifold) and
// maps to an exact zero instead of sqrt-amplified noise.
Matrix tangent_diffusion_factor(const NoiseSplit& split, Scalar sigma_scale) {
  const Index d = split.sigma_par.rows();
  if (split.sigma_par.norm() <= 1e-12 * std::max(sigma_scale, Scalar(1)))
    return Matrix::Zero(d, d);
  SpectralDecomposition par = spectral_decompose(
      Scalar(0.5) * (split.sigma_par + split.sigma_par.transpose()));
  for (Index i = 0; i < d; ++i)
    if (par.eigenvalues[i] < 0) par.eigenvalues[i] = 0;
  return psd_sqrt(par);
}

}  // namespace

Vector limiting_drift(const LossModel& loss, const NoiseModel& noise,
                      const Vector& x, Scalar grad_tol) {
  require_on_manifold(loss, x, grad_tol, "limiting_drift");
  return drift_from_decomposition(loss, x, manifold_hessian(loss, x),
                                  noise.covariance(x));
}

Matrix limiting_diffusion_factor(const LossModel& loss, const NoiseModel& noise,
                                 const Vector& x, Scalar grad_tol) {
  require_on_manifold(loss, x, grad_tol, "limiting_diffusion_factor");
  const SpectralDecomposition dec = manifold_hessian(loss, x);
  const Matrix Sigma = noise.covariance(x);
  return tangent_diffusion_factor(split_noise(dec, Sigma), Sigma.norm());
}

Trajectory simulate_limit_sde(const LossModel& loss, const NoiseModel& noise,
                              const Vector& x0, const SdeConfig& cfg,
                              Index* manifold_violations) {
  if (cfg.dt <= 0 || cfg.retraction_every < 1)
    throw DomainError("simulate_limit_sde: need dt > 0, retraction_every >= 1");
  require_on_manifold(loss, x0, kOnManifoldGradTol, "simulate_limit_sde");

  std::mt19937_64 rng = seeded_rng(cfg.seed);
  const Scalar sqrt_dt = std::sqrt(cfg.dt);
  const Index n_steps = static_cast<Index>(std::llround(cfg.T / cfg.dt));
  Index violations = 0;

  FlowConfig retraction_cfg;
  retraction_cfg.grad_stop = 1e-11;

  Trajectory traj;
  Vector y = x0;
  traj.push(0.0, y, loss.value(y), loss.gradient(y).norm());
  for (Index k = 0; k < n_steps; ++k) {
    const SpectralDecomposition dec = manifold_hessian(loss, y);
    const Matrix Sigma = noise.covariance(y);
    const Vector drift = drift_from_decomposition(loss, y, dec, Sigma);
    const Matrix factor =
        tangent_diffusion_factor(split_noise(dec, Sigma), Sigma.norm());

    y += cfg.dt * drift + sqrt_dt * (factor * standard_normal(y.size(), rng));
    if (!y.allFinite() || y.norm() > kDivergenceThreshold)
      throw DivergenceError("simulate_limit_sde: state diverged");

    if ((k + 1) % cfg.retraction_every == 0 || k + 1 == n_steps) {
      y = phi_limit(loss, y, retraction_cfg);
      if (!on_manifold(loss, y).ok) ++violations;
    }
    if ((k + 1) % cfg.record_stride == 0 || k + 1 == n_steps)
      traj.push(static_cast<Scalar>(k + 1) * cfg.dt, y, loss.value(y),
                loss.gradient(y).norm());
  }
  if (manifold_violations) *manifold_violations = violations;
  require_on_manifold(loss, traj.back_state(), kOnManifoldGradTol,
                      "simulate_limit_sde (final state)");
  return traj;
}

Trajectory label_noise_flow(const LossModel& loss, Scalar c, const Vector& x0,
                            Scalar T, Scalar dt, Index retraction_every,
                            Scalar stop_grad_tol) {
  if (dt <= 0 || T <= 0)
    throw DomainError("label_noise_flow: need dt > 0 and T > 0");
  require_on_manifold(loss, x0, kOnManifoldGradTol, "label_noise_flow");

  // Field -1/4 dPhi grad tr[c Hessian]; the projector is pinned to the
  // expected manifold rank so RK4 stage points slightly off the manifold
  // remain well posed.
  auto field = [&](const Vector& y) -> Vector {
    const Matrix P = kernel_projection(manifold_hessian(loss, y));
    return -0.25 * c * (P * grad_trace_hessian(loss, y));
  };

  FlowConfig retraction_cfg;
  retraction_cfg.grad_stop = 1e-11;

  Trajectory traj;
  Vector y = x0;
  auto trace_hess = [&](const Vector& v) { return loss.hessian(v).trace(); };
  traj.push(0.0, y, trace_hess(y), field(y).norm() * 4.0 / std::max(c, 1e-300));
  const Index n_steps = static_cast<Index>(std::llround(T / dt));
  for (Index k = 0; k < n_steps; ++k) {
    const Vector k1 = field(y);
    if (k1.norm() <= 0.25 * c * stop_grad_tol) break;
    const Vector k2 = field(y + 0.5 * dt * k1);
    const Vector k3 = field(y + 0.5 * dt * k2);
    const Vector k4 = field(y + dt * k3);
    y += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!y.allFinite() || y.norm() > kDivergenceThreshold)
      throw DivergenceError("label_noise_flow: state diverged");
    if ((k + 1) % retraction_every == 0 || k + 1 == n_steps)
      y = phi_limit(loss, y, retraction_cfg);
    traj.push(static_cast<Scalar>(k + 1) * dt, y, trace_hess(y),
              field(y).norm() * 4.0 / std::max(c, 1e-300));
  }
  return traj;
}

std::pair<Vector, Matrix> isotropic_flow_step(const LossModel& loss,
                                              const Vector& x,
                                              Scalar grad_tol) {
  require_on_manifold(loss, x, grad_tol, "isotropic_flow_step");
  const SpectralDecomposition dec = manifold_hessian(loss, x);
  const Matrix P = kernel_projection(dec);
  const Matrix pinv = pseudo_inverse(dec);
  Vector drift = -0.5 * (pinv * loss.third_contraction(x, P));
  drift.noalias() -= 0.5 * (P * loss.third_contraction(x, pinv));
  return {std::move(drift), P};
}

Vector motor_analytic(const Vector& x0, Scalar t) {
  const Scalar k = static_cast<Scalar>(x0.size() - 2);
  Vector y = Vector::Zero(x0.size());
  y.head<2>() = rotation2d(t * k / 2.0) * x0.head<2>();
  return y;
}

}  // namespace sgdlim
