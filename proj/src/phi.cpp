#include "sgdlim/phi.hpp"

#include <cmath>

namespace sgdlim {

SpectralDecomposition manifold_hessian(const LossModel& loss, const Vector& x) {
  return with_forced_rank(spectral_decompose(loss.hessian(x)),
                          loss.manifold_rank());
}

namespace {

void require_on_manifold(const LossModel& loss, const Vector& x,
                         Scalar grad_tol, const char* who) {
  const ManifoldDiagnostics diag = on_manifold(loss, x, grad_tol);
  if (!diag.ok)
    throw NotOnManifoldError(std::string(who) + ": " + diag.message);
}

}  // namespace

Matrix dphi(const LossModel& loss, const Vector& x, Scalar grad_tol) {
  require_on_manifold(loss, x, grad_tol, "dphi");
  return kernel_projection(spectral_decompose(loss.hessian(x)));
}

NoiseSplit split_noise(const SpectralDecomposition& dec, const Matrix& Sigma) {
  NoiseSplit split;
  split.P = kernel_projection(dec);
  const Matrix Q = Matrix::Identity(dec.dim(), dec.dim()) - split.P;
  split.sigma_par = split.P * Sigma * split.P;
  split.sigma_perp = Q * Sigma * Q;
  split.sigma_cross = Q * Sigma * split.P;
  return split;
}

NoiseSplit split_noise(const LossModel& loss, const Vector& x,
                       const Matrix& Sigma, Scalar grad_tol) {
  require_on_manifold(loss, x, grad_tol, "split_noise");
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(Scalar(1), Sigma.cwiseAbs().maxCoeff()))
    throw SymmetryError("split_noise: covariance is not symmetric");
  return split_noise(spectral_decompose(loss.hessian(x)), Sigma);
}

Vector d2phi_contract(const LossModel& loss, const Vector& x,
                      const SpectralDecomposition& dec, const Matrix& Sigma) {
  const NoiseSplit split = split_noise(dec, Sigma);
  const Matrix pinv = pseudo_inverse(dec);
  const Scalar scale = std::max(Sigma.norm(), Scalar(1));

  Vector out = -pinv * loss.third_contraction(x, split.sigma_par);
  // a vanishing normal block is numerical junk from the projector sandwich;
  // its Lyapunov membership test is ill-posed, so drop the zero term instead
  if (split.sigma_perp.norm() > 1e-12 * scale)
    out.noalias() -=
        split.P * loss.third_contraction(
                      x, lyapunov_inverse(dec, split.sigma_perp,
                                          kSigmaPerpMembershipTol));
  const Matrix B = pinv * split.sigma_cross;
  out.noalias() -= 2.0 * (split.P * loss.third_contraction(
                                        x, 0.5 * (B + B.transpose())));
  return out;
}

Vector d2phi_contract(const LossModel& loss, const Vector& x,
                      const Matrix& Sigma, Scalar grad_tol) {
  require_on_manifold(loss, x, grad_tol, "d2phi_contract");
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(Scalar(1), Sigma.cwiseAbs().maxCoeff()))
    throw SymmetryError("d2phi_contract: covariance is not symmetric");
  return d2phi_contract(loss, x, manifold_hessian(loss, x), Sigma);
}

namespace {

FlowConfig oracle_flow_config(Scalar h) {
  FlowConfig cfg;
  cfg.grad_stop = std::min(1e-3 * h * h * h, Scalar(1e-12));
  return cfg;
}

}  // namespace

Matrix dphi_fd(const LossModel& loss, const Vector& x, Scalar h) {
  if (h <= 0) throw DomainError("dphi_fd: step must be positive");
  const Index d = loss.dim();
  const FlowConfig cfg = oracle_flow_config(h);
  Matrix J(d, d);
  Vector xp = x, xm = x;
  for (Index j = 0; j < d; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    J.col(j) = (phi_limit(loss, xp, cfg) - phi_limit(loss, xm, cfg)) / (2 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return J;
}

Vector d2phi_fd(const LossModel& loss, const Vector& x, const Matrix& Sigma,
                Scalar h) {
  if (h <= 0) throw DomainError("d2phi_fd: step must be positive");
  const FlowConfig cfg = oracle_flow_config(h / 2);
  const SpectralDecomposition dec =
      spectral_decompose(Scalar(0.5) * (Sigma + Sigma.transpose()));
  const Scalar scale = dec.eigenvalues.cwiseAbs().maxCoeff();
  const Vector phi0 = phi_limit(loss, x, cfg);

  Vector out = Vector::Zero(loss.dim());
  for (Index k = 0; k < dec.dim(); ++k) {
    const Scalar mu = dec.eigenvalues[k];
    if (std::abs(mu) <= 1e-12 * scale) continue;
    const Vector q = dec.eigenvectors.col(k);
    auto second_diff = [&](Scalar step) -> Vector {
      const Vector fp = phi_limit(loss, x + step * q, cfg);
      const Vector fm = phi_limit(loss, x - step * q, cfg);
      return (fp - 2 * phi0 + fm) / (step * step);
    };
    const Vector coarse = second_diff(h);
    const Vector fine = second_diff(h / 2);
    out.noalias() += mu * (4.0 * fine - coarse) / 3.0;  // Richardson O(h^4)
  }
  return out;
}

Vector grad_trace_hessian(const LossModel& loss, const Vector& x) {
  return loss.third_contraction(x, Matrix::Identity(loss.dim(), loss.dim()));
}

}  // namespace sgdlim
