#pragma once

#include "sgdlim/flow.hpp"
#include "sgdlim/linalg.hpp"

namespace sgdlim {

/// Decomposition of a noise covariance at a manifold point into tangent,
/// normal and cross blocks: Sigma = sigma_par + sigma_perp + cross + cross^T.
struct NoiseSplit {
  Matrix P;            // tangent projector dPhi(x)
  Matrix sigma_par;    // P Sigma P
  Matrix sigma_perp;   // (I-P) Sigma (I-P)
  Matrix sigma_cross;  // (I-P) Sigma P
};

/// Spectral decomposition of the Hessian at a point assumed on the manifold,
/// with the rank pinned to loss.manifold_rank(). This keeps the tangent /
/// normal split well defined for points that have drifted slightly off the
/// manifold (e.g. between SDE retractions), where a relative eigenvalue
/// cutoff would misclassify the perturbed kernel.
SpectralDecomposition manifold_hessian(const LossModel& loss, const Vector& x);

constexpr Scalar kOnManifoldGradTol = 1e-8;

/// dPhi(x): orthogonal projection onto the tangent space, the kernel
/// projector of the Hessian. Throws NotOnManifoldError off the manifold.
Matrix dphi(const LossModel& loss, const Vector& x,
            Scalar grad_tol = kOnManifoldGradTol);

/// Split a symmetric covariance at x into tangent/normal/cross parts.
NoiseSplit split_noise(const LossModel& loss, const Vector& x,
                       const Matrix& Sigma,
                       Scalar grad_tol = kOnManifoldGradTol);

/// Same split against a precomputed Hessian decomposition (no manifold gate).
NoiseSplit split_noise(const SpectralDecomposition& dec, const Matrix& Sigma);

/// Closed-form second derivative contraction
///   d2Phi[Sigma] = -(H)^+ T[sigma_par] - P T[Linv(sigma_perp)]
///                  - 2 P T[sym(H^+ sigma_cross)]
/// with T the third-derivative contraction of the loss and Linv the Lyapunov
/// inverse. Throws NotOnManifoldError / DomainError per the preconditions.
Vector d2phi_contract(const LossModel& loss, const Vector& x,
                      const Matrix& Sigma,
                      Scalar grad_tol = kOnManifoldGradTol);

/// Ungated variant used by the SDE integrators; `dec` must be the
/// manifold_hessian decomposition at x.
Vector d2phi_contract(const LossModel& loss, const Vector& x,
                      const SpectralDecomposition& dec, const Matrix& Sigma);

/// W_H membership tolerance used for sigma_perp, looser than the linalg
/// default because sigma_perp is itself built from a numerical projector.
constexpr Scalar kSigmaPerpMembershipTol = 1e-6;

/// Finite-difference Jacobian of Phi, J_{ij} = d_j Phi_i, central differences
/// of phi_limit with grad_stop <= h^3.
Matrix dphi_fd(const LossModel& loss, const Vector& x, Scalar h = 1e-3);

/// Finite-difference d2Phi[Sigma]: second differences of Phi along the
/// eigenvectors of Sigma with Richardson extrapolation over steps h and h/2.
Vector d2phi_fd(const LossModel& loss, const Vector& x, const Matrix& Sigma,
                Scalar h = 1e-3);

/// Gradient of tr(Hessian): third_contraction(x, I).
Vector grad_trace_hessian(const LossModel& loss, const Vector& x);

}  // namespace sgdlim
