#pragma once

#include "sgdlim/types.hpp"

namespace sgdlim {

/// Eigendecomposition of a symmetric matrix together with a rank cutoff.
/// Eigenvalues are ascending; eigenvalues with |lambda| <= cutoff are treated
/// as exact zeros by every downstream operation.
struct SpectralDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // columns orthonormal, matching eigenvalue order
  Index rank = 0;       // count of |lambda_i| > cutoff
  Scalar cutoff = 0.0;  // absolute threshold, rel_tol * max|lambda|

  Index dim() const { return eigenvalues.size(); }
  bool above_cutoff(Index i) const { return std::abs(eigenvalues[i]) > cutoff; }

  /// V diag(lambda) V^T.
  Matrix reconstruct() const;
};

constexpr Scalar kDefaultRankRelTol = 1e-8;

/// Decompose a symmetric matrix. The cutoff separating numerical zeros from
/// genuine eigenvalues is rel_tol * max|lambda|.
/// Throws SymmetryError if max-entry asymmetry exceeds 1e-10 * max(1, |H|_inf).
SpectralDecomposition spectral_decompose(const Matrix& H,
                                         Scalar rel_tol = kDefaultRankRelTol);

/// Reset the cutoff so that exactly `rank` top-|lambda| eigenvalues count as
/// nonzero. Used by callers that know the expected rank at points near (but
/// not exactly on) the minimizer manifold, where the default relative cutoff
/// would misclassify perturbed zero eigenvalues.
SpectralDecomposition with_forced_rank(SpectralDecomposition dec, Index rank);

/// Moore-Penrose pseudo-inverse; below-cutoff eigenvalues are exact zeros.
Matrix pseudo_inverse(const SpectralDecomposition& dec);

/// Orthogonal projection onto the kernel (below-cutoff eigenspace),
/// P = I - A A^+. Throws NotPSDError if some eigenvalue < -cutoff.
Matrix kernel_projection(const SpectralDecomposition& dec);

constexpr Scalar kDefaultLyapunovMembershipTol = 1e-8;

/// Whether Sigma lies in W_H = {S symmetric : H H^+ S = S = S H H^+}, i.e. is
/// supported on the above-cutoff eigenspace of H, within a relative tolerance.
bool in_lyapunov_domain(const SpectralDecomposition& dec, const Matrix& Sigma,
                        Scalar tol = kDefaultLyapunovMembershipTol);

/// Inverse of the Lyapunov operator L_H(X) = H X + X H on W_H: in H's
/// eigenbasis, X_ij = Sigma_ij / (lambda_i + lambda_j) over above-cutoff index
/// pairs, zero elsewhere. Throws DomainError if Sigma is not in W_H.
Matrix lyapunov_inverse(const SpectralDecomposition& dec, const Matrix& Sigma,
                        Scalar membership_tol = kDefaultLyapunovMembershipTol);

/// log of the pseudo-determinant: sum of ln(lambda_i) over above-cutoff
/// eigenvalues. Throws NotPSDError if an above-cutoff eigenvalue is <= 0.
Scalar pseudo_log_det(const SpectralDecomposition& dec);

/// Symmetric PSD square root, with eigenvalues clamped at zero below cutoff.
Matrix psd_sqrt(const SpectralDecomposition& dec);

}  // namespace sgdlim
