#include "sgdlim/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

namespace sgdlim {

Matrix SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

SpectralDecomposition spectral_decompose(const Matrix& H, Scalar rel_tol) {
  if (H.rows() != H.cols())
    throw DimensionError("spectral_decompose: matrix is not square");
  const Scalar scale = H.cwiseAbs().maxCoeff();
  const Scalar asym = (H - H.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(Scalar(1), scale))
    throw SymmetryError("spectral_decompose: input asymmetry " +
                        std::to_string(asym) + " exceeds tolerance");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(
      Scalar(0.5) * (H + H.transpose()));
  if (solver.info() != Eigen::Success)
    throw NumericalError("spectral_decompose: eigensolver failed");

  SpectralDecomposition dec;
  dec.eigenvalues = solver.eigenvalues();
  dec.eigenvectors = solver.eigenvectors();
  const Scalar lam_max = dec.eigenvalues.cwiseAbs().maxCoeff();
  dec.cutoff = rel_tol * lam_max;
  dec.rank = 0;
  for (Index i = 0; i < dec.dim(); ++i)
    if (dec.above_cutoff(i)) ++dec.rank;
  return dec;
}

SpectralDecomposition with_forced_rank(SpectralDecomposition dec, Index rank) {
  const Index d = dec.dim();
  if (rank < 0 || rank > d)
    throw DimensionError("with_forced_rank: rank out of range");
  // Eigenvalues are ascending but the rank is by |lambda|; sort on magnitude.
  std::vector<Scalar> mags(static_cast<size_t>(d));
  for (Index i = 0; i < d; ++i) mags[static_cast<size_t>(i)] = std::abs(dec.eigenvalues[i]);
  std::sort(mags.begin(), mags.end());
  const Scalar lo = rank == d ? Scalar(0) : mags[static_cast<size_t>(d - rank - 1)];
  const Scalar hi = rank == 0 ? mags.back() + Scalar(1)
                              : mags[static_cast<size_t>(d - rank)];
  dec.cutoff = Scalar(0.5) * (lo + hi);
  dec.rank = 0;
  for (Index i = 0; i < d; ++i)
    if (dec.above_cutoff(i)) ++dec.rank;
  if (dec.rank != rank)
    throw NumericalError(
        "with_forced_rank: eigenvalue ties prevent separating rank " +
        std::to_string(rank));
  return dec;
}

Matrix pseudo_inverse(const SpectralDecomposition& dec) {
  Vector inv = Vector::Zero(dec.dim());
  for (Index i = 0; i < dec.dim(); ++i)
    if (dec.above_cutoff(i)) inv[i] = Scalar(1) / dec.eigenvalues[i];
  return dec.eigenvectors * inv.asDiagonal() * dec.eigenvectors.transpose();
}

Matrix kernel_projection(const SpectralDecomposition& dec) {
  const Index d = dec.dim();
  for (Index i = 0; i < d; ++i)
    if (dec.eigenvalues[i] < -dec.cutoff)
      throw NotPSDError("kernel_projection: eigenvalue " +
                        std::to_string(dec.eigenvalues[i]) +
                        " below -cutoff; input is not PSD");
  Matrix P = Matrix::Identity(d, d);
  for (Index i = 0; i < d; ++i)
    if (dec.above_cutoff(i))
      P.noalias() -= dec.eigenvectors.col(i) * dec.eigenvectors.col(i).transpose();
  return P;
}

bool in_lyapunov_domain(const SpectralDecomposition& dec, const Matrix& Sigma,
                        Scalar tol) {
  if (Sigma.rows() != dec.dim() || Sigma.cols() != dec.dim()) return false;
  const Scalar scale = std::max(Sigma.norm(), Scalar(1e-300));
  if ((Sigma - Sigma.transpose()).norm() > tol * scale) return false;
  // H H^+ = V_r V_r^T with V_r the above-cutoff eigenvectors.
  Matrix range_proj = Matrix::Zero(dec.dim(), dec.dim());
  for (Index i = 0; i < dec.dim(); ++i)
    if (dec.above_cutoff(i))
      range_proj.noalias() +=
          dec.eigenvectors.col(i) * dec.eigenvectors.col(i).transpose();
  return (range_proj * Sigma - Sigma).norm() <= tol * scale &&
         (Sigma * range_proj - Sigma).norm() <= tol * scale;
}

Matrix lyapunov_inverse(const SpectralDecomposition& dec, const Matrix& Sigma,
                        Scalar membership_tol) {
  if (!in_lyapunov_domain(dec, Sigma, membership_tol))
    throw DomainError(
        "lyapunov_inverse: Sigma is not supported on the row space of H; "
        "project it onto the normal-normal block first");
  const Index d = dec.dim();
  Matrix S = dec.eigenvectors.transpose() * Sigma * dec.eigenvectors;
  Matrix X = Matrix::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    if (!dec.above_cutoff(i)) continue;
    for (Index j = 0; j < d; ++j) {
      if (!dec.above_cutoff(j)) continue;
      X(i, j) = S(i, j) / (dec.eigenvalues[i] + dec.eigenvalues[j]);
    }
  }
  return dec.eigenvectors * X * dec.eigenvectors.transpose();
}

Scalar pseudo_log_det(const SpectralDecomposition& dec) {
  Scalar sum = 0;
  for (Index i = 0; i < dec.dim(); ++i) {
    if (!dec.above_cutoff(i)) continue;
    if (dec.eigenvalues[i] <= 0)
      throw NotPSDError("pseudo_log_det: above-cutoff eigenvalue " +
                        std::to_string(dec.eigenvalues[i]) + " is not positive");
    sum += std::log(dec.eigenvalues[i]);
  }
  return sum;
}

Matrix psd_sqrt(const SpectralDecomposition& dec) {
  Vector root = Vector::Zero(dec.dim());
  for (Index i = 0; i < dec.dim(); ++i) {
    if (!dec.above_cutoff(i)) continue;
    if (dec.eigenvalues[i] <= 0)
      throw NotPSDError("psd_sqrt: above-cutoff eigenvalue is negative");
    root[i] = std::sqrt(dec.eigenvalues[i]);
  }
  return dec.eigenvectors * root.asDiagonal() * dec.eigenvectors.transpose();
}

}  // namespace sgdlim
