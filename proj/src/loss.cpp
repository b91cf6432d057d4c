#include "sgdlim/loss.hpp"

#include "sgdlim/linalg.hpp"

namespace sgdlim {

Vector LossModel::third_contraction(const Vector& x, const Matrix& A) const {
  return fd_third_contraction(*this, x, A, fd_step(x));
}

QuadraticLoss::QuadraticLoss(Matrix H) : hess_(std::move(H)) {
  rank_ = spectral_decompose(hess_).rank;
}

Scalar fd_step(const Vector& x, Scalar h0) { return h0 * (1 + x.norm()); }

Vector fd_gradient(const LossModel& loss, const Vector& x, Scalar h) {
  const Index d = loss.dim();
  Vector g(d);
  Vector xp = x, xm = x;
  for (Index i = 0; i < d; ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (loss.value(xp) - loss.value(xm)) / (2 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

Matrix fd_hessian(const LossModel& loss, const Vector& x, Scalar h) {
  const Index d = loss.dim();
  Matrix H(d, d);
  Vector xp = x, xm = x;
  for (Index i = 0; i < d; ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    H.col(i) = (loss.gradient(xp) - loss.gradient(xm)) / (2 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return Scalar(0.5) * (H + H.transpose());
}

Vector fd_third_contraction(const LossModel& loss, const Vector& x,
                            const Matrix& A, Scalar h) {
  if (h <= 0) throw DomainError("fd_third_contraction: step must be positive");
  const SpectralDecomposition dec =
      spectral_decompose(Scalar(0.5) * (A + A.transpose()));
  Vector out = Vector::Zero(loss.dim());
  const Scalar scale = dec.eigenvalues.cwiseAbs().maxCoeff();
  for (Index k = 0; k < dec.dim(); ++k) {
    const Scalar mu = dec.eigenvalues[k];
    if (std::abs(mu) <= 1e-14 * scale) continue;
    const Vector q = dec.eigenvectors.col(k);
    const Matrix Hp = loss.hessian(x + h * q);
    const Matrix Hm = loss.hessian(x - h * q);
    out.noalias() += (mu / (2 * h)) * ((Hp - Hm) * q);
  }
  return out;
}

}  // namespace sgdlim
