#pragma once

#include "sgdlim/types.hpp"

namespace sgdlim {

/// A C^3 loss on R^D whose set of minimizers forms a manifold on which the
/// Hessian has constant rank manifold_rank().
///
/// third_contraction(x, A) returns the vector with components
/// sum_{j,k} d_i d_j d_k L(x) * A_{jk}; models without an analytic form
/// inherit the finite-difference fallback.
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual Index dim() const = 0;
  virtual Index manifold_rank() const = 0;

  virtual Scalar value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Matrix hessian(const Vector& x) const = 0;
  virtual Vector third_contraction(const Vector& x, const Matrix& A) const;
};

/// L(x) = 1/2 x^T H x for a fixed symmetric PSD H. Constant Hessian, zero
/// third derivatives; its minimizer set is ker(H).
class QuadraticLoss final : public LossModel {
 public:
  explicit QuadraticLoss(Matrix H);

  Index dim() const override { return hess_.rows(); }
  Index manifold_rank() const override { return rank_; }
  Scalar value(const Vector& x) const override { return 0.5 * x.dot(hess_ * x); }
  Vector gradient(const Vector& x) const override { return hess_ * x; }
  Matrix hessian(const Vector&) const override { return hess_; }
  Vector third_contraction(const Vector&, const Matrix&) const override {
    return Vector::Zero(dim());
  }

 private:
  Matrix hess_;
  Index rank_;
};

/// c * L for a wrapped loss; same minimizer manifold.
class ScaledLoss final : public LossModel {
 public:
  ScaledLoss(const LossModel& base, Scalar c) : base_(base), c_(c) {}

  Index dim() const override { return base_.dim(); }
  Index manifold_rank() const override { return base_.manifold_rank(); }
  Scalar value(const Vector& x) const override { return c_ * base_.value(x); }
  Vector gradient(const Vector& x) const override { return c_ * base_.gradient(x); }
  Matrix hessian(const Vector& x) const override { return c_ * base_.hessian(x); }
  Vector third_contraction(const Vector& x, const Matrix& A) const override {
    return c_ * base_.third_contraction(x, A);
  }

 private:
  const LossModel& base_;
  Scalar c_;
};

/// Default finite-difference step, h0 * (1 + |x|).
Scalar fd_step(const Vector& x, Scalar h0 = 1e-4);

/// Central finite differences of value / gradient, O(h^2).
Vector fd_gradient(const LossModel& loss, const Vector& x, Scalar h);
Matrix fd_hessian(const LossModel& loss, const Vector& x, Scalar h);

/// Finite-difference fallback for the third-order contraction: symmetrized
/// central differences of the Hessian along the eigenvectors of A, O(h^2).
Vector fd_third_contraction(const LossModel& loss, const Vector& x,
                            const Matrix& A, Scalar h);

}  // namespace sgdlim
