#pragma once

#include "sgdlim/loss.hpp"

namespace sgdlim {

/// 2x2 rotation by angle theta.
Eigen::Matrix2d rotation2d(Scalar theta);

/// Loss whose zero set is the unit circle in the first two coordinates with
/// k = D - 2 >= 3 auxiliary phase dimensions:
///
///   L(x) = 1/8 (|x_{1:2}|^2 - 1)^2
///        + 1/2 sum_{j=3}^{D} (2 + <Q_alpha^{j-3} v, x_{1:2}>) x_j^2,
///
/// alpha = 2 pi / (D - 2), v a unit 2-vector. On the circle the Hessian is
/// x_{1:2} x_{1:2}^T in the top-left block plus the diagonal phase weights, so
/// its rank is D - 1.
class MotorProblem final : public LossModel {
 public:
  explicit MotorProblem(Index dim, Eigen::Vector2d v_unit = {1.0, 0.0});

  Index dim() const override { return dim_; }
  Index manifold_rank() const override { return dim_ - 1; }

  Scalar value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  Vector third_contraction(const Vector& x, const Matrix& A) const override;

  /// Phase direction c_j = Q_alpha^{j} v for j = 0..D-3.
  const Eigen::Vector2d& phase(Index j) const { return phases_[static_cast<size_t>(j)]; }
  Scalar alpha() const { return alpha_; }
  const Eigen::Vector2d& v_unit() const { return v_; }

  /// A point of the minimizer circle at the given angle.
  Vector circle_point(Scalar angle) const;

 private:
  Index dim_;
  Scalar alpha_;
  Eigen::Vector2d v_;
  std::vector<Eigen::Vector2d> phases_;
};

}  // namespace sgdlim
