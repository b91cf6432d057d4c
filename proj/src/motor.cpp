#include "sgdlim/motor.hpp"

#include <cmath>
#include <numbers>

namespace sgdlim {

Eigen::Matrix2d rotation2d(Scalar theta) {
  Eigen::Matrix2d Q;
  Q << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return Q;
}

MotorProblem::MotorProblem(Index dim, Eigen::Vector2d v_unit)
    : dim_(dim), v_(v_unit) {
  if (dim_ < 5) throw DomainError("MotorProblem: need dim >= 5 (k >= 3 phases)");
  if (std::abs(v_.norm() - 1.0) > 1e-12)
    throw DomainError("MotorProblem: v must be a unit vector");
  alpha_ = 2.0 * std::numbers::pi / static_cast<Scalar>(dim_ - 2);
  phases_.resize(static_cast<size_t>(dim_ - 2));
  const Eigen::Matrix2d Q = rotation2d(alpha_);
  phases_[0] = v_;
  for (size_t j = 1; j < phases_.size(); ++j) phases_[j] = Q * phases_[j - 1];
}

Vector MotorProblem::circle_point(Scalar angle) const {
  Vector x = Vector::Zero(dim_);
  x[0] = std::cos(angle);
  x[1] = std::sin(angle);
  return x;
}

Scalar MotorProblem::value(const Vector& x) const {
  const Eigen::Vector2d p = x.head<2>();
  const Scalar radial = p.squaredNorm() - 1.0;
  Scalar val = radial * radial / 8.0;
  for (Index j = 2; j < dim_; ++j) {
    const Scalar a = 2.0 + phases_[static_cast<size_t>(j - 2)].dot(p);
    val += 0.5 * a * x[j] * x[j];
  }
  return val;
}

Vector MotorProblem::gradient(const Vector& x) const {
  const Eigen::Vector2d p = x.head<2>();
  const Scalar radial = p.squaredNorm() - 1.0;
  Vector g = Vector::Zero(dim_);
  g.head<2>() = 0.5 * radial * p;
  for (Index j = 2; j < dim_; ++j) {
    const Eigen::Vector2d& c = phases_[static_cast<size_t>(j - 2)];
    const Scalar a = 2.0 + c.dot(p);
    g.head<2>() += 0.5 * x[j] * x[j] * c;
    g[j] = a * x[j];
  }
  return g;
}

Matrix MotorProblem::hessian(const Vector& x) const {
  const Eigen::Vector2d p = x.head<2>();
  const Scalar radial = p.squaredNorm() - 1.0;
  Matrix H = Matrix::Zero(dim_, dim_);
  H.topLeftCorner<2, 2>() =
      0.5 * radial * Eigen::Matrix2d::Identity() + p * p.transpose();
  for (Index j = 2; j < dim_; ++j) {
    const Eigen::Vector2d& c = phases_[static_cast<size_t>(j - 2)];
    H(j, j) = 2.0 + c.dot(p);
    H.block<2, 1>(0, j) = x[j] * c;
    H.block<1, 2>(j, 0) = x[j] * c.transpose();
  }
  return H;
}

Vector MotorProblem::third_contraction(const Vector& x, const Matrix& A) const {
  if (A.rows() != dim_ || A.cols() != dim_)
    throw DimensionError("motor third_contraction: bad contraction matrix");
  const Matrix As = Scalar(0.5) * (A + A.transpose());
  const Eigen::Vector2d p = x.head<2>();
  Vector out = Vector::Zero(dim_);
  // Quartic radial term: T_{abc} = p_c d_ab + p_a d_bc + p_b d_ac on {1,2}.
  const Eigen::Matrix2d A2 = As.topLeftCorner<2, 2>();
  out.head<2>() = p * A2.trace() + 2.0 * (A2 * p);
  // Phase terms: T_{a j j} = (c_j)_a for a in {1,2}, j >= 3.
  for (Index j = 2; j < dim_; ++j) {
    const Eigen::Vector2d& c = phases_[static_cast<size_t>(j - 2)];
    out.head<2>() += As(j, j) * c;
    out[j] = 2.0 * c.dot(As.block<2, 1>(0, j));
  }
  return out;
}

}  // namespace sgdlim
