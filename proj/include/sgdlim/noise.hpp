#pragma once

#include "sgdlim/motor.hpp"
#include "sgdlim/olm_problem.hpp"

#include <functional>
#include <random>

namespace sgdlim {

/// State-dependent gradient-noise factor: sample(x) has mean zero and
/// covariance covariance(x). Sampling is reentrant; the caller owns the rng.
class NoiseModel {
 public:
  virtual ~NoiseModel() = default;
  virtual Vector sample(const Vector& x, std::mt19937_64& rng) const = 0;
  virtual Matrix covariance(const Vector& x) const = 0;
  virtual std::string name() const = 0;
};

/// Per-step label perturbation +-delta for the OLM regression: the noisy
/// stochastic gradient is (f_i(x) - y_i + delta_k) grad f_i(x) with i uniform,
/// so the sampled noise is that minus the full-batch gradient. On the
/// manifold the covariance is delta^2 * Hessian.
class LabelNoise final : public NoiseModel {
 public:
  LabelNoise(const OlmProblem& problem, Scalar delta)
      : p_(problem), delta_(delta) {}

  Vector sample(const Vector& x, std::mt19937_64& rng) const override;
  Matrix covariance(const Vector& x) const override;
  std::string name() const override { return "label_noise"; }
  Scalar delta() const { return delta_; }

 private:
  const OlmProblem& p_;
  Scalar delta_;
};

/// Standard normal noise, Sigma = I.
class IsotropicNoise final : public NoiseModel {
 public:
  explicit IsotropicNoise(Index dim) : dim_(dim) {}
  Vector sample(const Vector& x, std::mt19937_64& rng) const override;
  Matrix covariance(const Vector& x) const override {
    return Matrix::Identity(dim_, dim_);
  }
  std::string name() const override { return "isotropic"; }

 private:
  Index dim_;
};

/// Diagonal noise on the phase coordinates of the motor problem,
///   Sigma_jj(x) = 4 (1 + <c_j, Q_{-pi/2} x_{1:2}>) (2 + <c_j, x_{1:2}>),
/// clamped at zero where the product dips negative off the circle. Purely
/// normal on the manifold; drives the constant-speed rotation of the
/// limiting dynamics.
class MotorNoise final : public NoiseModel {
 public:
  explicit MotorNoise(const MotorProblem& problem) : p_(problem) {}
  Vector sample(const Vector& x, std::mt19937_64& rng) const override;
  Matrix covariance(const Vector& x) const override;
  std::string name() const override { return "motor"; }

  /// Diagonal of Sigma(x).
  Vector covariance_diagonal(const Vector& x) const;

 private:
  const MotorProblem& p_;
};

/// Arbitrary user-supplied PSD covariance; samples via the spectral square
/// root.
class CustomNoise final : public NoiseModel {
 public:
  CustomNoise(std::function<Matrix(const Vector&)> cov, Index dim)
      : cov_(std::move(cov)), dim_(dim) {}
  Vector sample(const Vector& x, std::mt19937_64& rng) const override;
  Matrix covariance(const Vector& x) const override { return cov_(x); }
  std::string name() const override { return "custom"; }

 private:
  std::function<Matrix(const Vector&)> cov_;
  Index dim_;
};

/// Fill a vector with iid standard normals.
Vector standard_normal(Index dim, std::mt19937_64& rng);

}  // namespace sgdlim
