#include "sgdlim/noise.hpp"

#include "sgdlim/linalg.hpp"

#include <cmath>
#include <numbers>

namespace sgdlim {

Vector standard_normal(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<Scalar> gauss(0.0, 1.0);
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = gauss(rng);
  return v;
}

Vector LabelNoise::sample(const Vector& x, std::mt19937_64& rng) const {
  std::uniform_int_distribution<Index> pick(0, p_.n_samples() - 1);
  std::bernoulli_distribution coin(0.5);
  const Index i = pick(rng);
  const Scalar delta_k = coin(rng) ? delta_ : -delta_;
  const Scalar residual = p_.outputs(x)[i] - p_.labels()[i];
  return (residual + delta_k) * p_.sample_output_gradient(x, i) -
         p_.gradient(x);
}

Matrix LabelNoise::covariance(const Vector& x) const {
  const Vector r = p_.outputs(x) - p_.labels();
  const Matrix G = p_.output_gradients(x);
  const Scalar n = static_cast<Scalar>(p_.n_samples());
  Matrix cov =
      G * (r.array().square() + delta_ * delta_).matrix().asDiagonal() *
      G.transpose() / n;
  const Vector g = p_.gradient(x);
  cov.noalias() -= g * g.transpose();
  return cov;
}

Vector IsotropicNoise::sample(const Vector&, std::mt19937_64& rng) const {
  return standard_normal(dim_, rng);
}

Vector MotorNoise::covariance_diagonal(const Vector& x) const {
  const Eigen::Vector2d p = x.head<2>();
  const Eigen::Vector2d t = rotation2d(-std::numbers::pi / 2) * p;
  Vector diag = Vector::Zero(p_.dim());
  for (Index j = 2; j < p_.dim(); ++j) {
    const Eigen::Vector2d& c = p_.phase(j - 2);
    diag[j] = std::max(0.0, 4.0 * (1.0 + c.dot(t)) * (2.0 + c.dot(p)));
  }
  return diag;
}

Matrix MotorNoise::covariance(const Vector& x) const {
  return covariance_diagonal(x).asDiagonal();
}

Vector MotorNoise::sample(const Vector& x, std::mt19937_64& rng) const {
  const Vector sigma = covariance_diagonal(x).cwiseSqrt();
  return sigma.cwiseProduct(standard_normal(p_.dim(), rng));
}

Vector CustomNoise::sample(const Vector& x, std::mt19937_64& rng) const {
  const Matrix root = psd_sqrt(spectral_decompose(cov_(x)));
  return root * standard_normal(dim_, rng);
}

}  // namespace sgdlim
