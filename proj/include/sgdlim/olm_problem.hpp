#pragma once

#include "sgdlim/loss.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <utility>

namespace sgdlim {

enum class DataDist { kGaussian, kBoolean };

std::string to_string(DataDist dist);
DataDist data_dist_from_string(const std::string& s);

/// Sparse regression task fit with the quadratically overparametrized model
/// f_i(u, v) = z_i^T (u o u - v o v), state x = (u; v) in R^{2d}.
///
/// L(x) = (1/n) sum_i 1/2 (f_i(x) - y_i)^2. On the zero-loss manifold the
/// Hessian has rank equal to rank(Z).
class OlmProblem final : public LossModel {
 public:
  /// Z must have full rank min(n, d); y is set to Z * w_star.
  OlmProblem(Matrix Z, Vector w_star, Index sparsity, std::uint64_t seed);

  Index dim() const override { return 2 * d_; }
  Index manifold_rank() const override { return rank_; }

  Scalar value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  Vector third_contraction(const Vector& x, const Matrix& A) const override;

  Index n_samples() const { return n_; }
  Index d_params() const { return d_; }
  Index sparsity() const { return kappa_; }
  std::uint64_t seed() const { return seed_; }
  const Matrix& data() const { return Z_; }
  const Vector& labels() const { return y_; }
  const Vector& groundtruth() const { return w_star_; }

  /// Per-sample model outputs f_i(x) for all i.
  Vector outputs(const Vector& x) const;
  /// Gradient of one sample's output, nabla f_i(x) = 2 (z_i o u; -z_i o v).
  Vector sample_output_gradient(const Vector& x, Index i) const;
  /// D x n matrix of all sample output gradients.
  Matrix output_gradients(const Vector& x) const;

  /// w = u o u - v o v for a state x = (u; v).
  Vector effective_param(const Vector& x) const;

  /// Decay rates s_j = (4/n) sum_i z_{ij}^2, the weights of the implicit
  /// regularizer.
  const Vector& column_weights() const { return col_weights_; }

 private:
  Matrix Z_;          // n x d
  Vector y_;          // n
  Vector w_star_;     // d
  Vector col_weights_;  // d, (4/n) sum_i z_ij^2
  Index n_, d_, kappa_, rank_;
  std::uint64_t seed_;
};

/// Draw a random OLM instance: rows of Z iid N(0, I_d) or Unif{+-1}^d,
/// support of w_star uniform, nonzero magnitudes uniform in magnitude_range
/// with random signs. Boolean data is re-drawn up to 10 times if rank
/// deficient; throws DegenerateDataError if all attempts fail.
OlmProblem olm_generate(Index n, Index d, Index kappa, DataDist dist,
                        std::pair<Scalar, Scalar> magnitude_range,
                        std::uint64_t seed);

inline OlmProblem olm_generate(Index n, Index d, Index kappa, DataDist dist,
                               std::uint64_t seed) {
  return olm_generate(n, d, kappa, dist, {0.5, 2.0}, seed);
}

/// Canonical parametrization (u, v) = ([w]_+^{1/2}, [-w]_+^{1/2}), so that
/// u o u - v o v = w exactly and u o v = 0.
Vector canonical_param(const Vector& w);

/// Plain-text round trip: header line "n d kappa seed", then Z row per line,
/// then w_star on one line.
void save_olm(const OlmProblem& p, const std::string& path);
OlmProblem load_olm(const std::string& path);

}  // namespace sgdlim
