#include "sgdlim/olm_problem.hpp"

#include "sgdlim/rng.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace sgdlim {

std::string to_string(DataDist dist) {
  return dist == DataDist::kGaussian ? "gaussian" : "boolean";
}

DataDist data_dist_from_string(const std::string& s) {
  if (s == "gaussian") return DataDist::kGaussian;
  if (s == "boolean") return DataDist::kBoolean;
  throw DomainError("unknown data distribution '" + s + "'");
}

namespace {

Index full_rank(const Matrix& Z) { return std::min(Z.rows(), Z.cols()); }

bool has_full_rank(const Matrix& Z) {
  Eigen::ColPivHouseholderQR<Matrix> qr(Z);
  return qr.rank() == full_rank(Z);
}

}  // namespace

OlmProblem::OlmProblem(Matrix Z, Vector w_star, Index sparsity,
                       std::uint64_t seed)
    : Z_(std::move(Z)),
      w_star_(std::move(w_star)),
      n_(Z_.rows()),
      d_(Z_.cols()),
      kappa_(sparsity),
      seed_(seed) {
  if (w_star_.size() != d_)
    throw DimensionError("OlmProblem: w_star dimension mismatch");
  if (n_ == 0) {  // constraint-free degenerate case: L = 0, R = 0
    rank_ = 0;
    y_ = Vector::Zero(0);
    col_weights_ = Vector::Zero(d_);
    return;
  }
  if (!has_full_rank(Z_))
    throw DegenerateDataError("OlmProblem: data matrix is rank deficient");
  rank_ = full_rank(Z_);
  y_ = Z_ * w_star_;
  col_weights_ = (4.0 / static_cast<Scalar>(n_)) *
                 Z_.array().square().colwise().sum().matrix().transpose();
}

Vector OlmProblem::effective_param(const Vector& x) const {
  return x.head(d_).array().square().matrix() -
         x.tail(d_).array().square().matrix();
}

Vector OlmProblem::outputs(const Vector& x) const {
  return Z_ * effective_param(x);
}

Vector OlmProblem::sample_output_gradient(const Vector& x, Index i) const {
  Vector g(2 * d_);
  g.head(d_) = 2 * Z_.row(i).transpose().cwiseProduct(x.head(d_));
  g.tail(d_) = -2 * Z_.row(i).transpose().cwiseProduct(x.tail(d_));
  return g;
}

Matrix OlmProblem::output_gradients(const Vector& x) const {
  Matrix G(2 * d_, n_);
  G.topRows(d_) =
      2.0 * (Z_.transpose().array().colwise() * x.head(d_).array()).matrix();
  G.bottomRows(d_) =
      -2.0 * (Z_.transpose().array().colwise() * x.tail(d_).array()).matrix();
  return G;
}

Scalar OlmProblem::value(const Vector& x) const {
  if (n_ == 0) return 0;
  const Vector r = outputs(x) - y_;
  return r.squaredNorm() / (2.0 * static_cast<Scalar>(n_));
}

Vector OlmProblem::gradient(const Vector& x) const {
  if (n_ == 0) return Vector::Zero(2 * d_);
  const Vector r = outputs(x) - y_;
  // (1/n) sum_i r_i nabla f_i = (1/n) [2 diag(u) Z^T r ; -2 diag(v) Z^T r]
  const Vector Ztr = Z_.transpose() * r / static_cast<Scalar>(n_);
  Vector g(2 * d_);
  g.head(d_) = 2 * Ztr.cwiseProduct(x.head(d_));
  g.tail(d_) = -2 * Ztr.cwiseProduct(x.tail(d_));
  return g;
}

Matrix OlmProblem::hessian(const Vector& x) const {
  if (n_ == 0) return Matrix::Zero(2 * d_, 2 * d_);
  const Vector r = outputs(x) - y_;
  const Matrix G = output_gradients(x);
  Matrix H = G * G.transpose() / static_cast<Scalar>(n_);
  // Residual term (2/n) sum_i r_i diag(z_i; -z_i), vanishing on the manifold.
  const Vector Ztr = Z_.transpose() * r * (2.0 / static_cast<Scalar>(n_));
  H.diagonal().head(d_) += Ztr;
  H.diagonal().tail(d_) -= Ztr;
  return H;
}

Vector OlmProblem::third_contraction(const Vector& x, const Matrix& A) const {
  if (A.rows() != 2 * d_ || A.cols() != 2 * d_)
    throw DimensionError("olm third_contraction: bad contraction matrix size");
  if (n_ == 0) return Vector::Zero(2 * d_);
  // f_i is quadratic, so d^3 f_i = 0 and with S_i = nabla^2 f_i (diagonal),
  // g_i = nabla f_i:
  //   third[A] = (1/n) sum_i [ S_i A g_i + S_i A^T g_i + <S_i, A> g_i ].
  const Matrix As = Scalar(0.5) * (A + A.transpose());
  Vector out = Vector::Zero(2 * d_);
  Vector s(2 * d_);  // diagonal of S_i
  for (Index i = 0; i < n_; ++i) {
    s.head(d_) = 2 * Z_.row(i).transpose();
    s.tail(d_) = -2 * Z_.row(i).transpose();
    const Vector g = sample_output_gradient(x, i);
    const Scalar trace_term = s.dot(As.diagonal());
    out.noalias() += 2.0 * s.cwiseProduct(As * g) + trace_term * g;
  }
  return out / static_cast<Scalar>(n_);
}

OlmProblem olm_generate(Index n, Index d, Index kappa, DataDist dist,
                        std::pair<Scalar, Scalar> magnitude_range,
                        std::uint64_t seed) {
  if (kappa < 1 || kappa >= d)
    throw DomainError("olm_generate: sparsity must satisfy 1 <= kappa < d");
  if (n < 1) throw DomainError("olm_generate: need at least one sample");

  const int max_attempts = dist == DataDist::kBoolean ? 10 : 1;
  std::mt19937_64 rng = seeded_rng(seed);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Matrix Z(n, d);
    if (dist == DataDist::kGaussian) {
      std::normal_distribution<Scalar> gauss(0.0, 1.0);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) Z(i, j) = gauss(rng);
    } else {
      std::bernoulli_distribution coin(0.5);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) Z(i, j) = coin(rng) ? 1.0 : -1.0;
    }

    // Support chosen uniformly via partial Fisher-Yates.
    std::vector<Index> idx(static_cast<size_t>(d));
    std::iota(idx.begin(), idx.end(), Index(0));
    for (Index k = 0; k < kappa; ++k) {
      std::uniform_int_distribution<Index> pick(k, d - 1);
      std::swap(idx[static_cast<size_t>(k)], idx[static_cast<size_t>(pick(rng))]);
    }
    Vector w = Vector::Zero(d);
    std::uniform_real_distribution<Scalar> mag(magnitude_range.first,
                                               magnitude_range.second);
    std::bernoulli_distribution sign(0.5);
    for (Index k = 0; k < kappa; ++k)
      w[idx[static_cast<size_t>(k)]] = (sign(rng) ? 1.0 : -1.0) * mag(rng);

    if (!has_full_rank(Z)) continue;
    return OlmProblem(std::move(Z), std::move(w), kappa, seed);
  }
  throw DegenerateDataError(
      "olm_generate: data matrix rank deficient after retries; use another "
      "seed");
}

Vector canonical_param(const Vector& w) {
  const Index d = w.size();
  Vector x = Vector::Zero(2 * d);
  for (Index j = 0; j < d; ++j) {
    if (w[j] > 0)
      x[j] = std::sqrt(w[j]);
    else if (w[j] < 0)
      x[d + j] = std::sqrt(-w[j]);
  }
  return x;
}

void save_olm(const OlmProblem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw NumericalError("save_olm: cannot open " + path);
  out.precision(17);
  out << p.n_samples() << ' ' << p.d_params() << ' ' << p.sparsity() << ' '
      << p.seed() << '\n';
  for (Index i = 0; i < p.n_samples(); ++i) {
    for (Index j = 0; j < p.d_params(); ++j)
      out << p.data()(i, j) << (j + 1 == p.d_params() ? '\n' : ' ');
  }
  for (Index j = 0; j < p.d_params(); ++j)
    out << p.groundtruth()[j] << (j + 1 == p.d_params() ? '\n' : ' ');
}

OlmProblem load_olm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NumericalError("load_olm: cannot open " + path);
  Index n, d, kappa;
  std::uint64_t seed;
  if (!(in >> n >> d >> kappa >> seed))
    throw NumericalError("load_olm: malformed header in " + path);
  Matrix Z(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j)
      if (!(in >> Z(i, j)))
        throw NumericalError("load_olm: truncated data block in " + path);
  Vector w(d);
  for (Index j = 0; j < d; ++j)
    if (!(in >> w[j]))
      throw NumericalError("load_olm: truncated groundtruth in " + path);
  return OlmProblem(std::move(Z), std::move(w), kappa, seed);
}

}  // namespace sgdlim
