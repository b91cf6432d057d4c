#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sgdlim/noise.hpp"
#include "sgdlim/phi.hpp"
#include "sgdlim/rng.hpp"

#include <numbers>

using namespace sgdlim;

namespace {

Vector olm_gamma_point(const OlmProblem& p, std::uint64_t seed) {
  std::mt19937_64 rng = seeded_rng(seed);
  std::uniform_real_distribution<Scalar> mag(0.5, 1.5);
  std::bernoulli_distribution coin(0.5);
  Vector x(p.dim());
  for (Index i = 0; i < p.dim(); ++i)
    x[i] = (coin(rng) ? 1.0 : -1.0) * mag(rng);
  FlowConfig cfg;
  cfg.grad_stop = 1e-11;
  return phi_limit(p, x, cfg);
}

Matrix random_psd(Index d, std::mt19937_64& rng) {
  std::normal_distribution<Scalar> gauss(0.0, 1.0);
  Matrix W(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) W(i, j) = gauss(rng);
  return W * W.transpose() / static_cast<Scalar>(d);
}

}  // namespace

TEST_CASE("dphi on a flat valley") {
  Matrix H = Matrix::Zero(2, 2);
  H(1, 1) = 1.0;  // L = x_2^2 / 2
  const QuadraticLoss loss{H};
  Vector x(2);
  x << 3.7, 0.0;
  const Matrix P = dphi(loss, x);
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  CHECK((P - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dphi on the motor circle") {
  const MotorProblem motor(5);
  const Vector x = motor.circle_point(0.0);  // (1, 0, 0, 0, 0)
  const Matrix P = dphi(motor, x);
  Matrix expected = Matrix::Zero(5, 5);
  expected(1, 1) = 1.0;  // tangent is e_2
  CHECK((P - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dphi on the OLM manifold") {
  Matrix Z(1, 1);
  Z << 1.0;
  Vector w(1);
  w << 3.0;
  const OlmProblem p(Z, w, 1, 0);
  Vector x(2);
  x << 2.0, 1.0;  // u^2 - v^2 = 3, on the manifold
  const Matrix P = dphi(p, x);
  Eigen::Vector2d k(1.0, 2.0);
  k.normalize();
  CHECK((P - Matrix(k * k.transpose())).cwiseAbs().maxCoeff() < 1e-12);

  Vector off(2);
  off << 2.0, 0.5;
  CHECK_THROWS_AS(dphi(p, off), NotOnManifoldError);
}

TEST_CASE("split_noise block structure") {
  const MotorProblem motor(5);
  const Vector x = motor.circle_point(0.9);
  const Matrix P = dphi(motor, x);
  const Index D = 5;

  SUBCASE("isotropic noise splits into the two projectors") {
    const NoiseSplit s = split_noise(motor, x, Matrix::Identity(D, D));
    CHECK((s.sigma_par - P).norm() < 1e-10);
    CHECK((s.sigma_perp - (Matrix::Identity(D, D) - P)).norm() < 1e-10);
    CHECK(s.sigma_cross.norm() < 1e-10);
  }

  SUBCASE("hessian-aligned noise is purely normal") {
    const Matrix Sigma = 0.7 * motor.hessian(x);
    const NoiseSplit s = split_noise(motor, x, Sigma);
    CHECK((s.sigma_perp - Sigma).norm() <= 1e-10 * Sigma.norm());
    CHECK(s.sigma_par.norm() <= 1e-10 * Sigma.norm());
    CHECK(s.sigma_cross.norm() <= 1e-10 * Sigma.norm());
  }

  SUBCASE("tangent-only noise is purely tangent") {
    std::mt19937_64 rng = seeded_rng(5);
    const Vector w = standard_normal(D, rng);
    const Matrix Sigma = P * w * w.transpose() * P;
    const NoiseSplit s = split_noise(motor, x, Sigma);
    CHECK((s.sigma_par - Sigma).norm() <= 1e-10 * Sigma.norm());
    CHECK(s.sigma_perp.norm() <= 1e-10 * Sigma.norm());
    CHECK(s.sigma_cross.norm() <= 1e-10 * Sigma.norm());
  }

  SUBCASE("blocks reconstruct the input covariance") {
    std::mt19937_64 rng = seeded_rng(6);
    const Matrix Sigma = random_psd(D, rng);
    const NoiseSplit s = split_noise(motor, x, Sigma);
    const Matrix sum = s.sigma_par + s.sigma_perp + s.sigma_cross +
                       s.sigma_cross.transpose();
    CHECK((sum - Sigma).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((s.sigma_par - s.sigma_par.transpose()).norm() < 1e-10);
    CHECK((s.sigma_perp - s.sigma_perp.transpose()).norm() < 1e-10);
  }
}

TEST_CASE("d2phi_contract vanishes for constant Hessians") {
  Matrix H = Matrix::Zero(3, 3);
  H(2, 2) = 2.0;
  const QuadraticLoss loss{H};
  Vector x = Vector::Zero(3);
  x[0] = 1.0;
  std::mt19937_64 rng = seeded_rng(7);
  const Matrix Sigma = random_psd(3, rng);
  CHECK(d2phi_contract(loss, x, Sigma).norm() < 1e-14);
}

TEST_CASE("half d2phi with motor noise is the constant-speed rotation") {
  for (const Index D : {5, 8}) {
    const MotorProblem motor(D);
    const MotorNoise noise(motor);
    for (const Scalar angle : {0.3, 2.0, 4.4}) {
      const Vector x = motor.circle_point(angle);
      const Vector half = 0.5 * d2phi_contract(motor, x, noise.covariance(x));
      Vector expected = Vector::Zero(D);
      expected.head<2>() = static_cast<Scalar>(D - 2) / 2.0 *
                           (rotation2d(std::numbers::pi / 2) * x.head<2>());
      CHECK((half - expected).norm() <= 1e-9 * expected.norm());
    }
  }
}

TEST_CASE("d2phi_contract matches the flow-based FD oracle on the OLM") {
  const OlmProblem p = olm_generate(2, 3, 1, DataDist::kGaussian, 71);
  std::mt19937_64 rng = seeded_rng(8);
  for (int rep = 0; rep < 2; ++rep) {
    const Vector x = olm_gamma_point(p, 100 + static_cast<std::uint64_t>(rep));
    const Matrix Sigma = random_psd(p.dim(), rng);
    const Vector closed = d2phi_contract(p, x, Sigma);
    const Vector fd = d2phi_fd(p, x, Sigma);
    CHECK((closed - fd).cwiseAbs().maxCoeff() <=
          1e-3 * std::max(closed.cwiseAbs().maxCoeff(), Scalar(1)));
  }
}

TEST_CASE("dphi matches its FD oracle at manifold points") {
  const OlmProblem p = olm_generate(2, 3, 1, DataDist::kGaussian, 73);
  const Vector x = olm_gamma_point(p, 55);
  const Matrix closed = dphi(p, x);
  const Matrix fd = dphi_fd(p, x, 1e-3);
  CHECK((closed - fd).cwiseAbs().maxCoeff() <= 1e-4);

  const MotorProblem motor(5);
  const Vector xm = motor.circle_point(1.1);
  CHECK((dphi(motor, xm) - dphi_fd(motor, xm, 1e-3)).cwiseAbs().maxCoeff() <=
        1e-4);
}

TEST_CASE("dphi_fd of the strongly convex quadratic is zero") {
  const QuadraticLoss loss{Matrix::Identity(2, 2)};
  Vector x(2);
  x << 0.4, -0.2;
  CHECK(dphi_fd(loss, x, 1e-3).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("d2phi_fd is linear in Sigma (zero at zero)") {
  const MotorProblem motor(5);
  const Vector x = motor.circle_point(0.3);
  CHECK(d2phi_fd(motor, x, Matrix::Zero(5, 5)).norm() == 0.0);
}

TEST_CASE("grad_trace_hessian") {
  SUBCASE("constant Hessian gives zero") {
    const QuadraticLoss loss{Matrix::Identity(4, 4)};
    CHECK(grad_trace_hessian(loss, Vector::Ones(4)).norm() == 0.0);
  }

  SUBCASE("OLM gradient of trace is the regularizer gradient pattern") {
    const OlmProblem p = olm_generate(3, 4, 2, DataDist::kGaussian, 79);
    std::mt19937_64 rng = seeded_rng(9);
    const Vector x = standard_normal(p.dim(), rng);
    const Vector g = grad_trace_hessian(p, x);
    Vector expected(p.dim());
    const Index d = p.d_params();
    expected.head(d) = 2.0 * p.column_weights().cwiseProduct(x.head(d));
    expected.tail(d) = 2.0 * p.column_weights().cwiseProduct(x.tail(d));
    CHECK((g - expected).norm() <= 1e-12 * expected.norm());
  }

  SUBCASE("FD agreement on the motor at manifold points") {
    const MotorProblem motor(5);
    std::mt19937_64 rng = seeded_rng(10);
    std::uniform_real_distribution<Scalar> angle(0, 2 * std::numbers::pi);
    for (int rep = 0; rep < 10; ++rep) {
      const Vector x = motor.circle_point(angle(rng));
      const Vector g = grad_trace_hessian(motor, x);
      const Scalar h = 1e-5;
      Vector fd(motor.dim());
      Vector xp = x, xm = x;
      for (Index i = 0; i < motor.dim(); ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        fd[i] = (motor.hessian(xp).trace() - motor.hessian(xm).trace()) /
                (2 * h);
        xp[i] = x[i];
        xm[i] = x[i];
      }
      CHECK((g - fd).norm() <= 1e-4 * std::max(g.norm(), Scalar(1)));
    }
  }
}

TEST_CASE("tangent compensation depends only on the manifold") {
  const MotorProblem motor(5);
  const ScaledLoss doubled(motor, 2.0);
  const Vector x = motor.circle_point(2.2);
  const Matrix P = dphi(motor, x);
  std::mt19937_64 rng = seeded_rng(11);
  const Vector w = standard_normal(5, rng);
  const Matrix sigma_par = P * w * w.transpose() * P;  // fixed tangent noise

  auto compensation = [&](const LossModel& loss) -> Vector {
    const SpectralDecomposition dec = manifold_hessian(loss, x);
    return pseudo_inverse(dec) * loss.third_contraction(x, sigma_par);
  };
  CHECK((compensation(motor) - compensation(doubled)).norm() <= 1e-8);
}

TEST_CASE("normal part of the tangent-noise d2phi pushes back through H") {
  const OlmProblem p = olm_generate(2, 3, 1, DataDist::kGaussian, 83);
  const Vector x = olm_gamma_point(p, 77);
  const Matrix P = dphi(p, x);
  const Matrix H = p.hessian(x);
  std::mt19937_64 rng = seeded_rng(12);
  const Vector w = standard_normal(p.dim(), rng);
  const Matrix sigma = P * w * w.transpose() * P;

  const Vector out = d2phi_contract(p, x, sigma);
  const Vector normal_part = (Matrix::Identity(p.dim(), p.dim()) - P) * out;
  const Vector pushed = H * normal_part;
  const Vector expected =
      -(Matrix::Identity(p.dim(), p.dim()) - P) * p.third_contraction(x, sigma);
  CHECK((pushed - expected).norm() <=
        1e-6 * std::max(expected.norm(), Scalar(1)));
}

TEST_CASE("d2phi_contract rejects asymmetric covariance") {
  const MotorProblem motor(5);
  const Vector x = motor.circle_point(0.5);
  Matrix bad = Matrix::Zero(5, 5);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(d2phi_contract(motor, x, bad), SymmetryError);
}
