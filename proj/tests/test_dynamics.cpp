#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sgdlim/dynamics.hpp"
#include "sgdlim/olm_lab.hpp"
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

}  // namespace

TEST_CASE("noiseless label SGD decreases the loss") {
  const OlmProblem p = olm_generate(3, 4, 2, DataDist::kGaussian, 3);
  const LabelNoise noise(p, 0.0);
  SgdConfig cfg;
  cfg.eta = 0.01;
  cfg.steps = 1000;
  cfg.seed = 4;
  cfg.record_stride = 100;
  std::mt19937_64 rng = seeded_rng(5);
  Vector x0 = standard_normal(p.dim(), rng);
  const Trajectory traj = sgd_run(p, noise, cfg, x0);
  CHECK(traj.losses.back() < traj.losses.front());
  CHECK(traj.times.back() == doctest::Approx(1000 * 0.01 * 0.01));
}

TEST_CASE("sgd_run is deterministic in the seed") {
  const OlmProblem p = olm_generate(2, 3, 1, DataDist::kGaussian, 6);
  const LabelNoise noise(p, 0.5);
  SgdConfig cfg;
  cfg.eta = 0.02;
  cfg.steps = 200;
  cfg.seed = 12;
  const Vector x0 = olm_gamma_point(p, 1);
  const Trajectory a = sgd_run(p, noise, cfg, x0);
  const Trajectory b = sgd_run(p, noise, cfg, x0);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    CHECK((a.states[i] - b.states[i]).norm() == 0.0);
}

TEST_CASE("label noise one-step covariance matches delta^2 H on the manifold") {
  const OlmProblem p = olm_generate(2, 3, 1, DataDist::kGaussian, 8);
  const Scalar delta = 0.7;
  const LabelNoise noise(p, delta);
  const Vector x = olm_gamma_point(p, 2);

  std::mt19937_64 rng = seeded_rng(99);
  const int n_samples = 100000;
  Matrix cov = Matrix::Zero(p.dim(), p.dim());
  Vector mean = Vector::Zero(p.dim());
  for (int s = 0; s < n_samples; ++s) {
    const Vector xi = noise.sample(x, rng);
    mean += xi;
    cov.noalias() += xi * xi.transpose();
  }
  mean /= n_samples;
  cov /= n_samples;
  const Matrix expected = delta * delta * p.hessian(x);
  CHECK((cov - expected).norm() <= 0.05 * expected.norm());
  CHECK(mean.norm() <= 5.0 * std::sqrt(expected.trace() / n_samples));
  // and the analytic covariance agrees exactly on the manifold
  CHECK((noise.covariance(x) - expected).norm() <= 1e-10 * expected.norm());
}

TEST_CASE("motor noise empirical covariance matches its diagonal") {
  const MotorProblem motor(5);
  const MotorNoise noise(motor);
  const Vector x = motor.circle_point(0.8);
  std::mt19937_64 rng = seeded_rng(123);
  const int n_samples = 100000;
  Matrix cov = Matrix::Zero(5, 5);
  for (int s = 0; s < n_samples; ++s) {
    const Vector xi = noise.sample(x, rng);
    cov.noalias() += xi * xi.transpose();
  }
  cov /= n_samples;
  CHECK((cov - noise.covariance(x)).norm() <=
        0.05 * noise.covariance(x).norm());
}

TEST_CASE("sgd_run diverges loudly") {
  // gradient ascent via negative-definite quadratic: the iterates blow up
  const QuadraticLoss loss{-Matrix::Identity(1, 1)};
  const IsotropicNoise noise(1);
  SgdConfig cfg;
  cfg.eta = 3.0;
  cfg.steps = 2000;
  Vector x0(1);
  x0 << 1.0;
  CHECK_THROWS_AS(sgd_run(loss, noise, cfg, x0), DivergenceError);
}

TEST_CASE("limiting_drift vanishes on a constant-Hessian valley") {
  Matrix H = Matrix::Zero(2, 2);
  H(1, 1) = 1.0;
  const QuadraticLoss loss{H};
  const IsotropicNoise noise(2);
  Vector x(2);
  x << 4.2, 0.0;
  CHECK(limiting_drift(loss, noise, x).norm() < 1e-14);
}

TEST_CASE("limiting_drift on the motor is the constant-speed field") {
  for (const Index D : {5, 8}) {
    const MotorProblem motor(D);
    const MotorNoise noise(motor);
    std::mt19937_64 rng = seeded_rng(17);
    std::uniform_real_distribution<Scalar> angle(0, 2 * std::numbers::pi);
    for (int rep = 0; rep < 20; ++rep) {
      const Vector x = motor.circle_point(angle(rng));
      const Vector drift = limiting_drift(motor, noise, x);
      Vector expected = Vector::Zero(D);
      expected.head<2>() = static_cast<Scalar>(D - 2) / 2.0 *
                           (rotation2d(std::numbers::pi / 2) * x.head<2>());
      CHECK((drift - expected).norm() <= 1e-6 * expected.norm());
    }
  }
}

TEST_CASE("limiting_drift with label noise is the trace-of-Hessian flow") {
  const OlmProblem p = olm_generate(2, 3, 1, DataDist::kGaussian, 19);
  const LabelNoise noise(p, 1.0);
  const Vector x = olm_gamma_point(p, 3);
  const Vector drift = limiting_drift(p, noise, x);
  const Matrix P = dphi(p, x);
  const Vector expected = -0.25 * (P * grad_trace_hessian(p, x));
  CHECK((drift - expected).norm() <=
        1e-8 * std::max(expected.norm(), Scalar(1)));
}

TEST_CASE("limiting_drift equals half the second derivative contraction") {
  const OlmProblem p = olm_generate(3, 4, 2, DataDist::kGaussian, 23);
  const Vector x = olm_gamma_point(p, 4);
  std::mt19937_64 rng = seeded_rng(29);
  for (int rep = 0; rep < 3; ++rep) {
    Matrix W(p.dim(), p.dim());
    for (Index i = 0; i < p.dim(); ++i)
      for (Index j = 0; j < p.dim(); ++j)
        W(i, j) = std::normal_distribution<Scalar>(0, 1)(rng);
    const Matrix Sigma = W * W.transpose();
    const CustomNoise noise([Sigma](const Vector&) { return Sigma; }, p.dim());
    const Vector drift = limiting_drift(p, noise, x);
    const Vector half = 0.5 * d2phi_contract(p, x, Sigma);
    CHECK((drift - half).norm() <= 1e-12 * std::max(half.norm(), Scalar(1)));
  }
}

TEST_CASE("limiting_diffusion_factor") {
  const OlmProblem p = olm_generate(2, 3, 1, DataDist::kGaussian, 31);
  const Vector x = olm_gamma_point(p, 5);
  const Matrix P = dphi(p, x);

  SUBCASE("label noise has zero tangent diffusion") {
    const LabelNoise noise(p, 1.0);
    CHECK(limiting_diffusion_factor(p, noise, x).norm() <= 1e-10);
  }

  SUBCASE("isotropic noise diffuses with the projector") {
    const IsotropicNoise noise(p.dim());
    CHECK((limiting_diffusion_factor(p, noise, x) - P).norm() <= 1e-8);
  }

  SUBCASE("tangent noise square root squares back") {
    std::mt19937_64 rng = seeded_rng(37);
    const Vector w = standard_normal(p.dim(), rng);
    const Matrix Sigma = P * w * w.transpose() * P;
    const CustomNoise noise([Sigma](const Vector&) { return Sigma; }, p.dim());
    const Matrix root = limiting_diffusion_factor(p, noise, x);
    CHECK((root * root - Sigma).norm() <= 1e-8 * std::max(Sigma.norm(), 1.0));
  }
}

TEST_CASE("zero-diffusion SDE path matches the label-noise flow") {
  const OlmProblem p = olm_generate(2, 3, 1, DataDist::kGaussian, 41);
  const LabelNoise noise(p, 1.0);
  const Vector x0 = olm_gamma_point(p, 6);

  SdeConfig sde;
  sde.T = 0.01;
  sde.dt = 1e-6;
  sde.retraction_every = 50;
  sde.record_stride = 10000;
  const Vector end_sde = simulate_limit_sde(p, noise, x0, sde).back_state();
  const Vector end_flow =
      label_noise_flow(p, 1.0, x0, 0.01, 1e-4).back_state();
  CHECK((end_sde - end_flow).norm() <= 1e-6);
}

TEST_CASE("motor SDE rotates at the analytic rate and stays on the circle") {
  const MotorProblem motor(5);
  const MotorNoise noise(motor);
  const Vector x0 = motor.circle_point(0.0);
  SdeConfig sde;
  sde.T = 0.5;
  sde.dt = 1e-3;
  sde.seed = 7;
  sde.record_stride = 25;
  Index violations = 999;
  const Trajectory traj = simulate_limit_sde(motor, noise, x0, sde, &violations);
  CHECK(violations == 0);
  const Vector expected = motor_analytic(x0, 0.5);
  CHECK((traj.back_state() - expected).norm() <= 5e-3);
  for (const Vector& s : traj.states)
    CHECK(s.tail(3).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("label_noise_flow is stationary on a constant-Hessian valley") {
  Matrix H = Matrix::Zero(2, 2);
  H(1, 1) = 2.0;
  const QuadraticLoss loss{H};
  Vector x0(2);
  x0 << 1.5, 0.0;
  const Trajectory traj = label_noise_flow(loss, 1.0, x0, 1.0, 1e-2);
  CHECK((traj.back_state() - x0).norm() <= 1e-12);
}

TEST_CASE("label_noise_flow coincides with the Riemannian regularizer flow") {
  const OlmProblem p = olm_generate(2, 2, 1, DataDist::kGaussian, 43);
  const Vector x0 = olm_gamma_point(p, 8);
  const Scalar T = 0.5, dt = 5e-4;
  const Trajectory a = label_noise_flow(p, 1.0, x0, T, dt);
  RiemannianFlowOptions opts;
  opts.stop_F_tol = 0.0;
  const Trajectory b = riemannian_flow(p, x0, T, dt, opts);
  CHECK((a.back_state() - b.back_state()).norm() <= 1e-5);
}

TEST_CASE("label_noise_flow decays the uv products at the analytic rate") {
  const OlmProblem p = olm_generate(2, 3, 1, DataDist::kGaussian, 47);
  const Vector x0 = olm_gamma_point(p, 9);
  const Scalar dt = 1e-3;
  const Trajectory traj = label_noise_flow(p, 1.0, x0, 0.4, dt);
  const Index d = p.d_params();
  for (Index j = 0; j < d; ++j) {
    const Scalar s_j = p.column_weights()[j];
    const Scalar uv0 = x0[j] * x0[d + j];
    const Scalar uvT =
        traj.back_state()[j] * traj.back_state()[d + j];
    const Scalar slope =
        (std::log(std::abs(uvT)) - std::log(std::abs(uv0))) /
        traj.times.back();
    CHECK(std::abs(slope + s_j) <= 0.01 * s_j);
  }
}

TEST_CASE("isotropic_flow_step structure") {
  SUBCASE("constant Hessian: zero drift, projector diffusion") {
    Matrix H = Matrix::Zero(3, 3);
    H(2, 2) = 1.0;
    const QuadraticLoss loss{H};
    Vector x = Vector::Zero(3);
    x[0] = 2.0;
    const auto [drift, diffusion] = isotropic_flow_step(loss, x);
    CHECK(drift.norm() < 1e-14);
    Matrix P = Matrix::Identity(3, 3);
    P(2, 2) = 0.0;
    CHECK((diffusion - P).norm() < 1e-12);
  }

  SUBCASE("normal regularization equals the pseudo-log-det gradient") {
    const MotorProblem motor(5);
    const Vector x = motor.circle_point(1.3);
    const SpectralDecomposition dec = manifold_hessian(motor, x);
    const Matrix P = kernel_projection(dec);
    const Matrix pinv = pseudo_inverse(dec);
    const Vector normal_reg = -0.5 * (P * motor.third_contraction(x, pinv));

    // FD of pseudo_log_det along the (1-dimensional) tangent direction
    Vector tangent = Vector::Zero(5);
    tangent.head<2>() = rotation2d(-std::numbers::pi / 2) * x.head<2>();
    const Scalar h = 1e-5;
    auto pld = [&](const Vector& y) {
      return pseudo_log_det(
          with_forced_rank(spectral_decompose(motor.hessian(y)), 4));
    };
    const Scalar dir_deriv =
        (pld(x + h * tangent) - pld(x - h * tangent)) / (2 * h);
    const Vector fd_version = -0.5 * dir_deriv * tangent;
    CHECK((normal_reg - fd_version).norm() <=
          1e-3 * std::max(normal_reg.norm(), Scalar(1e-6)));

    const auto [drift, diffusion] = isotropic_flow_step(motor, x);
    // the tangent part of the drift is P-invariant
    const Vector tangent_part = -0.5 * (P * motor.third_contraction(x, pinv));
    CHECK((P * tangent_part - tangent_part).norm() <= 1e-8);
    CHECK((diffusion - P).norm() <= 1e-10);
    // drift assembles the two pieces
    const Vector compensation =
        -0.5 * (pinv * motor.third_contraction(x, P));
    CHECK((drift - (compensation + normal_reg)).norm() <= 1e-12);
  }
}

TEST_CASE("motor_analytic rotation") {
  Vector x0 = Vector::Zero(5);
  x0[0] = 1.0;
  CHECK((motor_analytic(x0, 0.0) - x0).norm() == 0.0);

  const Vector half_turn = motor_analytic(x0, std::numbers::pi / 1.5);
  CHECK(half_turn[0] == doctest::Approx(-1.0));
  CHECK(std::abs(half_turn[1]) < 1e-12);

  std::mt19937_64 rng = seeded_rng(53);
  std::uniform_real_distribution<Scalar> t(0, 2);
  for (int rep = 0; rep < 10; ++rep) {
    const Scalar s1 = t(rng), s2 = t(rng);
    const Vector a = motor_analytic(x0, s1 + s2);
    const Vector b = motor_analytic(motor_analytic(x0, s1), s2);
    CHECK((a - b).norm() < 1e-12);
  }
}

TEST_CASE("two-phase behavior of SGD started off the manifold") {
  const MotorProblem motor(5);
  const MotorNoise noise(motor);
  Vector x0 = Vector::Zero(5);
  x0 << 1.9, 0.0, 0.6, -0.6, 0.6;  // well off the circle
  const Scalar eta = 0.01;
  SgdConfig cfg;
  cfg.eta = eta;
  cfg.steps = 20000;
  cfg.seed = 3;
  cfg.record_stride = 10;
  const Trajectory traj = sgd_run(motor, noise, cfg, x0);
  REQUIRE(traj.grad_norms.front() > 3.0);

  // phase 1: gradient norm drops below the threshold within O(1/eta) steps
  const Scalar threshold = 0.45;
  size_t first_below = traj.size();
  for (size_t i = 0; i < traj.size(); ++i) {
    if (traj.grad_norms[i] < threshold) {
      first_below = i;
      break;
    }
  }
  REQUIRE(first_below < traj.size());
  CHECK(traj.times[first_below] <= 10.0 * eta);  // t = k eta^2, k <= 10/eta

  // phase 2: stays in a band around the manifold for the rest of the run
  for (size_t i = first_below; i < traj.size(); ++i)
    CHECK(traj.grad_norms[i] <= 2.5);
}

TEST_CASE("weak-convergence trend toward the limit endpoint mean") {
  // small OLM with label noise: the limiting dynamics is the deterministic
  // flow endpoint; SGD ensemble means approach it as eta halves
  const OlmProblem p = olm_generate(2, 2, 1, DataDist::kGaussian, 59);
  const LabelNoise noise(p, 0.5);
  const Vector x0 = olm_gamma_point(p, 10);
  const Scalar T = 0.5;
  const Vector limit_end =
      label_noise_flow(p, 0.25, x0, T, 1e-3).back_state();

  std::vector<Scalar> errors;
  for (const Scalar eta : {0.02, 0.01, 0.005}) {
    const Index steps = static_cast<Index>(std::floor(T / (eta * eta) + 1e-9));
    Vector mean = Vector::Zero(p.dim());
    const Index n_seeds = 100;
    Index used = 0;
    for (Index s = 0; s < n_seeds; ++s) {
      SgdConfig cfg;
      cfg.eta = eta;
      cfg.steps = steps;
      cfg.seed = 1000 + static_cast<std::uint64_t>(s);
      cfg.record_stride = steps;
      mean += sgd_run(p, noise, cfg, x0).back_state();
      ++used;
    }
    mean /= static_cast<Scalar>(used);
    errors.push_back((mean - limit_end).norm());
  }
  // non-increasing with a 10% inversion allowance
  CHECK(errors[1] <= 1.10 * errors[0]);
  CHECK(errors[2] <= 1.10 * errors[1]);
}
