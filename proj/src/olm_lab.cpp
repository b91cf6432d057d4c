#include "sgdlim/olm_lab.hpp"

#include "sgdlim/rng.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

namespace sgdlim {

Scalar regularizer(const OlmProblem& p, const Vector& x) {
  const Index d = p.d_params();
  return p.column_weights().dot(x.head(d).array().square().matrix() +
                                x.tail(d).array().square().matrix());
}

Vector regularizer_gradient(const OlmProblem& p, const Vector& x) {
  const Index d = p.d_params();
  Vector g(2 * d);
  g.head(d) = 2 * p.column_weights().cwiseProduct(x.head(d));
  g.tail(d) = 2 * p.column_weights().cwiseProduct(x.tail(d));
  return g;
}

namespace {

// Pseudo-inverse of the Gram matrix G^T G; rank-aware for n > rank cases.
Matrix gram_pinv(const Matrix& G) {
  return pseudo_inverse(spectral_decompose(G.transpose() * G));
}

}  // namespace

Vector lagrangian_F(const OlmProblem& p, const Vector& x) {
  const Vector gradR = regularizer_gradient(p, x);
  if (p.n_samples() == 0) return gradR;
  const Matrix G = p.output_gradients(x);
  // (I - G G^+) gradR = gradR - G (G^T G)^+ G^T gradR
  return gradR - G * (gram_pinv(G) * (G.transpose() * gradR));
}

FlowState make_flow_state(const OlmProblem& p, const Vector& x,
                          Scalar feas_tol) {
  const Vector residual = p.outputs(x) - p.labels();
  if (residual.norm() > feas_tol * std::max(p.labels().norm(), Scalar(1)))
    throw NotOnManifoldError("make_flow_state: constraints violated by " +
                             std::to_string(residual.norm()));
  const Index d = p.d_params();
  return FlowState{x, x.head(d).cwiseProduct(x.tail(d)), p.column_weights()};
}

Scalar default_flow_horizon(const OlmProblem& p, const Vector& x0,
                            Scalar target_uv) {
  const Index d = p.d_params();
  const Scalar max_uv =
      x0.head(d).cwiseProduct(x0.tail(d)).cwiseAbs().maxCoeff();
  const Scalar s_min = p.column_weights().minCoeff();
  if (s_min <= 0) throw DomainError("default_flow_horizon: zero decay rate");
  return (3.0 / s_min) * std::log(std::max(max_uv, Scalar(1)) / target_uv);
}

Scalar default_flow_step(const OlmProblem& p) {
  return std::min(Scalar(0.05), 0.25 / p.column_weights().maxCoeff());
}

Trajectory riemannian_flow(const OlmProblem& p, const Vector& x0, Scalar T,
                           Scalar dt, const RiemannianFlowOptions& opts) {
  if (dt <= 0 || T <= 0)
    throw DomainError("riemannian_flow: need dt > 0 and T > 0");
  {
    const ManifoldDiagnostics diag = on_manifold(p, x0);
    if (!diag.ok)
      throw NotOnManifoldError("riemannian_flow: " + diag.message);
  }
  auto field = [&](const Vector& y) -> Vector {
    return -0.25 * lagrangian_F(p, y);
  };
  const Scalar y_scale = std::max(p.labels().norm(), Scalar(1));

  Trajectory traj;
  Vector x = x0;
  traj.push(0.0, x, regularizer(p, x), lagrangian_F(p, x).norm());
  const Index n_steps = static_cast<Index>(std::llround(T / dt));
  Index last_recorded = 0;
  Index k = 0;
  for (; k < n_steps; ++k) {
    const Vector k1 = field(x);
    if (4.0 * k1.norm() <= opts.stop_F_tol) break;
    const Vector k2 = field(x + 0.5 * dt * k1);
    const Vector k3 = field(x + 0.5 * dt * k2);
    const Vector k4 = field(x + dt * k3);
    x += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!x.allFinite() || x.norm() > kDivergenceThreshold)
      throw DivergenceError("riemannian_flow: state diverged");

    Vector residual = p.outputs(x) - p.labels();
    if (residual.norm() > opts.feas_trigger * y_scale) {
      // one Gauss-Newton step on the constraints
      const Matrix G = p.output_gradients(x);
      x -= G * (gram_pinv(G) * residual);
    }
    if ((k + 1) % opts.record_stride == 0) {
      traj.push(static_cast<Scalar>(k + 1) * dt, x, regularizer(p, x),
                lagrangian_F(p, x).norm());
      last_recorded = k + 1;
    }
  }
  if (last_recorded != k)
    traj.push(static_cast<Scalar>(k) * dt, x, regularizer(p, x),
              lagrangian_F(p, x).norm());
  return traj;
}

namespace {

Vector affine_projection_matrix_apply(const Matrix& Zt_pinv_rows,
                                      const Matrix& Z, const Vector& w,
                                      const Vector& y) {
  return w - Zt_pinv_rows * (Z * w - y);
}

struct Certificate {
  bool ok = false;
  Scalar margin = 0;
};

Certificate check_dual_certificate(const OlmProblem& p, const Vector& w_hat) {
  const Matrix& Z = p.data();
  const Vector& a = p.column_weights();
  const Index d = p.d_params();
  const Scalar w_scale = std::max(w_hat.cwiseAbs().maxCoeff(), Scalar(1));
  std::vector<Index> support;
  for (Index j = 0; j < d; ++j)
    if (std::abs(w_hat[j]) > 1e-8 * w_scale) support.push_back(j);

  Vector lambda = Vector::Zero(p.n_samples());
  if (!support.empty()) {
    const Index s = static_cast<Index>(support.size());
    Matrix Zs(p.n_samples(), s);
    Vector target(s);
    for (Index k = 0; k < s; ++k) {
      Zs.col(k) = Z.col(support[static_cast<size_t>(k)]);
      target[k] = -(w_hat[support[static_cast<size_t>(k)]] > 0 ? 1.0 : -1.0) *
                  a[support[static_cast<size_t>(k)]];
    }
    // min-norm least-squares multiplier: Z_S^T lambda = target
    lambda = Zs * (pseudo_inverse(spectral_decompose(Zs.transpose() * Zs)) *
                   target);
    const Scalar eq_residual =
        (Zs.transpose() * lambda - target).cwiseAbs().maxCoeff();
    if (eq_residual > 1e-8 * std::max(a.maxCoeff(), Scalar(1))) return {};
  }

  const Vector Ztl = Z.transpose() * lambda;
  Certificate cert;
  cert.ok = true;
  cert.margin = std::numeric_limits<Scalar>::infinity();
  for (Index j = 0; j < d; ++j) {
    const bool on_support =
        std::abs(w_hat[j]) > 1e-8 * w_scale;
    if (on_support) continue;
    const Scalar slack = a[j] - std::abs(Ztl[j]);
    cert.margin = std::min(cert.margin, slack);
    if (slack < -1e-8 * std::max(a[j], Scalar(1))) cert.ok = false;
  }
  if (!std::isfinite(cert.margin)) cert.margin = 0;  // full support
  return cert;
}

}  // namespace

ConvexOracleResult convex_oracle(const OlmProblem& p, Index max_iter,
                                 Scalar tol) {
  const Matrix& Z = p.data();
  const Vector& y = p.labels();
  const Vector& a = p.column_weights();
  const Index d = p.d_params();
  if (p.n_samples() < 1)
    throw DomainError("convex_oracle: need at least one constraint");

  const Matrix ZZt_pinv = pseudo_inverse(spectral_decompose(Z * Z.transpose()));
  const Matrix Zt_proj = Z.transpose() * ZZt_pinv;  // d x n
  auto project = [&](const Vector& w) -> Vector {
    return affine_projection_matrix_apply(Zt_proj, Z, w, y);
  };
  auto objective = [&](const Vector& w) -> Scalar {
    return a.dot(w.cwiseAbs());
  };

  Vector w = project(Vector::Zero(d));  // min-norm feasible start
  Vector w_best = w;
  Scalar f_best = objective(w);
  const Scalar f_scale = std::max(f_best, Scalar(1));

  ConvexOracleResult res;
  for (Index k = 0; k < max_iter; ++k) {
    Vector g(d);
    for (Index j = 0; j < d; ++j)
      g[j] = w[j] > 0 ? a[j] : (w[j] < 0 ? -a[j] : 0.0);
    Vector gp = g - Zt_proj * (Z * g);  // subgradient projected to ker(Z)
    const Scalar gp_norm2 = gp.squaredNorm();
    if (gp_norm2 < 1e-24) break;
    // Polyak-style step against the best value seen, with a decaying slack.
    const Scalar slack =
        0.1 * f_scale / std::sqrt(static_cast<Scalar>(k + 1));
    const Scalar step =
        (objective(w) - f_best + slack) / gp_norm2;
    w -= step * gp;
    if ((k + 1) % 50 == 0) w = project(w);
    const Scalar f = objective(w);
    if (f < f_best) {
      f_best = f;
      w_best = w;
    }
    res.iterations = k + 1;
  }
  w_best = project(w_best);
  f_best = objective(w_best);

  // Support polish: least squares on detected supports at a few thresholds.
  const Scalar w_scale = std::max(w_best.cwiseAbs().maxCoeff(), Scalar(1e-12));
  for (const Scalar frac : {1e-2, 1e-3, 1e-4}) {
    std::vector<Index> support;
    for (Index j = 0; j < d; ++j)
      if (std::abs(w_best[j]) > frac * w_scale) support.push_back(j);
    if (support.empty() || static_cast<Index>(support.size()) > p.n_samples())
      continue;
    const Index s = static_cast<Index>(support.size());
    Matrix Zs(p.n_samples(), s);
    for (Index k = 0; k < s; ++k)
      Zs.col(k) = Z.col(support[static_cast<size_t>(k)]);
    const Vector ws =
        pseudo_inverse(spectral_decompose(Zs.transpose() * Zs)) *
        (Zs.transpose() * y);
    if ((Zs * ws - y).norm() > 1e-9 * std::max(y.norm(), Scalar(1))) continue;
    Vector cand = Vector::Zero(d);
    for (Index k = 0; k < s; ++k) cand[support[static_cast<size_t>(k)]] = ws[k];
    if (objective(cand) <= f_best + tol * f_scale) {
      w_best = cand;
      f_best = objective(cand);
    }
  }

  res.w_hat = w_best;
  res.objective = f_best;
  const Certificate cert = check_dual_certificate(p, w_best);
  res.certificate_ok = cert.ok;
  res.certificate_margin = cert.margin;
  return res;
}

std::string to_string(RecoveryMode mode) {
  return mode == RecoveryMode::kFlow ? "flow" : "sgd";
}

RecoveryReport run_recovery(const OlmProblem& p, const RecoveryConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  const Index D = p.dim();

  std::mt19937_64 rng = seeded_rng(cfg.seed);
  std::uniform_real_distribution<Scalar> mag(0.5, 1.5);
  std::bernoulli_distribution sign(0.5);
  Vector x_init(D);
  for (Index i = 0; i < D; ++i)
    x_init[i] = (sign(rng) ? 1.0 : -1.0) * mag(rng);

  FlowConfig proj_cfg;
  proj_cfg.grad_stop = 1e-11;
  const Vector x0 = phi_limit(p, x_init, proj_cfg);

  const Scalar T = cfg.T > 0 ? cfg.T : default_flow_horizon(p, x0);
  Vector x_final;
  if (cfg.mode == RecoveryMode::kFlow) {
    const Scalar dt = cfg.dt > 0 ? cfg.dt : default_flow_step(p);
    RiemannianFlowOptions opts;
    opts.record_stride = 1 << 30;  // endpoint only
    x_final = riemannian_flow(p, x0, T, dt, opts).back_state();
  } else {
    SgdConfig sgd;
    sgd.eta = cfg.eta;
    sgd.steps = std::max<Index>(
        1, static_cast<Index>(std::floor(T / (cfg.eta * cfg.eta) + 1e-9)));
    sgd.seed = cfg.seed + 0x9e3779b97f4a7c15ull;
    sgd.record_stride = sgd.steps;
    const LabelNoise noise(p, cfg.delta);
    x_final = sgd_run(p, noise, sgd, x0).back_state();
  }

  RecoveryReport report;
  report.mode = cfg.mode;
  report.x_final = x_final;
  report.w_final = p.effective_param(x_final);
  report.linf_error =
      (report.w_final - p.groundtruth()).cwiseAbs().maxCoeff();
  report.reg_final = regularizer(p, x_final);
  report.reg_groundtruth = regularizer(p, canonical_param(p.groundtruth()));

  const ConvexOracleResult oracle = convex_oracle(p);
  report.oracle_linf_gap =
      (report.w_final - oracle.w_hat).cwiseAbs().maxCoeff();
  report.oracle_agreement = report.oracle_linf_gap <= cfg.eps;
  report.dual_certificate_ok = oracle.certificate_ok;
  report.wallclock_seconds =
      std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

std::string report_to_json(const RecoveryReport& report) {
  nlohmann::json j;
  j["mode"] = to_string(report.mode);
  j["w_final"] = std::vector<Scalar>(report.w_final.begin(),
                                     report.w_final.end());
  j["linf_error"] = report.linf_error;
  j["regularizer_final"] = report.reg_final;
  j["regularizer_groundtruth"] = report.reg_groundtruth;
  j["oracle_agreement"] = report.oracle_agreement;
  j["oracle_linf_gap"] = report.oracle_linf_gap;
  j["dual_certificate_ok"] = report.dual_certificate_ok;
  j["wallclock_seconds"] = report.wallclock_seconds;
  return j.dump(2);
}

KernelBaselineResult gd_kernel_baseline(const OlmProblem& p, Index trials,
                                        std::uint64_t seed) {
  if (p.n_samples() > p.d_params())
    throw DomainError("gd_kernel_baseline: requires n <= d");
  const Index d = p.d_params();
  Matrix P = Matrix::Zero(d, d);
  if (p.n_samples() > 0) {
    const Matrix& Z = p.data();
    P = Z.transpose() *
        pseudo_inverse(spectral_decompose(Z * Z.transpose())) * Z;
  }
  const Scalar radius = p.groundtruth().norm();
  std::mt19937_64 rng = seeded_rng(seed);
  KernelBaselineResult res;
  res.trial_losses.reserve(static_cast<size_t>(trials));
  for (Index t = 0; t < trials; ++t) {
    Vector w = standard_normal(d, rng);
    w *= radius / w.norm();
    const Scalar loss = (w - P * w).squaredNorm();
    res.trial_losses.push_back(loss);
    res.mean_loss += loss;
  }
  if (trials > 0) res.mean_loss /= static_cast<Scalar>(trials);
  return res;
}

}  // namespace sgdlim
