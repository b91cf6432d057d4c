#include "sgdlim/flow.hpp"

#include "sgdlim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgdlim {

void Trajectory::push(Scalar t, const Vector& x, Scalar loss, Scalar grad_norm) {
  times.push_back(t);
  states.push_back(x);
  losses.push_back(loss);
  grad_norms.push_back(grad_norm);
}

namespace {

// Largest Hessian eigenvalue by power iteration, for the stability step cap.
Scalar estimate_lambda_max(const LossModel& loss, const Vector& x) {
  const Matrix H = loss.hessian(x);
  Vector v = Vector::Ones(loss.dim()).normalized();
  Scalar lam = 0;
  for (int it = 0; it < 40; ++it) {
    Vector w = H * v;
    const Scalar norm = w.norm();
    if (norm < 1e-300) return 0;
    v = w / norm;
    lam = norm;
  }
  return lam;
}

struct Dp45Result {
  Vector x_new;
  Scalar err_ratio;  // scaled error; accept when <= 1
};

// Dormand-Prince 5(4) pair with FSAL; k1 is the derivative at x, k_last is
// returned for reuse as the next step's k1.
Dp45Result dp45_step(const LossModel& loss, const Vector& x, const Vector& k1,
                     Scalar h, Scalar abs_tol, Scalar rel_tol, Vector& k_last) {
  static constexpr Scalar a21 = 1.0 / 5;
  static constexpr Scalar a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr Scalar a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr Scalar a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr Scalar a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr Scalar b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr Scalar e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  auto f = [&](const Vector& y) -> Vector { return -loss.gradient(y); };

  const Vector k2 = f(x + h * (a21 * k1));
  const Vector k3 = f(x + h * (a31 * k1 + a32 * k2));
  const Vector k4 = f(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const Vector k5 = f(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const Vector k6 =
      f(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  Dp45Result res;
  res.x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const Vector k7 = f(res.x_new);
  const Vector err =
      h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

  Scalar ratio = 0;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar sc =
        abs_tol + rel_tol * std::max(std::abs(x[i]), std::abs(res.x_new[i]));
    ratio = std::max(ratio, std::abs(err[i]) / sc);
  }
  res.err_ratio = ratio;
  k_last = k7;
  return res;
}

Trajectory flow_rk45(const LossModel& loss, const Vector& x0,
                     const FlowConfig& cfg) {
  Trajectory traj;
  Vector x = x0;
  Vector grad = loss.gradient(x);
  Scalar t = 0;
  traj.push(t, x, loss.value(x), grad.norm());
  if (grad.norm() <= cfg.grad_stop) return traj;

  Scalar lam_max = estimate_lambda_max(loss, x);
  auto step_cap = [&]() {
    return lam_max > 0 ? 2.0 / lam_max : std::numeric_limits<Scalar>::infinity();
  };

  Scalar h = std::min(Scalar(1e-3), step_cap());
  Scalar loss_val = traj.losses.back();
  Index accepted = 0;
  Index last_recorded = 0;
  Vector k1 = -grad, k_last(x.size());
  auto bail = [&](const std::string& why) -> NonConvergedError {
    if (last_recorded != accepted) traj.push(t, x, loss_val, grad.norm());
    return NonConvergedError(why, std::move(traj));
  };
  for (Index steps = 0; steps < cfg.max_steps; ++steps) {
    if (t >= cfg.t_max)
      throw bail("flow: t_max reached with |grad| = " +
                 std::to_string(grad.norm()));
    h = std::min({h, step_cap(), cfg.t_max - t});
    const Dp45Result res =
        dp45_step(loss, x, k1, h, cfg.abs_tol, cfg.rel_tol, k_last);
    const Scalar new_loss = loss.value(res.x_new);
    if (res.err_ratio > 1.0 || new_loss > loss_val + 1e-8 ||
        !res.x_new.allFinite()) {
      const Scalar shrink =
          res.err_ratio > 1.0
              ? std::max(Scalar(0.2), Scalar(0.9) * std::pow(res.err_ratio, -0.2))
              : Scalar(0.5);
      h *= shrink;
      if (h < 1e-15) throw bail("flow: step size underflow");
      continue;
    }

    t += h;
    x = res.x_new;
    k1 = k_last;  // FSAL
    grad = -k1;
    loss_val = new_loss;
    ++accepted;
    if (accepted % cfg.record_stride == 0) {
      traj.push(t, x, loss_val, grad.norm());
      last_recorded = accepted;
    }
    if (grad.norm() <= cfg.grad_stop) {
      if (last_recorded != accepted) traj.push(t, x, loss_val, grad.norm());
      return traj;
    }
    if (accepted % 50 == 0) lam_max = estimate_lambda_max(loss, x);
    const Scalar grow =
        res.err_ratio > 0
            ? std::min(Scalar(5), Scalar(0.9) * std::pow(res.err_ratio, -0.2))
            : Scalar(5);
    h *= std::max(grow, Scalar(0.2));
  }
  throw bail("flow: max step count reached");
}

Trajectory flow_rk4(const LossModel& loss, const Vector& x0,
                    const FlowConfig& cfg) {
  Trajectory traj;
  Vector x = x0;
  Scalar t = 0;
  auto f = [&](const Vector& y) -> Vector { return -loss.gradient(y); };
  Vector grad = loss.gradient(x);
  traj.push(t, x, loss.value(x), grad.norm());
  Scalar h = cfg.dt;
  Scalar loss_val = traj.losses.back();
  auto bail = [&](const std::string& why) -> NonConvergedError {
    if (traj.times.back() < t) traj.push(t, x, loss_val, grad.norm());
    return NonConvergedError(why, std::move(traj));
  };
  for (Index step = 0; step < cfg.max_steps; ++step) {
    if (grad.norm() <= cfg.grad_stop) {
      if (traj.times.back() < t) traj.push(t, x, loss_val, grad.norm());
      return traj;
    }
    if (t >= cfg.t_max)
      throw bail("flow(rk4): t_max reached with |grad| = " +
                 std::to_string(grad.norm()));
    const Vector k1 = -grad;
    const Vector k2 = f(x + 0.5 * h * k1);
    const Vector k3 = f(x + 0.5 * h * k2);
    const Vector k4 = f(x + h * k3);
    const Vector x_new = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    const Scalar new_loss = loss.value(x_new);
    if (new_loss > loss_val + 1e-8 || !x_new.allFinite()) {
      h *= 0.5;
      if (h < 1e-15) throw bail("flow(rk4): step size underflow");
      continue;
    }
    x = x_new;
    t += h;
    loss_val = new_loss;
    h = std::min(cfg.dt, 2 * h);
    grad = loss.gradient(x);
    if ((step + 1) % cfg.record_stride == 0 || grad.norm() <= cfg.grad_stop)
      traj.push(t, x, loss_val, grad.norm());
  }
  throw bail("flow(rk4): max step count reached");
}

}  // namespace

Trajectory flow(const LossModel& loss, const Vector& x0, const FlowConfig& cfg) {
  if (!x0.allFinite()) throw DomainError("flow: non-finite initial state");
  if (cfg.grad_stop <= 0 || cfg.t_max <= 0)
    throw DomainError("flow: grad_stop and t_max must be positive");
  return cfg.integrator == Integrator::kRk45Adaptive ? flow_rk45(loss, x0, cfg)
                                                     : flow_rk4(loss, x0, cfg);
}

Vector phi_limit(const LossModel& loss, const Vector& x0,
                 const FlowConfig& cfg) {
  FlowConfig c = cfg;
  c.record_stride = std::numeric_limits<Index>::max() / 2;  // endpoint only

  // Integrate into the linear regime, then polish with rank-aware Newton
  // steps x <- x - H^+ grad L, which agree with the flow limit to
  // O(|grad L|^2) and sidestep the stiff tail (the explicit step cap 2/L_max
  // makes small-lambda_min instances crawl).
  constexpr Scalar kNewtonEntry = 1e-6;
  const Scalar entry = std::max(cfg.grad_stop, kNewtonEntry);
  c.grad_stop = entry;
  Vector x = flow(loss, x0, c).back_state();
  if (entry <= cfg.grad_stop) return x;

  Vector grad = loss.gradient(x);
  for (int it = 0; it < 12 && grad.norm() > cfg.grad_stop; ++it) {
    SpectralDecomposition dec;
    try {
      dec = with_forced_rank(spectral_decompose(loss.hessian(x)),
                             loss.manifold_rank());
    } catch (const NumericalError&) {
      break;  // rank structure not resolvable here; let the flow finish
    }
    const Vector x_new = x - pseudo_inverse(dec) * grad;
    const Vector grad_new = loss.gradient(x_new);
    if (!x_new.allFinite() || grad_new.norm() > 0.9 * grad.norm()) break;
    x = x_new;
    grad = grad_new;
  }
  if (grad.norm() <= cfg.grad_stop) return x;

  FlowConfig strict = cfg;
  strict.record_stride = std::numeric_limits<Index>::max() / 2;
  return flow(loss, x, strict).back_state();
}

ManifoldDiagnostics on_manifold(const LossModel& loss, const Vector& x,
                                Scalar grad_tol, Scalar rank_rel_tol) {
  ManifoldDiagnostics diag;
  diag.expected_rank = loss.manifold_rank();
  diag.grad_norm = loss.gradient(x).norm();
  const SpectralDecomposition dec =
      spectral_decompose(loss.hessian(x), rank_rel_tol);
  diag.numerical_rank = dec.rank;
  diag.min_positive_eigenvalue = 0;
  for (Index i = 0; i < dec.dim(); ++i)
    if (dec.above_cutoff(i)) {
      // ascending order: first above-cutoff eigenvalue can still be negative
      diag.min_positive_eigenvalue = dec.eigenvalues[i];
      break;
    }
  if (diag.grad_norm > grad_tol) {
    diag.message = "gradient norm " + std::to_string(diag.grad_norm) +
                   " exceeds tolerance";
  } else if (diag.numerical_rank != diag.expected_rank) {
    diag.message = "Hessian rank " + std::to_string(diag.numerical_rank) +
                   " != expected " + std::to_string(diag.expected_rank);
  } else if (diag.expected_rank > 0 && diag.min_positive_eigenvalue <= 0) {
    diag.message = "smallest above-cutoff eigenvalue is not positive";
  } else {
    diag.ok = true;
  }
  return diag;
}

}  // namespace sgdlim
