#include "sgdlim/cli.hpp"

#include "sgdlim/rng.hpp"

#include "sgdlim/ensemble.hpp"
#include "sgdlim/olm_lab.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sgdlim::cli {

namespace {

namespace fs = std::filesystem;

std::string path_in(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "'");
}

std::vector<std::uint64_t> seed_range(std::uint64_t base, Index count) {
  std::vector<std::uint64_t> seeds(static_cast<size_t>(count));
  for (Index i = 0; i < count; ++i)
    seeds[static_cast<size_t>(i)] = base + static_cast<std::uint64_t>(i);
  return seeds;
}

// Continuous angle advance of the first two coordinates along a path.
Scalar angle_advance(const Trajectory& traj) {
  Scalar total = 0;
  for (size_t i = 1; i < traj.size(); ++i) {
    const auto& a = traj.states[i - 1];
    const auto& b = traj.states[i];
    Scalar d = std::atan2(b[1], b[0]) - std::atan2(a[1], a[0]);
    while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
    while (d < -std::numbers::pi) d += 2 * std::numbers::pi;
    total += d;
  }
  return total;
}

}  // namespace

int cmd_verify_derivatives(const ConfigMap& cfg, const std::string& out_dir) {
  cfg.validate_keys({"seed", "points", "tol_first", "tol_second", "olm_d",
                     "olm_n", "olm_kappa", "motor_dim", "fd_step"});
  const std::uint64_t seed = cfg.get_u64("seed", 7);
  const Index points = cfg.get_int("points", 5);
  const Scalar tol_first = cfg.get_real("tol_first", 1e-4);
  const Scalar tol_second = cfg.get_real("tol_second", 1e-3);
  const Index olm_d = cfg.get_int("olm_d", 3);
  const Index olm_n = cfg.get_int("olm_n", 2);
  const Index olm_kappa = cfg.get_int("olm_kappa", 1);
  const Index motor_dim = cfg.get_int("motor_dim", 5);
  const Scalar h = cfg.get_real("fd_step", 1e-3);
  ensure_out_dir(out_dir);

  struct Check {
    std::string name;
    Scalar max_err = 0;
    Scalar tol = 0;
  };
  std::vector<Check> checks;

  auto run_gate = [&](const LossModel& loss, const std::string& tag,
                      const std::vector<Vector>& pts, std::mt19937_64& rng) {
    Check first{tag + ".dphi_vs_fd", 0, tol_first};
    Check second{tag + ".d2phi_vs_fd", 0, tol_second};
    for (const Vector& x : pts) {
      const Matrix closed = dphi(loss, x);
      const Matrix fd = dphi_fd(loss, x, h);
      first.max_err =
          std::max(first.max_err, (closed - fd).cwiseAbs().maxCoeff());

      Matrix W(loss.dim(), loss.dim());
      for (Index i = 0; i < loss.dim(); ++i)
        for (Index j = 0; j < loss.dim(); ++j)
          W(i, j) = std::uniform_real_distribution<Scalar>(-1, 1)(rng);
      const Matrix Sigma = W * W.transpose() / static_cast<Scalar>(loss.dim());
      const Vector closed2 = d2phi_contract(loss, x, Sigma);
      const Vector fd2 = d2phi_fd(loss, x, Sigma, h);
      const Scalar scale = std::max(closed2.cwiseAbs().maxCoeff(), Scalar(1));
      second.max_err = std::max(
          second.max_err, (closed2 - fd2).cwiseAbs().maxCoeff() / scale);
    }
    checks.push_back(first);
    checks.push_back(second);
  };

  try {
    std::mt19937_64 rng = seeded_rng(seed);
    const OlmProblem olm =
        olm_generate(olm_n, olm_d, olm_kappa, DataDist::kGaussian, seed);
    std::vector<Vector> olm_pts;
    FlowConfig proj;
    proj.grad_stop = 1e-11;
    std::uniform_real_distribution<Scalar> mag(0.5, 1.5);
    std::bernoulli_distribution coin(0.5);
    for (Index p = 0; p < points; ++p) {
      Vector x(olm.dim());
      for (Index i = 0; i < olm.dim(); ++i)
        x[i] = (coin(rng) ? 1.0 : -1.0) * mag(rng);
      olm_pts.push_back(phi_limit(olm, x, proj));
    }
    run_gate(olm, "olm", olm_pts, rng);

    const MotorProblem motor(motor_dim);
    std::vector<Vector> motor_pts;
    std::uniform_real_distribution<Scalar> angle(0, 2 * std::numbers::pi);
    for (Index p = 0; p < points; ++p)
      motor_pts.push_back(motor.circle_point(angle(rng)));
    run_gate(motor, "motor", motor_pts, rng);
  } catch (const ConfigError&) {
    throw;
  } catch (const NumericalError& err) {
    write_text_file(path_in(out_dir, "verify_derivatives.txt"),
                    std::string("numerical failure: ") + err.what() + "\n");
    std::fprintf(stderr, "verify-derivatives: %s\n", err.what());
    return kExitNumerical;
  }

  std::ostringstream report;
  report << output_header(cfg, {seed});
  report << "check,max_error,tolerance,status\n";
  std::string first_failure;
  for (const Check& c : checks) {
    const bool ok = c.max_err <= c.tol;
    if (!ok && first_failure.empty()) first_failure = c.name;
    report << c.name << ',' << fmt_g17(c.max_err) << ',' << fmt_g17(c.tol)
           << ',' << (ok ? "pass" : "FAIL") << '\n';
  }
  write_text_file(path_in(out_dir, "verify_derivatives.txt"), report.str());
  std::fputs(report.str().c_str(), stdout);
  if (!first_failure.empty()) {
    std::fprintf(stderr, "verify-derivatives: first failing check: %s\n",
                 first_failure.c_str());
    return kExitCheckFailure;
  }
  return kExitOk;
}

int cmd_motor(const ConfigMap& cfg, const std::string& out_dir) {
  cfg.validate_keys(
      {"seed", "dim", "T", "dt", "n_seeds", "retraction_every", "record_stride"});
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const Index dim = cfg.get_int("dim", 5);
  const Scalar T = cfg.get_real("T", 1.0);
  const Scalar dt = cfg.get_real("dt", 1e-3);
  const Index n_seeds = cfg.get_int("n_seeds", 200);
  const Index retraction_every = cfg.get_int("retraction_every", 20);
  const Index record_stride = cfg.get_int("record_stride", 10);
  ensure_out_dir(out_dir);

  const MotorProblem motor(dim);
  const MotorNoise noise(motor);
  const Vector x0 = motor.circle_point(0.0);
  const auto seeds = seed_range(seed, n_seeds);

  std::vector<Scalar> advances(static_cast<size_t>(n_seeds));
  std::vector<Scalar> max_aux(static_cast<size_t>(n_seeds));
  parallel_for_index(n_seeds, [&](Index i) {
    SdeConfig sde;
    sde.T = T;
    sde.dt = dt;
    sde.retraction_every = retraction_every;
    sde.seed = seeds[static_cast<size_t>(i)];
    sde.record_stride = record_stride;
    const Trajectory traj = simulate_limit_sde(motor, noise, x0, sde);
    advances[static_cast<size_t>(i)] = angle_advance(traj);
    Scalar aux = 0;
    for (const Vector& s : traj.states)
      aux = std::max(aux, s.tail(dim - 2).cwiseAbs().maxCoeff());
    max_aux[static_cast<size_t>(i)] = aux;
  });

  const std::string header = output_header(cfg, seeds);
  {
    std::ostringstream csv;
    csv << header << "seed,angle_advance,max_aux_abs\n";
    for (Index i = 0; i < n_seeds; ++i)
      csv << seeds[static_cast<size_t>(i)] << ','
          << fmt_g17(advances[static_cast<size_t>(i)]) << ','
          << fmt_g17(max_aux[static_cast<size_t>(i)]) << '\n';
    write_text_file(path_in(out_dir, "motor_ensemble.csv"), csv.str());
  }

  // One sample path for plotting.
  SdeConfig sde;
  sde.T = T;
  sde.dt = dt;
  sde.retraction_every = retraction_every;
  sde.seed = seed;
  sde.record_stride = record_stride;
  write_trajectory_csv(path_in(out_dir, "motor_trajectory.csv"),
                       simulate_limit_sde(motor, noise, x0, sde), header);

  Scalar mean_advance = 0;
  for (const Scalar a : advances) mean_advance += a;
  mean_advance /= static_cast<Scalar>(n_seeds);
  const Scalar expected = T * static_cast<Scalar>(dim - 2) / 2.0;

  std::ostringstream report;
  report << header;
  report << "mean_angle_advance=" << fmt_g17(mean_advance) << "\n";
  report << "mean_angular_speed=" << fmt_g17(mean_advance / T) << "\n";
  report << "expected_angle_advance=" << fmt_g17(expected) << "\n";
  report << "relative_error=" << fmt_g17(std::abs(mean_advance - expected) / expected)
         << "\n";
  write_text_file(path_in(out_dir, "motor_report.txt"), report.str());
  std::fputs(report.str().c_str(), stdout);

  std::ostringstream gp;
  gp << header;
  gp << "set datafile separator ','\n";
  gp << "set datafile commentschars '#'\n";
  gp << "set key autotitle columnhead\n";
  gp << "set xlabel 't'\nset ylabel 'x'\n";
  gp << "plot 'motor_trajectory.csv' using 1:2 with lines title 'x_1', \\\n";
  gp << "     'motor_trajectory.csv' using 1:3 with lines title 'x_2'\n";
  write_text_file(path_in(out_dir, "motor.gp"), gp.str());
  return kExitOk;
}

int cmd_olm_recover(const ConfigMap& cfg, const std::string& out_dir) {
  cfg.validate_keys({"seed", "d", "n_list", "kappa", "dist", "mode", "eta",
                     "delta", "eps", "n_seeds", "T", "dt", "mag_min",
                     "mag_max"});
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const Index d = cfg.get_int("d", 40);
  const std::vector<double> n_list = cfg.get_real_list("n_list", {60});
  const Index kappa = cfg.get_int("kappa", 3);
  const DataDist dist = data_dist_from_string(cfg.get_string("dist", "gaussian"));
  const std::string mode_str = cfg.get_string("mode", "flow");
  if (mode_str != "flow" && mode_str != "sgd")
    throw ConfigError("mode must be 'flow' or 'sgd'");
  const Index n_seeds = cfg.get_int("n_seeds", 10);
  const std::pair<Scalar, Scalar> mag_range{cfg.get_real("mag_min", 0.5),
                                            cfg.get_real("mag_max", 2.0)};

  RecoveryConfig rc;
  rc.mode = mode_str == "flow" ? RecoveryMode::kFlow : RecoveryMode::kSgd;
  rc.eps = cfg.get_real("eps", 1e-3);
  rc.eta = cfg.get_real("eta", 0.01);
  rc.delta = cfg.get_real("delta", 1.0);
  rc.T = cfg.get_real("T", -1.0);
  rc.dt = cfg.get_real("dt", -1.0);
  ensure_out_dir(out_dir);

  const auto seeds = seed_range(seed, n_seeds);
  std::ostringstream csv, jsonl;
  csv << output_header(cfg, seeds);
  csv << "seed,n,d,kappa,dist,mode,linf_error,oracle_linf_gap,"
         "oracle_agreement,dual_certificate_ok,reg_final,reg_groundtruth,"
         "recovered\n";
  try {
    for (const double n_real : n_list) {
      const Index n = static_cast<Index>(n_real);
      for (Index i = 0; i < n_seeds; ++i) {
        const std::uint64_t run_seed = seeds[static_cast<size_t>(i)] +
                                       1000000007ull * static_cast<std::uint64_t>(n);
        const OlmProblem p = olm_generate(n, d, kappa, dist, mag_range, run_seed);
        RecoveryConfig run_cfg = rc;
        run_cfg.seed = run_seed;
        const RecoveryReport report = run_recovery(p, run_cfg);
        const bool recovered = report.linf_error <= run_cfg.eps;
        csv << seeds[static_cast<size_t>(i)] << ',' << n << ',' << d << ','
            << kappa << ',' << to_string(dist) << ',' << mode_str << ','
            << fmt_g17(report.linf_error) << ','
            << fmt_g17(report.oracle_linf_gap) << ','
            << (report.oracle_agreement ? 1 : 0) << ','
            << (report.dual_certificate_ok ? 1 : 0) << ','
            << fmt_g17(report.reg_final) << ','
            << fmt_g17(report.reg_groundtruth) << ',' << (recovered ? 1 : 0)
            << '\n';
        jsonl << report_to_json(report) << '\n';
      }
    }
  } catch (const NumericalError& err) {
    std::fprintf(stderr, "olm-recover: %s\n", err.what());
    return kExitNumerical;
  }
  write_text_file(path_in(out_dir, "olm_recovery.csv"), csv.str());
  write_text_file(path_in(out_dir, "olm_recovery_reports.jsonl"), jsonl.str());

  std::ostringstream gp;
  gp << output_header(cfg, seeds);
  gp << "set datafile separator ','\n";
  gp << "set datafile commentschars '#'\n";
  gp << "set xlabel 'n'\nset ylabel 'recovered fraction'\n";
  gp << "plot 'olm_recovery.csv' using 2:13 smooth unique with linespoints "
        "title 'success rate'\n";
  write_text_file(path_in(out_dir, "olm_recover.gp"), gp.str());
  std::fputs(csv.str().c_str(), stdout);
  return kExitOk;
}

int cmd_olm_flow(const ConfigMap& cfg, const std::string& out_dir) {
  cfg.validate_keys({"seed", "d", "n", "kappa", "dist", "T", "dt",
                     "record_stride", "mag_min", "mag_max"});
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const Index d = cfg.get_int("d", 6);
  const Index n = cfg.get_int("n", 8);
  const Index kappa = cfg.get_int("kappa", 2);
  const DataDist dist = data_dist_from_string(cfg.get_string("dist", "gaussian"));
  const std::pair<Scalar, Scalar> mag_range{cfg.get_real("mag_min", 0.5),
                                            cfg.get_real("mag_max", 2.0)};
  ensure_out_dir(out_dir);

  try {
    const OlmProblem p = olm_generate(n, d, kappa, dist, mag_range, seed);
    std::mt19937_64 rng = seeded_rng(seed);
    std::uniform_real_distribution<Scalar> mag(0.5, 1.5);
    std::bernoulli_distribution coin(0.5);
    Vector x_init(p.dim());
    for (Index i = 0; i < p.dim(); ++i)
      x_init[i] = (coin(rng) ? 1.0 : -1.0) * mag(rng);
    FlowConfig proj;
    proj.grad_stop = 1e-11;
    const Vector x0 = phi_limit(p, x_init, proj);

    const Scalar T = cfg.get_real("T", default_flow_horizon(p, x0));
    const Scalar dt = cfg.get_real("dt", default_flow_step(p));
    RiemannianFlowOptions opts;
    opts.record_stride = cfg.get_int("record_stride", 1);
    const Trajectory traj = riemannian_flow(p, x0, T, dt, opts);

    const std::string header = output_header(cfg, {seed});
    write_trajectory_csv(path_in(out_dir, "olm_flow_trajectory.csv"), traj,
                         header);

    // Fitted decay slopes of ln|u_j v_j| over the first 3/s_j time units.
    std::ostringstream slopes;
    slopes << header << "j,s_j,fitted_slope,relative_error\n";
    for (Index j = 0; j < d; ++j) {
      const Scalar s_j = p.column_weights()[j];
      const Scalar window = 3.0 / s_j;
      Scalar sum_t = 0, sum_y = 0, sum_tt = 0, sum_ty = 0;
      Index m = 0;
      for (size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] > window) break;
        const Scalar uv =
            traj.states[k][j] * traj.states[k][d + j];
        if (std::abs(uv) < 1e-300) break;
        const Scalar ln_uv = std::log(std::abs(uv));
        sum_t += traj.times[k];
        sum_y += ln_uv;
        sum_tt += traj.times[k] * traj.times[k];
        sum_ty += traj.times[k] * ln_uv;
        ++m;
      }
      Scalar slope = 0;
      if (m >= 2) {
        const Scalar denom = static_cast<Scalar>(m) * sum_tt - sum_t * sum_t;
        slope = (static_cast<Scalar>(m) * sum_ty - sum_t * sum_y) / denom;
      }
      slopes << j << ',' << fmt_g17(s_j) << ',' << fmt_g17(slope) << ','
             << fmt_g17(std::abs(slope + s_j) / s_j) << '\n';
    }
    write_text_file(path_in(out_dir, "olm_flow_uv_slopes.csv"), slopes.str());
    std::fputs(slopes.str().c_str(), stdout);

    std::ostringstream gp;
    gp << header;
    gp << "set datafile separator ','\n";
    gp << "set datafile commentschars '#'\n";
    gp << "set xlabel 't'\nset ylabel 'R(x)'\nset logscale y\n";
    gp << "plot 'olm_flow_trajectory.csv' using 1:" << (p.dim() + 2)
       << " with lines title 'regularizer'\n";
    write_text_file(path_in(out_dir, "olm_flow.gp"), gp.str());
  } catch (const NumericalError& err) {
    std::fprintf(stderr, "olm-flow: %s\n", err.what());
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_sgd_vs_limit(const ConfigMap& cfg, const std::string& out_dir) {
  cfg.validate_keys({"seed", "dim", "T", "etas", "seeds_per_eta", "ref_seeds",
                     "ref_dt", "retraction_every"});
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const Index dim = cfg.get_int("dim", 5);
  SweepConfig sweep;
  sweep.T = cfg.get_real("T", 1.0);
  const std::vector<double> etas = cfg.get_real_list("etas", {0.02, 0.01, 0.005});
  sweep.etas.assign(etas.begin(), etas.end());
  sweep.seeds_per_eta = cfg.get_int("seeds_per_eta", 200);
  sweep.ref_seeds = cfg.get_int("ref_seeds", 200);
  sweep.ref_dt = cfg.get_real("ref_dt", 1e-3);
  sweep.retraction_every = cfg.get_int("retraction_every", 20);
  sweep.base_seed = seed;
  ensure_out_dir(out_dir);

  const MotorProblem motor(dim);
  const MotorNoise noise(motor);
  const Vector x0 = motor.circle_point(0.0);

  std::vector<SweepRow> rows;
  try {
    rows = convergence_sweep(motor, noise, x0, sweep);
  } catch (const NumericalError& err) {
    std::fprintf(stderr, "sgd-vs-limit: %s\n", err.what());
    return kExitNumerical;
  }

  std::ostringstream csv;
  csv << output_header(cfg, {seed});
  csv << "eta,steps,n_seeds,n_diverged,mean_dist,cov_fro_dist,sw1\n";
  for (const SweepRow& r : rows)
    csv << fmt_g17(r.eta) << ',' << r.steps << ',' << r.n_seeds << ','
        << r.n_diverged << ',' << fmt_g17(r.mean_dist) << ','
        << fmt_g17(r.cov_fro_dist) << ',' << fmt_g17(r.sw1) << '\n';
  write_text_file(path_in(out_dir, "sgd_vs_limit.csv"), csv.str());
  std::fputs(csv.str().c_str(), stdout);

  std::ostringstream gp;
  gp << output_header(cfg, {seed});
  gp << "set datafile separator ','\n";
  gp << "set datafile commentschars '#'\n";
  gp << "set logscale x\nset xlabel 'eta'\nset ylabel 'distance to limit'\n";
  gp << "plot 'sgd_vs_limit.csv' using 1:7 with linespoints title 'sw1', \\\n";
  gp << "     'sgd_vs_limit.csv' using 1:5 with linespoints title 'mean'\n";
  write_text_file(path_in(out_dir, "sgd_vs_limit.gp"), gp.str());
  return kExitOk;
}

int cmd_kernel_baseline(const ConfigMap& cfg, const std::string& out_dir) {
  cfg.validate_keys({"seed", "d", "n", "kappa", "dist", "trials"});
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const Index d = cfg.get_int("d", 40);
  const Index n = cfg.get_int("n", 10);
  const Index kappa = cfg.get_int("kappa", 3);
  const Index trials = cfg.get_int("trials", 200);
  const DataDist dist = data_dist_from_string(cfg.get_string("dist", "gaussian"));
  ensure_out_dir(out_dir);

  try {
    const OlmProblem p = olm_generate(n, d, kappa, dist, seed);
    const KernelBaselineResult res = gd_kernel_baseline(p, trials, seed + 17);
    const Scalar w_norm2 = p.groundtruth().squaredNorm();

    std::ostringstream csv;
    csv << output_header(cfg, {seed});
    csv << "trial,test_loss,test_loss_over_wstar_norm2\n";
    for (size_t i = 0; i < res.trial_losses.size(); ++i)
      csv << i << ',' << fmt_g17(res.trial_losses[i]) << ','
          << fmt_g17(res.trial_losses[i] / w_norm2) << '\n';
    write_text_file(path_in(out_dir, "kernel_baseline.csv"), csv.str());

    std::ostringstream report;
    report << output_header(cfg, {seed});
    report << "mean_test_loss=" << fmt_g17(res.mean_loss) << "\n";
    report << "mean_loss_ratio=" << fmt_g17(res.mean_loss / w_norm2) << "\n";
    report << "expected_ratio=" << fmt_g17(1.0 - static_cast<Scalar>(n) /
                                                     static_cast<Scalar>(d))
           << "\n";
    write_text_file(path_in(out_dir, "kernel_baseline_report.txt"),
                    report.str());
    std::fputs(report.str().c_str(), stdout);

    std::ostringstream gp;
    gp << output_header(cfg, {seed});
    gp << "set datafile separator ','\n";
    gp << "set datafile commentschars '#'\n";
    gp << "set xlabel 'trial'\nset ylabel 'loss / |w*|^2'\n";
    gp << "plot 'kernel_baseline.csv' using 1:3 with points title 'trials'\n";
    write_text_file(path_in(out_dir, "kernel_baseline.gp"), gp.str());
  } catch (const NumericalError& err) {
    std::fprintf(stderr, "kernel-baseline: %s\n", err.what());
    return kExitNumerical;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Limiting dynamics of small-learning-rate SGD on minimizer "
               "manifolds: derivative gates, case studies, and ensemble "
               "comparisons"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = "out";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--config", config_path, "key=value config file")
      ->expected(1);
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "base seed override");
  app.add_option("--override", overrides, "repeatable key=value override");

  struct Sub {
    const char* name;
    int (*fn)(const ConfigMap&, const std::string&);
  };
  const std::vector<Sub> subs = {
      {"verify-derivatives", &cmd_verify_derivatives},
      {"motor", &cmd_motor},
      {"olm-recover", &cmd_olm_recover},
      {"olm-flow", &cmd_olm_flow},
      {"sgd-vs-limit", &cmd_sgd_vs_limit},
      {"kernel-baseline", &cmd_kernel_baseline},
  };
  for (const Sub& sub : subs) app.add_subcommand(sub.name, "");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }
  seed_given = seed_opt->count() > 0;

  try {
    ConfigMap cfg;
    if (!config_path.empty()) cfg = ConfigMap::from_file(config_path);
    for (const std::string& ov : overrides) {
      const auto eq = ov.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--override expects key=value, got '" + ov + "'");
      cfg.set(ov.substr(0, eq), ov.substr(eq + 1));
    }
    if (seed_given) cfg.set("seed", std::to_string(seed));

    for (const Sub& sub : subs)
      if (app.get_subcommand(sub.name)->parsed()) return sub.fn(cfg, out_dir);
    return kExitUsage;
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitUsage;
  } catch (const NumericalError& err) {
    std::fprintf(stderr, "numerical failure: %s\n", err.what());
    return kExitNumerical;
  }
}

}  // namespace sgdlim::cli
