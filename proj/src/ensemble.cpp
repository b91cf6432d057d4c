#include "sgdlim/ensemble.hpp"

#include "sgdlim/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace sgdlim {

void parallel_for_index(Index count, const std::function<void(Index)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_threads =
      static_cast<unsigned>(std::min<Index>(count, std::min(hw, 8u)));
  if (n_threads <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const Index i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

EnsembleSummary make_ensemble(const std::vector<Vector>& points,
                              std::uint64_t projection_seed, Index n_slices) {
  if (points.empty()) throw DomainError("make_ensemble: empty point set");
  const Index n = static_cast<Index>(points.size());
  const Index d = points.front().size();
  EnsembleSummary s;
  s.points.resize(n, d);
  for (Index i = 0; i < n; ++i) s.points.row(i) = points[static_cast<size_t>(i)];
  s.mean = s.points.colwise().mean();
  const Matrix centered = s.points.rowwise() - s.mean.transpose();
  s.covariance = centered.transpose() * centered / static_cast<Scalar>(n);
  s.projection_seed = projection_seed;
  s.n_slices = n_slices;
  return s;
}

Scalar wasserstein1_1d(std::vector<Scalar> a, std::vector<Scalar> b) {
  if (a.empty() || b.empty())
    throw DomainError("wasserstein1_1d: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const Scalar na = static_cast<Scalar>(a.size());
  const Scalar nb = static_cast<Scalar>(b.size());
  size_t ia = 0, ib = 0;
  Scalar q = 0, dist = 0;
  while (ia < a.size() && ib < b.size()) {
    const Scalar qa = static_cast<Scalar>(ia + 1) / na;
    const Scalar qb = static_cast<Scalar>(ib + 1) / nb;
    const Scalar q_next = std::min(qa, qb);
    dist += (q_next - q) * std::abs(a[ia] - b[ib]);
    q = q_next;
    if (qa <= q_next + 1e-15) ++ia;
    if (qb <= q_next + 1e-15) ++ib;
  }
  return dist;
}

EnsembleDistances compare(const EnsembleSummary& A, const EnsembleSummary& B) {
  if (A.mean.size() != B.mean.size())
    throw DimensionError("compare: ensembles have different dimensions");
  EnsembleDistances d;
  d.mean_dist = (A.mean - B.mean).norm();
  d.cov_fro_dist = (A.covariance - B.covariance).norm();

  std::mt19937_64 rng = seeded_rng(A.projection_seed);
  const Index dim = A.mean.size();
  Scalar total = 0;
  for (Index s = 0; s < A.n_slices; ++s) {
    Vector dir = standard_normal(dim, rng);
    dir.normalize();
    const Vector pa = A.points * dir;
    const Vector pb = B.points * dir;
    total += wasserstein1_1d(
        std::vector<Scalar>(pa.begin(), pa.end()),
        std::vector<Scalar>(pb.begin(), pb.end()));
  }
  d.sw1 = total / static_cast<Scalar>(A.n_slices);
  return d;
}

std::vector<Vector> sgd_endpoint_ensemble(const LossModel& loss,
                                          const NoiseModel& noise, Scalar eta,
                                          Index steps, const Vector& x0,
                                          std::uint64_t seed_base, Index count,
                                          Index* n_diverged) {
  std::vector<Vector> endpoints(static_cast<size_t>(count));
  std::vector<char> diverged(static_cast<size_t>(count), 0);
  parallel_for_index(count, [&](Index i) {
    SgdConfig cfg;
    cfg.eta = eta;
    cfg.steps = steps;
    cfg.seed = seed_base + static_cast<std::uint64_t>(i);
    cfg.record_stride = steps;
    try {
      endpoints[static_cast<size_t>(i)] =
          sgd_run(loss, noise, cfg, x0).back_state();
    } catch (const DivergenceError&) {
      diverged[static_cast<size_t>(i)] = 1;
    }
  });
  std::vector<Vector> kept;
  Index div_count = 0;
  for (Index i = 0; i < count; ++i) {
    if (diverged[static_cast<size_t>(i)])
      ++div_count;
    else
      kept.push_back(std::move(endpoints[static_cast<size_t>(i)]));
  }
  if (n_diverged) *n_diverged = div_count;
  return kept;
}

std::vector<Vector> sde_endpoint_ensemble(const LossModel& loss,
                                          const NoiseModel& noise,
                                          const Vector& x0, Scalar T, Scalar dt,
                                          Index retraction_every,
                                          std::uint64_t seed_base, Index count) {
  std::vector<Vector> endpoints(static_cast<size_t>(count));
  parallel_for_index(count, [&](Index i) {
    SdeConfig cfg;
    cfg.T = T;
    cfg.dt = dt;
    cfg.retraction_every = retraction_every;
    cfg.seed = seed_base + static_cast<std::uint64_t>(i);
    cfg.record_stride = std::max<Index>(1, static_cast<Index>(std::llround(T / dt)));
    endpoints[static_cast<size_t>(i)] =
        simulate_limit_sde(loss, noise, x0, cfg).back_state();
  });
  return endpoints;
}

std::vector<SweepRow> convergence_sweep(const LossModel& loss,
                                        const NoiseModel& noise,
                                        const Vector& x0,
                                        const SweepConfig& cfg) {
  if (cfg.etas.empty()) throw DomainError("convergence_sweep: no etas");
  for (size_t i = 1; i < cfg.etas.size(); ++i)
    if (cfg.etas[i] >= cfg.etas[i - 1])
      throw DomainError("convergence_sweep: etas must be descending");

  const std::vector<Vector> ref = sde_endpoint_ensemble(
      loss, noise, x0, cfg.T, cfg.ref_dt, cfg.retraction_every,
      cfg.base_seed + 0xABCDEFull, cfg.ref_seeds);
  const EnsembleSummary ref_summary = make_ensemble(ref);

  std::vector<SweepRow> rows;
  for (size_t e = 0; e < cfg.etas.size(); ++e) {
    const Scalar eta = cfg.etas[e];
    SweepRow row;
    row.eta = eta;
    row.steps = static_cast<Index>(std::floor(cfg.T / (eta * eta) + 1e-9));
    row.n_seeds = cfg.seeds_per_eta;
    const std::vector<Vector> cloud = sgd_endpoint_ensemble(
        loss, noise, eta, row.steps, x0,
        cfg.base_seed + 1000003ull * static_cast<std::uint64_t>(e + 1),
        cfg.seeds_per_eta, &row.n_diverged);
    if (cloud.empty())
      throw DivergenceError("convergence_sweep: every seed diverged at eta " +
                            std::to_string(eta));
    const EnsembleDistances dist = compare(make_ensemble(cloud), ref_summary);
    row.mean_dist = dist.mean_dist;
    row.cov_fro_dist = dist.cov_fro_dist;
    row.sw1 = dist.sw1;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sgdlim
