#pragma once

#include "sgdlim/dynamics.hpp"

#include <functional>

namespace sgdlim {

constexpr std::uint64_t kDefaultProjectionSeed = 0x51a3c3d1u;
constexpr Index kDefaultSliceCount = 16;

/// Point cloud with cached moments; sliced distances use unit projections
/// drawn from a dedicated seed so sweep rows stay comparable.
struct EnsembleSummary {
  Matrix points;  // one row per sample
  Vector mean;
  Matrix covariance;
  std::uint64_t projection_seed = kDefaultProjectionSeed;
  Index n_slices = kDefaultSliceCount;
};

EnsembleSummary make_ensemble(const std::vector<Vector>& points,
                              std::uint64_t projection_seed = kDefaultProjectionSeed,
                              Index n_slices = kDefaultSliceCount);

struct EnsembleDistances {
  Scalar mean_dist = 0;      // |mean_A - mean_B|_2
  Scalar cov_fro_dist = 0;   // |cov_A - cov_B|_F
  Scalar sw1 = 0;            // sliced 1-Wasserstein over the fixed projections
};

/// Exact 1-Wasserstein distance between two 1-d empirical distributions
/// (sorted-sample quantile coupling; sample counts may differ).
Scalar wasserstein1_1d(std::vector<Scalar> a, std::vector<Scalar> b);

/// Compare two ensembles of equal dimension.
EnsembleDistances compare(const EnsembleSummary& A, const EnsembleSummary& B);

struct SweepRow {
  Scalar eta = 0;
  Index steps = 0;
  Index n_seeds = 0;
  Index n_diverged = 0;
  Scalar mean_dist = 0;
  Scalar cov_fro_dist = 0;
  Scalar sw1 = 0;
};

struct SweepConfig {
  Scalar T = 1.0;
  std::vector<Scalar> etas;  // descending
  Index seeds_per_eta = 200;
  std::uint64_t base_seed = 1;
  // reference (limiting SDE) ensemble
  Scalar ref_dt = 1e-3;
  Index ref_seeds = 200;
  Index retraction_every = 20;
};

/// For each eta, run SGD for floor(T / eta^2) steps across seeds and compare
/// the endpoint cloud against a reference ensemble of limiting-SDE endpoints.
/// Diverged runs are counted per row and excluded from the cloud.
std::vector<SweepRow> convergence_sweep(const LossModel& loss,
                                        const NoiseModel& noise,
                                        const Vector& x0,
                                        const SweepConfig& cfg);

/// Endpoints of SGD runs across seeds seed_base+0 .. seed_base+count-1, run
/// concurrently and merged in seed order; divergent seeds are skipped and
/// counted.
std::vector<Vector> sgd_endpoint_ensemble(const LossModel& loss,
                                          const NoiseModel& noise,
                                          Scalar eta, Index steps,
                                          const Vector& x0,
                                          std::uint64_t seed_base, Index count,
                                          Index* n_diverged = nullptr);

/// Endpoints of limiting-SDE runs across seeds, concurrent, seed-ordered.
std::vector<Vector> sde_endpoint_ensemble(const LossModel& loss,
                                          const NoiseModel& noise,
                                          const Vector& x0, Scalar T, Scalar dt,
                                          Index retraction_every,
                                          std::uint64_t seed_base, Index count);

/// Deterministic parallel map over [0, count): results land in index order
/// regardless of scheduling.
void parallel_for_index(Index count, const std::function<void(Index)>& fn);

}  // namespace sgdlim
