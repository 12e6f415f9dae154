#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gaugep/types.hpp"

namespace gaugep {

inline constexpr int kDefaultBatchCount = 20;

/// One weighted phase-space sample (Omega, alpha, beta) at a time point.
struct TrajectoryState {
    cplx omega{1.0, 0.0};
    std::vector<cplx> alpha;
    std::vector<cplx> beta;
    double time = 0.0;

    int modes() const { return static_cast<int>(alpha.size()); }
};

/// A fixed population of weighted trajectories. Trajectory i always draws its
/// noise from NoiseStream(master_seed, i), so results do not depend on how the
/// population is split across workers.
struct Ensemble {
    std::vector<TrajectoryState> states;
    std::uint64_t master_seed = 0;
    int batch_count = kDefaultBatchCount;
    std::string model_id;
    std::string gauge_id;

    int size() const { return static_cast<int>(states.size()); }
    int modes() const { return states.empty() ? 0 : states.front().modes(); }
    int batch_size() const { return size() / batch_count; }
};

/// Delta-function positive-P representation of the coherent state |alpha0>.
Ensemble init_coherent(std::span<const cplx> alpha0, int n_traj, std::uint64_t seed,
                       int batch_count = kDefaultBatchCount);

/// Single-mode convenience overload.
Ensemble init_coherent(cplx alpha0, int n_traj, std::uint64_t seed,
                       int batch_count = kDefaultBatchCount);

/// Broadened vacuum: alpha and beta independent complex Gaussians with real and
/// imaginary parts each N(0, sigma0sq), so <|alpha|^2> = 2 sigma0sq.
Ensemble init_gaussian(double sigma0sq, int n_traj, std::uint64_t seed,
                       int batch_count = kDefaultBatchCount, int modes = 1);

/// Throws ConfigError unless the ensemble is non-empty, rectangular, and
/// partitions evenly into at least two batches.
void validate_ensemble(const Ensemble& ens);

}  // namespace gaugep
