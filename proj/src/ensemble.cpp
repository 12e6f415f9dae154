#include "gaugep/ensemble.hpp"

#include <cmath>

#include "gaugep/rng.hpp"

namespace gaugep {

namespace {

void check_population(int n_traj, int batch_count) {
    if (batch_count < 2) {
        throw ConfigError("batch_count must be at least 2, got " + std::to_string(batch_count));
    }
    if (n_traj < batch_count) {
        throw ConfigError("n_traj (" + std::to_string(n_traj) +
                          ") must be at least batch_count (" + std::to_string(batch_count) + ")");
    }
    if (n_traj % batch_count != 0) {
        throw ConfigError("n_traj (" + std::to_string(n_traj) +
                          ") is not divisible by batch_count (" + std::to_string(batch_count) +
                          ")");
    }
}

}  // namespace

Ensemble init_coherent(std::span<const cplx> alpha0, int n_traj, std::uint64_t seed,
                       int batch_count) {
    check_population(n_traj, batch_count);
    if (alpha0.empty()) throw ConfigError("coherent amplitude vector is empty");

    TrajectoryState proto;
    proto.alpha.assign(alpha0.begin(), alpha0.end());
    proto.beta.reserve(alpha0.size());
    for (const cplx a : alpha0) proto.beta.push_back(std::conj(a));

    Ensemble ens;
    ens.states.assign(static_cast<std::size_t>(n_traj), proto);
    ens.master_seed = seed;
    ens.batch_count = batch_count;
    return ens;
}

Ensemble init_coherent(cplx alpha0, int n_traj, std::uint64_t seed, int batch_count) {
    const cplx a[1] = {alpha0};
    return init_coherent(std::span<const cplx>(a), n_traj, seed, batch_count);
}

Ensemble init_gaussian(double sigma0sq, int n_traj, std::uint64_t seed, int batch_count,
                       int modes) {
    if (!(sigma0sq >= 0.0)) {
        throw ConfigError("sigma0sq must be non-negative, got " + std::to_string(sigma0sq));
    }
    if (modes < 1) throw ConfigError("mode count must be at least 1");
    if (sigma0sq == 0.0) {
        const std::vector<cplx> vacuum(static_cast<std::size_t>(modes), cplx{});
        return init_coherent(vacuum, n_traj, seed, batch_count);
    }
    check_population(n_traj, batch_count);

    const double sigma = std::sqrt(sigma0sq);
    Ensemble ens;
    ens.master_seed = seed;
    ens.batch_count = batch_count;
    ens.states.resize(static_cast<std::size_t>(n_traj));
    std::vector<double> xi(static_cast<std::size_t>(4 * modes));
    for (int i = 0; i < n_traj; ++i) {
        NoiseStream(seed, static_cast<std::uint64_t>(i), kInitialConditionStep)
            .fill_standard_normal(xi);
        TrajectoryState& s = ens.states[static_cast<std::size_t>(i)];
        s.alpha.resize(static_cast<std::size_t>(modes));
        s.beta.resize(static_cast<std::size_t>(modes));
        for (int m = 0; m < modes; ++m) {
            s.alpha[m] = sigma * cplx{xi[4 * m], xi[4 * m + 1]};
            s.beta[m] = sigma * cplx{xi[4 * m + 2], xi[4 * m + 3]};
        }
    }
    return ens;
}

void validate_ensemble(const Ensemble& ens) {
    check_population(ens.size(), ens.batch_count);
    const int m = ens.modes();
    if (m < 1) throw ConfigError("trajectory states have no modes");
    for (const auto& s : ens.states) {
        if (s.modes() != m || static_cast<int>(s.beta.size()) != m) {
            throw ConfigError("trajectory states have inconsistent mode counts");
        }
    }
}

}  // namespace gaugep
