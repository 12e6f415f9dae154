#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace gaugep {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: the output depends
/// only on the counter and key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Step index reserved for initial-condition sampling, so that initial draws never
/// collide with per-step noise.
inline constexpr std::uint32_t kInitialConditionStep = 0xFFFFFFFFu;

// Counter-based Gaussian noise for a single trajectory.
//
// Every variate is a pure function of (seed, trajectory, step, component).
// Gaussians come from the Box-Muller transform applied to two 53-bit uniforms
// built from one Philox block, so each block yields exactly two variates.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t trajectory, std::uint32_t step = 0)
        : seed_(seed), trajectory_(trajectory), step_(step) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t trajectory() const { return trajectory_; }
    std::uint32_t step() const { return step_; }
    void set_step(std::uint32_t step) { step_ = step; }

    /// Fill `out` with standard normals for the current step.
    void fill_standard_normal(std::span<double> out) const;

private:
    std::uint64_t seed_;
    std::uint64_t trajectory_;
    std::uint32_t step_;
};

/// `count` standard-normal variates for the stream's current (seed, step).
std::vector<double> gaussian_block(const NoiseStream& stream, int count);

}  // namespace gaugep
