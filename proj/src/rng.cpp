#include "gaugep/rng.hpp"

#include <cmath>
#include <numbers>

namespace gaugep {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform on (0, 1].
inline double uniform_open_low(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// 53-bit uniform on [0, 1).
inline double uniform_closed_low(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

void NoiseStream::fill_standard_normal(std::span<double> out) const {
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                           static_cast<std::uint32_t>(seed_ >> 32)};
    const std::size_t n = out.size();
    for (std::size_t block = 0; 2 * block < n; ++block) {
        const auto r = philox4x32({static_cast<std::uint32_t>(block), step_,
                                   static_cast<std::uint32_t>(trajectory_),
                                   static_cast<std::uint32_t>(trajectory_ >> 32)},
                                  key);
        const std::uint64_t b0 = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
        const std::uint64_t b1 = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
        const double radius = std::sqrt(-2.0 * std::log(uniform_open_low(b0)));
        const double angle = 2.0 * std::numbers::pi * uniform_closed_low(b1);
        out[2 * block] = radius * std::cos(angle);
        if (2 * block + 1 < n) out[2 * block + 1] = radius * std::sin(angle);
    }
}

std::vector<double> gaussian_block(const NoiseStream& stream, int count) {
    std::vector<double> out(static_cast<std::size_t>(count > 0 ? count : 0));
    stream.fill_standard_normal(out);
    return out;
}

}  // namespace gaugep
