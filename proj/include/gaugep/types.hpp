#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace gaugep {

using cplx = std::complex<double>;

inline constexpr cplx kI{0.0, 1.0};

/// Invalid user input: bad parameters, inconsistent dimensions, unknown ids.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that is mathematically valid but outside what an algorithm handles
/// (e.g. a defective complex-symmetric matrix).
class UnsupportedInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The truncated Fock basis was too small, or trace drifted.
class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Too many trajectories escaped; the run was stopped.
class DivergenceAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gaugep
