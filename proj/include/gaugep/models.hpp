#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "gaugep/types.hpp"

namespace gaugep {

// Phase-space points are packed as z = [alpha_0 .. alpha_{M-1}, beta_0 .. beta_{M-1}].
// Matrix-valued fields write row-major into `out` (rows = 2M).
using VectorField = std::function<void(std::span<const cplx> z, double t, std::span<cplx> out)>;
using MatrixField = VectorField;
using ScalarField = std::function<cplx(std::span<const cplx> z, double t)>;

/// How the model's figures label time. The absorber is integrated in t but
/// plotted against tau = 2t.
enum class TimeConvention { native, tau_is_2t };

/// A master-equation system in positive-P form: drift A(+), canonical noise
/// matrix B(+) (2M x W) with B B^T = D, and potential V.
struct ModelSpec {
    std::string id;
    std::string family;
    int modes = 1;
    int noises = 2;
    VectorField drift_ito;
    VectorField drift_strat;
    MatrixField noise;
    MatrixField diffusion;
    ScalarField potential;  // empty means V = 0
    TimeConvention time_convention = TimeConvention::native;
    std::map<std::string, cplx> params;

    int dim() const { return 2 * modes; }
    double figure_time(double t) const {
        return time_convention == TimeConvention::tau_is_2t ? 2.0 * t : t;
    }
    double native_time(double figure_t) const {
        return time_convention == TimeConvention::tau_is_2t ? 0.5 * figure_t : figure_t;
    }
};

struct AbsorberParams {
    double gamma = 0.0;  // one-boson loss, scaled so the two-boson rate is 1
    cplx epsilon{};      // coherent driving
};

struct LaserParams {
    double G = 1.0;
    double Q = 0.25;
    std::optional<double> N_scale;
};

struct KerrParams {
    double omega0 = 0.0;
    double kappa = 1.0;
};

/// Nonlinear absorber. Native time t; the Stratonovich drift is
/// eps - alpha (alpha beta + (gamma - 1)/2), the Ito drift eps - alpha (alpha beta + gamma/2),
/// noise diag(i alpha, i beta).
ModelSpec absorber_model(const AbsorberParams& p);

/// Stratonovich drift of n = alpha beta in tau = 2t units for the undriven
/// absorber: -n (n + i g_tilde - (1 - gamma)/2).
cplx absorber_n_closed(cplx n, cplx g_tilde, double gamma = 0.0);

/// Single-mode laser in scaled time tau. Ito drift (G - alpha beta) alpha, additive
/// noise sqrt(Q) d eta with d eta = dW1 + i dW2.
ModelSpec laser_model(const LaserParams& p);

/// Deterministic stationary points (a, b) of the closed n-tilde equation, a > 0 > b.
std::pair<double, double> laser_stationary(double G, double Q);

/// Stratonovich drift of n-tilde: 2 n (G - n - g_tilde) + Q.
cplx laser_n_drift(cplx n, double G, double Q, cplx g_tilde = {});

/// Kerr oscillator H = omega0 a^dag a + kappa a^dag2 a^2 / 2 with the diagonal
/// noise matrix sqrt(i kappa) diag(i alpha, beta).
ModelSpec kerr_model(const KerrParams& p);

/// Phase space frozen (no drift, no noise), V = 0, `noises` noise channels.
/// Only the weight evolves once a gauge is attached.
ModelSpec frozen_model(int noises = 1, int modes = 1);

}  // namespace gaugep
