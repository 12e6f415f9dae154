#include "gaugep/models.hpp"

#include <algorithm>
#include <cmath>

namespace gaugep {

ModelSpec absorber_model(const AbsorberParams& p) {
    if (!(p.gamma >= 0.0)) throw ConfigError("absorber gamma must be >= 0");

    const double gamma = p.gamma;
    const cplx eps = p.epsilon;
    ModelSpec m;
    m.id = "absorber";
    m.family = "absorber";
    m.modes = 1;
    m.noises = 2;
    m.time_convention = TimeConvention::tau_is_2t;
    m.params = {{"gamma", gamma}, {"epsilon", eps}};

    m.drift_strat = [gamma, eps](std::span<const cplx> z, double, std::span<cplx> out) {
        const cplx n = z[0] * z[1];
        const cplx k = n + 0.5 * (gamma - 1.0);
        out[0] = eps - z[0] * k;
        out[1] = std::conj(eps) - z[1] * k;
    };
    // Ito = Stratonovich - alpha/2 for B = diag(i alpha, i beta).
    m.drift_ito = [gamma, eps](std::span<const cplx> z, double, std::span<cplx> out) {
        const cplx n = z[0] * z[1];
        const cplx k = n + 0.5 * gamma;
        out[0] = eps - z[0] * k;
        out[1] = std::conj(eps) - z[1] * k;
    };
    m.noise = [](std::span<const cplx> z, double, std::span<cplx> out) {
        out[0] = kI * z[0];
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = kI * z[1];
    };
    m.diffusion = [](std::span<const cplx> z, double, std::span<cplx> out) {
        out[0] = -z[0] * z[0];
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = -z[1] * z[1];
    };
    return m;
}

cplx absorber_n_closed(cplx n, cplx g_tilde, double gamma) {
    return -n * (n + kI * g_tilde - 0.5 * (1.0 - gamma));
}

ModelSpec laser_model(const LaserParams& p) {
    if (!(p.G > 0.0)) throw ConfigError("laser gain G must be > 0");
    if (!(p.Q > 0.0)) throw ConfigError("laser noise Q must be > 0");
    if (p.N_scale) {
        if (!(*p.N_scale >= 1.0)) throw ConfigError("laser N_scale must be >= 1");
        if (p.Q < p.G / *p.N_scale) throw ConfigError("laser requires Q >= G / N_scale");
    }

    const double G = p.G;
    const double sq = std::sqrt(p.Q);
    ModelSpec m;
    m.id = "laser";
    m.family = "laser";
    m.modes = 1;
    m.noises = 2;
    m.time_convention = TimeConvention::native;
    m.params = {{"G", G}, {"Q", p.Q}};
    if (p.N_scale) m.params["N_scale"] = *p.N_scale;

    // Additive noise: Ito and Stratonovich drifts coincide.
    auto drift = [G](std::span<const cplx> z, double, std::span<cplx> out) {
        const cplx k = G - z[0] * z[1];
        out[0] = k * z[0];
        out[1] = k * z[1];
    };
    m.drift_ito = drift;
    m.drift_strat = drift;
    m.noise = [sq](std::span<const cplx>, double, std::span<cplx> out) {
        out[0] = sq;
        out[1] = sq * kI;
        out[2] = sq;
        out[3] = -sq * kI;
    };
    const double two_q = 2.0 * p.Q;
    m.diffusion = [two_q](std::span<const cplx>, double, std::span<cplx> out) {
        out[0] = 0.0;
        out[1] = two_q;
        out[2] = two_q;
        out[3] = 0.0;
    };
    return m;
}

std::pair<double, double> laser_stationary(double G, double Q) {
    const double root = std::sqrt(G * G + 2.0 * Q);
    return {0.5 * (G + root), 0.5 * (G - root)};
}

cplx laser_n_drift(cplx n, double G, double Q, cplx g_tilde) {
    return 2.0 * n * (G - n - g_tilde) + Q;
}

ModelSpec kerr_model(const KerrParams& p) {
    const double w0 = p.omega0;
    const double kappa = p.kappa;
    const cplx root = std::sqrt(kI * kappa);
    ModelSpec m;
    m.id = "kerr";
    m.family = "kerr";
    m.modes = 1;
    m.noises = 2;
    m.time_convention = TimeConvention::native;
    m.params = {{"omega0", w0}, {"kappa", kappa}};

    m.drift_ito = [w0, kappa](std::span<const cplx> z, double, std::span<cplx> out) {
        const cplx rate = kI * (w0 + kappa * z[0] * z[1]);
        out[0] = -rate * z[0];
        out[1] = rate * z[1];
    };
    // Stratonovich correction is +i kappa alpha / 2 and -i kappa beta / 2.
    m.drift_strat = [w0, kappa](std::span<const cplx> z, double, std::span<cplx> out) {
        const cplx rate = kI * (w0 + kappa * z[0] * z[1] - 0.5 * kappa);
        out[0] = -rate * z[0];
        out[1] = rate * z[1];
    };
    m.noise = [root](std::span<const cplx> z, double, std::span<cplx> out) {
        out[0] = root * kI * z[0];
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = root * z[1];
    };
    m.diffusion = [kappa](std::span<const cplx> z, double, std::span<cplx> out) {
        out[0] = -kI * kappa * z[0] * z[0];
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = kI * kappa * z[1] * z[1];
    };
    return m;
}

ModelSpec frozen_model(int noises, int modes) {
    if (noises < 1 || modes < 1) throw ConfigError("frozen model needs modes >= 1 and noises >= 1");
    ModelSpec m;
    m.id = "frozen";
    m.family = "frozen";
    m.modes = modes;
    m.noises = noises;
    auto zero = [](std::span<const cplx>, double, std::span<cplx> out) {
        std::fill(out.begin(), out.end(), cplx{});
    };
    m.drift_ito = zero;
    m.drift_strat = zero;
    m.noise = zero;
    m.diffusion = zero;
    return m;
}

}  // namespace gaugep
