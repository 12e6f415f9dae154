#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaugep/models.hpp"
#include "gaugep/types.hpp"

namespace gaugep {

/// g_k(Omega, z, t) for k = 0 .. W-1.
using GaugeField =
    std::function<void(cplx omega, std::span<const cplx> z, double t, std::span<cplx> g)>;

/// Stratonovich weight correction S: with it the weight obeys
/// d Omega = Omega [(V + S) dt + g_k o dW_k] in Stratonovich form.
/// S collects -g.g/2 and the directional derivatives of g along the noise columns.
using WeightCorrection =
    std::function<cplx(cplx omega, std::span<const cplx> z, double t, std::span<const cplx> g)>;

/// Drift gauge: shifts the drift by -g_k B_jk and feeds Omega g_k dW_k into the weight.
struct DriftGauge {
    std::string id;
    int noises = 2;
    GaugeField g;
    // Empty when no analytic correction is known; such gauges run on the Ito path only.
    WeightCorrection strat_correction;
    // The correction assumes the model's canonical noise matrix (no diffusion gauge).
    bool correction_needs_canonical_noise = true;
    // Empty accepts any model.
    std::string model_family;
    std::map<std::string, double> params;
};

/// Diffusion gauge: B = B(+) U with U = exp(sum_{i<j} g_ij sigma^(ij)), optionally
/// extended with an off-square block Q so that B = [B_s, Q], B_s B_s^T = D - Q Q^T.
struct DiffusionGauge {
    // g_ij for i < j in row-major order: (0,1), (0,2), ..., (1,2), ...
    std::vector<cplx> generators;
    Eigen::MatrixXcd q_extra;  // 2M x W', zero columns when absent

    bool has_q() const { return q_extra.cols() > 0; }
};

enum class Calculus { ito, stratonovich };

/// A model with drift and diffusion gauges attached; the extended system over
/// (Omega, z).
struct GaugedSystem {
    ModelSpec model;
    std::optional<DriftGauge> drift_gauge;
    std::optional<DiffusionGauge> diffusion_gauge;
    Eigen::MatrixXcd rotation;  // U, identity-sized when no diffusion gauge

    int dim() const { return model.dim(); }
    /// Noise count W after any off-square extension.
    int noises() const;
    std::string gauge_id() const;
    /// Whether step_strat may be used with this system.
    bool supports_stratonovich() const;
};

/// Per-thread scratch for evaluating a GaugedSystem.
struct Workspace {
    std::vector<cplx> drift;     // 2M
    std::vector<cplx> noise;     // 2M x W, row-major
    std::vector<cplx> canon;     // 2M x W0
    std::vector<cplx> g;         // W
    cplx weight_rate{};          // V (Ito) or V + S (Stratonovich)

    explicit Workspace(const GaugedSystem& sys);
};

/// Evaluate drift (gauge shift included), noise matrix, gauge vector and the weight
/// drift rate at (omega, z, t).
void evaluate(const GaugedSystem& sys, Calculus calculus, cplx omega, std::span<const cplx> z,
              double t, Workspace& ws);

/// Ungauged positive-P system.
GaugedSystem positive_p(const ModelSpec& model);

/// Attach a drift gauge; the gauge length must equal the model's noise count.
GaugedSystem apply_drift_gauge(const ModelSpec& model, const DriftGauge& gauge);

/// Attach a diffusion gauge to an existing system.
GaugedSystem apply_diffusion_gauge(GaugedSystem sys, const DiffusionGauge& gauge);

/// Extended drift (A_0 = Omega V, A_j = A(+)_j - g_k B_jk), Ito form, length 2M+1.
Eigen::VectorXcd extended_drift(const GaugedSystem& sys, cplx omega, std::span<const cplx> z,
                                double t);

/// Extended noise matrix [[0, Omega g^T], [0, B]] of size (2M+1) x (W+1).
Eigen::MatrixXcd extended_noise(const GaugedSystem& sys, cplx omega, std::span<const cplx> z,
                                double t);

// ---- concrete drift gauges ------------------------------------------------

/// g = g_bar = i (n - |n|), n = alpha beta. Absorber family only.
/// Stratonovich weight correction (t units): S = n + (n - |n|)^2.
DriftGauge circular_gauge();

/// Constant gauge vector; S = -g.g/2.
DriftGauge constant_gauge(std::vector<cplx> values);

/// g_k = i conj(Omega) f_k(z) with real f_k: Re dOmega = 0 on the Ito path.
DriftGauge norm_preserving_gauge(std::function<void(std::span<const cplx> z, std::span<double> f)> f,
                                 int noises);

struct LaserGaugeInfo {
    double lambda = 0.0;
    double safe_threshold = 0.0;          // 1 + G^2 / 2Q
    bool removes_moving_singularity = false;  // lambda >= 1
    bool removes_stationary_points = false;   // lambda > safe_threshold
    bool warning = false;                     // lambda < 1: known unsafe
};

/// Piecewise laser gauge g_tilde = -lambda Re(n) for Re(n) < 0, mapped to
/// g = (alpha + beta) g_tilde / 2 sqrt(Q), g_bar = (alpha - beta) g_tilde / 2i sqrt(Q).
DriftGauge laser_gauge(double lambda, const LaserParams& p);

LaserGaugeInfo laser_gauge_info(double lambda, const LaserParams& p);

/// g_tilde of the laser gauge.
double laser_g_tilde(cplx n, double lambda);

/// Weight correction S_Theta of the reduced (n, Theta) equation driven by one real
/// noise: lambda (Re n + n + |n|) / 2 for Re n < 0, zero otherwise.
cplx laser_reduced_s_theta(cplx n, double lambda);

// ---- diffusion gauges ------------------------------------------------------

/// sum_{i<j} g_ij sigma^(ij), sigma^(ij)_kl = delta_ik delta_jl - delta_il delta_jk.
Eigen::MatrixXcd antisymmetric_generator(std::span<const cplx> generators, int n);

/// U = exp(generator). Closed form cos(g) I + sin(g) sigma^(12) for n = 2.
Eigen::MatrixXcd gauge_rotation(std::span<const cplx> generators, int n);

/// B = B_canon U, or [B_s, Q] with B_s B_s^T = B_canon B_canon^T - Q Q^T.
Eigen::MatrixXcd diffusion_transform(const Eigen::MatrixXcd& b_canon, const DiffusionGauge& gauge);

/// B(+) = O lambda with B B^T = D, via complex-orthogonal diagonalization of the
/// complex-symmetric D. Throws UnsupportedInput for defective or isotropic cases.
Eigen::MatrixXcd canonical_factor(const Eigen::MatrixXcd& d);

// ---- classification --------------------------------------------------------

enum class GaugeComplexity { zero, real, imaginary, complex };
enum class GaugeDependence { autonomous, space_dependent, mixed };

struct ProbePoint {
    cplx omega{1.0, 0.0};
    std::vector<cplx> z;
    double t = 0.0;
};

struct GaugeClass {
    GaugeComplexity complexity = GaugeComplexity::zero;
    GaugeDependence dependence = GaugeDependence::autonomous;
    bool norm_preserving = false;
};

GaugeClass classify_gauge(const DriftGauge& gauge, std::span<const ProbePoint> probe);

std::string to_string(GaugeComplexity c);
std::string to_string(GaugeDependence d);

}  // namespace gaugep
