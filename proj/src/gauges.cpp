#include "gaugep/gauges.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace gaugep {

namespace {

using Eigen::MatrixXcd;

std::size_t pair_count(int n) { return static_cast<std::size_t>(n * (n - 1) / 2); }

double rel_norm_gap(const MatrixXcd& a, const MatrixXcd& b) {
    const double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

}  // namespace

// ---- system ---------------------------------------------------------------

int GaugedSystem::noises() const {
    int w = model.noises;
    if (diffusion_gauge && diffusion_gauge->has_q()) w += static_cast<int>(diffusion_gauge->q_extra.cols());
    return w;
}

std::string GaugedSystem::gauge_id() const {
    std::string id = drift_gauge ? drift_gauge->id : "none";
    if (diffusion_gauge) id += "+diffusion";
    return id;
}

bool GaugedSystem::supports_stratonovich() const {
    if (diffusion_gauge && diffusion_gauge->has_q()) return false;
    if (!drift_gauge) return true;
    if (!drift_gauge->strat_correction) return false;
    if (diffusion_gauge && drift_gauge->correction_needs_canonical_noise) return false;
    return true;
}

Workspace::Workspace(const GaugedSystem& sys)
    : drift(static_cast<std::size_t>(sys.dim())),
      noise(static_cast<std::size_t>(sys.dim() * sys.noises())),
      canon(static_cast<std::size_t>(sys.dim() * sys.model.noises)),
      g(static_cast<std::size_t>(sys.noises())) {}

void evaluate(const GaugedSystem& sys, Calculus calculus, cplx omega, std::span<const cplx> z,
              double t, Workspace& ws) {
    const ModelSpec& m = sys.model;
    const int n = m.dim();
    const int w = sys.noises();

    (calculus == Calculus::ito ? m.drift_ito : m.drift_strat)(z, t, ws.drift);

    if (!sys.diffusion_gauge) {
        m.noise(z, t, ws.noise);
    } else {
        m.noise(z, t, ws.canon);
        const int w0 = m.noises;
        Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            canon(ws.canon.data(), n, w0);
        Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> out(
            ws.noise.data(), n, w);
        if (!sys.diffusion_gauge->has_q()) {
            out = canon * sys.rotation;
        } else {
            out = diffusion_transform(MatrixXcd(canon), *sys.diffusion_gauge);
        }
    }

    ws.weight_rate = m.potential ? m.potential(z, t) : cplx{};

    if (sys.drift_gauge) {
        const DriftGauge& gauge = *sys.drift_gauge;
        gauge.g(omega, z, t, ws.g);
        for (int j = 0; j < n; ++j) {
            cplx shift{};
            for (int k = 0; k < w; ++k) shift += ws.g[k] * ws.noise[j * w + k];
            ws.drift[j] -= shift;
        }
        if (calculus == Calculus::stratonovich) {
            if (!gauge.strat_correction) {
                throw ConfigError("gauge '" + gauge.id +
                                  "' has no Stratonovich weight correction; use the Ito scheme");
            }
            ws.weight_rate += gauge.strat_correction(omega, z, t, ws.g);
        }
    }
}

GaugedSystem positive_p(const ModelSpec& model) {
    GaugedSystem sys;
    sys.model = model;
    sys.rotation = MatrixXcd::Identity(model.noises, model.noises);
    return sys;
}

GaugedSystem apply_drift_gauge(const ModelSpec& model, const DriftGauge& gauge) {
    if (!gauge.g) throw ConfigError("drift gauge '" + gauge.id + "' has no gauge function");
    if (gauge.noises != model.noises) {
        throw ConfigError("drift gauge '" + gauge.id + "' has " + std::to_string(gauge.noises) +
                          " components but model '" + model.id + "' has " +
                          std::to_string(model.noises) + " noises");
    }
    if (!gauge.model_family.empty() && gauge.model_family != model.family) {
        throw ConfigError("drift gauge '" + gauge.id + "' applies to the " + gauge.model_family +
                          " family, not '" + model.family + "'");
    }
    GaugedSystem sys = positive_p(model);
    sys.drift_gauge = gauge;
    return sys;
}

GaugedSystem apply_diffusion_gauge(GaugedSystem sys, const DiffusionGauge& gauge) {
    const int n = sys.dim();
    const int w0 = sys.model.noises;
    if (w0 != n) {
        throw ConfigError("diffusion gauges need a square canonical noise matrix (2M x 2M)");
    }
    if (gauge.generators.size() != pair_count(n)) {
        throw ConfigError("diffusion gauge needs " + std::to_string(pair_count(n)) +
                          " generator coefficients, got " + std::to_string(gauge.generators.size()));
    }
    if (gauge.has_q() && gauge.q_extra.rows() != n) {
        throw ConfigError("off-square block Q must have " + std::to_string(n) + " rows");
    }
    sys.diffusion_gauge = gauge;
    sys.rotation = gauge_rotation(gauge.generators, n);
    if (sys.drift_gauge && sys.drift_gauge->noises != sys.noises()) {
        throw ConfigError("drift gauge length does not match the extended noise count");
    }
    return sys;
}

Eigen::VectorXcd extended_drift(const GaugedSystem& sys, cplx omega, std::span<const cplx> z,
                                double t) {
    Workspace ws(sys);
    evaluate(sys, Calculus::ito, omega, z, t, ws);
    Eigen::VectorXcd a(sys.dim() + 1);
    a(0) = omega * ws.weight_rate;
    for (int j = 0; j < sys.dim(); ++j) a(j + 1) = ws.drift[j];
    return a;
}

Eigen::MatrixXcd extended_noise(const GaugedSystem& sys, cplx omega, std::span<const cplx> z,
                                double t) {
    Workspace ws(sys);
    evaluate(sys, Calculus::ito, omega, z, t, ws);
    const int n = sys.dim();
    const int w = sys.noises();
    MatrixXcd b = MatrixXcd::Zero(n + 1, w + 1);
    for (int k = 0; k < w; ++k) {
        b(0, k + 1) = sys.drift_gauge ? omega * ws.g[k] : cplx{};
        for (int j = 0; j < n; ++j) b(j + 1, k + 1) = ws.noise[j * w + k];
    }
    return b;
}

// ---- concrete gauges -------------------------------------------------------

DriftGauge circular_gauge() {
    DriftGauge gauge;
    gauge.id = "circular";
    gauge.noises = 2;
    gauge.model_family = "absorber";
    gauge.g = [](cplx, std::span<const cplx> z, double, std::span<cplx> g) {
        const cplx n = z[0] * z[1];
        const cplx v = kI * (n - std::sqrt(std::norm(n)));
        g[0] = v;
        g[1] = v;
    };
    // The noise i alpha dW only rotates n, so |n| has no directional derivative
    // along either noise column; in t units S = n + (n - |n|)^2.
    gauge.strat_correction = [](cplx, std::span<const cplx> z, double, std::span<const cplx>) {
        const cplx n = z[0] * z[1];
        const cplx d = n - std::sqrt(std::norm(n));
        return n + d * d;
    };
    return gauge;
}

DriftGauge constant_gauge(std::vector<cplx> values) {
    DriftGauge gauge;
    gauge.id = "constant";
    gauge.noises = static_cast<int>(values.size());
    gauge.correction_needs_canonical_noise = false;
    cplx gg{};
    for (const cplx v : values) gg += v * v;
    gauge.g = [values](cplx, std::span<const cplx>, double, std::span<cplx> g) {
        std::copy(values.begin(), values.end(), g.begin());
    };
    gauge.strat_correction = [gg](cplx, std::span<const cplx>, double, std::span<const cplx>) {
        return -0.5 * gg;
    };
    return gauge;
}

DriftGauge norm_preserving_gauge(
    std::function<void(std::span<const cplx> z, std::span<double> f)> f, int noises) {
    DriftGauge gauge;
    gauge.id = "norm_preserving";
    gauge.noises = noises;
    gauge.g = [f = std::move(f), noises](cplx omega, std::span<const cplx> z, double,
                                         std::span<cplx> g) {
        double buf[16];
        std::vector<double> heap;
        std::span<double> fv;
        if (noises <= 16) {
            fv = std::span<double>(buf, static_cast<std::size_t>(noises));
        } else {
            heap.resize(static_cast<std::size_t>(noises));
            fv = heap;
        }
        f(z, fv);
        const cplx factor = kI * std::conj(omega);
        for (int k = 0; k < noises; ++k) g[k] = factor * fv[k];
    };
    return gauge;
}

double laser_g_tilde(cplx n, double lambda) { return n.real() < 0.0 ? -lambda * n.real() : 0.0; }

cplx laser_reduced_s_theta(cplx n, double lambda) {
    if (n.real() >= 0.0) return {};
    return 0.5 * lambda * (n.real() + n + std::sqrt(std::norm(n)));
}

LaserGaugeInfo laser_gauge_info(double lambda, const LaserParams& p) {
    LaserGaugeInfo info;
    info.lambda = lambda;
    info.safe_threshold = 1.0 + p.G * p.G / (2.0 * p.Q);
    info.removes_moving_singularity = lambda >= 1.0;
    info.removes_stationary_points = lambda > info.safe_threshold;
    info.warning = lambda < 1.0;
    return info;
}

DriftGauge laser_gauge(double lambda, const LaserParams& p) {
    if (!(lambda > 0.0)) throw ConfigError("laser gauge lambda must be > 0");
    if (!(p.Q > 0.0)) throw ConfigError("laser gauge needs Q > 0");
    const double sq = std::sqrt(p.Q);
    const double q = p.Q;

    DriftGauge gauge;
    gauge.id = "laser";
    gauge.noises = 2;
    gauge.model_family = "laser";
    gauge.params = {{"lambda", lambda}, {"safe_threshold", laser_gauge_info(lambda, p).safe_threshold}};
    gauge.g = [lambda, sq](cplx, std::span<const cplx> z, double, std::span<cplx> g) {
        const double gt = laser_g_tilde(z[0] * z[1], lambda);
        g[0] = (z[0] + z[1]) * (gt / (2.0 * sq));
        g[1] = (z[0] - z[1]) * gt / (2.0 * kI * sq);
    };
    // Correction for the two-real-noise realization d eta = dW1 + i dW2 used by
    // laser_model: -g.g/2 - (1/2) sum_k (B_k . grad) g_k, directional derivatives
    // taken along the real noise directions.
    gauge.strat_correction = [lambda, q](cplx, std::span<const cplx> z, double,
                                         std::span<const cplx>) -> cplx {
        const cplx n = z[0] * z[1];
        if (n.real() >= 0.0) return {};
        const double gt = laser_g_tilde(n, lambda);
        const cplx sum = z[0] + z[1];
        const cplx diff = z[0] - z[1];
        return -n * gt * gt / (2.0 * q) - gt +
               0.25 * lambda * (sum * sum.real() - kI * diff * diff.imag());
    };
    return gauge;
}

// ---- diffusion gauges --------------------------------------------------------

Eigen::MatrixXcd antisymmetric_generator(std::span<const cplx> generators, int n) {
    if (generators.size() != pair_count(n)) {
        throw ConfigError("expected " + std::to_string(pair_count(n)) +
                          " generator coefficients, got " + std::to_string(generators.size()));
    }
    MatrixXcd s = MatrixXcd::Zero(n, n);
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            s(i, j) += generators[idx];
            s(j, i) -= generators[idx];
            ++idx;
        }
    }
    return s;
}

Eigen::MatrixXcd gauge_rotation(std::span<const cplx> generators, int n) {
    if (n == 2) {
        if (generators.size() != 1) throw ConfigError("2x2 rotation takes one generator");
        const cplx c = std::cos(generators[0]);
        const cplx s = std::sin(generators[0]);
        MatrixXcd u(2, 2);
        u << c, s, -s, c;
        return u;
    }
    return antisymmetric_generator(generators, n).exp();
}

Eigen::MatrixXcd diffusion_transform(const Eigen::MatrixXcd& b_canon, const DiffusionGauge& gauge) {
    const int n = static_cast<int>(b_canon.rows());
    if (b_canon.cols() != n) throw ConfigError("canonical noise matrix must be square");
    const MatrixXcd u = gauge_rotation(gauge.generators, n);
    if (!gauge.has_q()) return b_canon * u;
    if (gauge.q_extra.rows() != n) {
        throw ConfigError("off-square block Q has " + std::to_string(gauge.q_extra.rows()) +
                          " rows, expected " + std::to_string(n));
    }
    const MatrixXcd d = b_canon * b_canon.transpose() - gauge.q_extra * gauge.q_extra.transpose();
    MatrixXcd out(n, n + gauge.q_extra.cols());
    out << canonical_factor(d) * u, gauge.q_extra;
    return out;
}

Eigen::MatrixXcd canonical_factor(const Eigen::MatrixXcd& d) {
    const int n = static_cast<int>(d.rows());
    if (d.cols() != n) throw ConfigError("diffusion matrix must be square");
    const double scale = d.norm();
    if ((d - d.transpose()).norm() > 1e-12 * std::max(scale, 1e-300) && scale > 0.0) {
        throw ConfigError("diffusion matrix is not symmetric");
    }

    double off = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) off += std::norm(d(i, j));
    if (std::sqrt(off) <= 1e-15 * scale || scale == 0.0) {
        MatrixXcd b = MatrixXcd::Zero(n, n);
        for (int i = 0; i < n; ++i) b(i, i) = std::sqrt(d(i, i));
        return b;
    }

    Eigen::ComplexEigenSolver<MatrixXcd> solver(d);
    if (solver.info() != Eigen::Success) throw UnsupportedInput("eigendecomposition failed");
    const Eigen::VectorXcd lambda = solver.eigenvalues();
    const MatrixXcd vecs = solver.eigenvectors();

    // Orthonormalize under the bilinear form v^T w, cluster by cluster.
    MatrixXcd o(n, n);
    const double cluster_tol = 1e-9 * scale;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXcd v = vecs.col(i);
        for (int j = 0; j < i; ++j) {
            if (std::abs(lambda(i) - lambda(j)) <= cluster_tol) {
                v -= (o.col(j).transpose() * v)(0) * o.col(j);
            }
        }
        const cplx norm2 = (v.transpose() * v)(0);
        if (std::abs(norm2) <= 1e-10 * v.squaredNorm()) {
            throw UnsupportedInput("diffusion matrix is not complex-orthogonally diagonalizable");
        }
        o.col(i) = v / std::sqrt(norm2);
    }

    MatrixXcd b = o * lambda.cwiseSqrt().asDiagonal();
    if (rel_norm_gap(b * b.transpose(), d) > 1e-10) {
        throw UnsupportedInput("diffusion matrix is defective; B B^T does not reproduce D");
    }
    return b;
}

// ---- classification ------------------------------------------------------------

GaugeClass classify_gauge(const DriftGauge& gauge, std::span<const ProbePoint> probe) {
    GaugeClass out;
    if (probe.empty()) return out;
    const auto w = static_cast<std::size_t>(gauge.noises);
    std::vector<cplx> g(w), g_omega(w), g_space(w);

    bool any_re = false, any_im = false, dep_omega = false, dep_space = false;
    bool norm_preserving = true;
    auto differs = [](const std::vector<cplx>& a, const std::vector<cplx>& b) {
        for (std::size_t k = 0; k < a.size(); ++k)
            if (std::abs(a[k] - b[k]) > 1e-12 * (1.0 + std::abs(a[k]))) return true;
        return false;
    };

    for (const ProbePoint& p : probe) {
        gauge.g(p.omega, p.z, p.t, g);
        for (std::size_t k = 0; k < w; ++k) {
            const double mag = 1e-14 * (1.0 + std::abs(g[k]));
            if (std::abs(g[k].real()) > mag) any_re = true;
            if (std::abs(g[k].imag()) > mag) any_im = true;
            // Omega' g'_k = Omega'' g''_k  <=>  Re(Omega g_k) = 0
            if (std::abs((p.omega * g[k]).real()) > 1e-12 * (1.0 + std::abs(p.omega * g[k])))
                norm_preserving = false;
        }

        const cplx omega2 = p.omega * cplx{0.8, 0.3} + cplx{0.1, -0.2};
        gauge.g(omega2, p.z, p.t, g_omega);
        if (differs(g, g_omega)) dep_omega = true;

        std::vector<cplx> z2(p.z);
        for (cplx& v : z2) v = v * cplx{1.13, 0.05} + cplx{0.07, 0.07};
        gauge.g(p.omega, z2, p.t, g_space);
        if (differs(g, g_space)) dep_space = true;
    }

    if (any_re && any_im) out.complexity = GaugeComplexity::complex;
    else if (any_re) out.complexity = GaugeComplexity::real;
    else if (any_im) out.complexity = GaugeComplexity::imaginary;
    else out.complexity = GaugeComplexity::zero;

    if (dep_space) out.dependence = dep_omega ? GaugeDependence::mixed : GaugeDependence::space_dependent;
    else out.dependence = GaugeDependence::autonomous;

    out.norm_preserving = norm_preserving;
    return out;
}

std::string to_string(GaugeComplexity c) {
    switch (c) {
        case GaugeComplexity::zero: return "zero";
        case GaugeComplexity::real: return "real";
        case GaugeComplexity::imaginary: return "imaginary";
        case GaugeComplexity::complex: return "complex";
    }
    return "?";
}

std::string to_string(GaugeDependence d) {
    switch (d) {
        case GaugeDependence::autonomous: return "autonomous";
        case GaugeDependence::space_dependent: return "space_dependent";
        case GaugeDependence::mixed: return "mixed";
    }
    return "?";
}

}  // namespace gaugep
