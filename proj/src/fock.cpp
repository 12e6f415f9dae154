#include "gaugep/fock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gaugep {

namespace {

using Eigen::MatrixXcd;

std::vector<double> sqrt_table(int dim) {
    std::vector<double> s(static_cast<std::size_t>(dim) + 1);
    for (int k = 0; k <= dim; ++k) s[static_cast<std::size_t>(k)] = std::sqrt(static_cast<double>(k));
    return s;
}

void absorber_rhs(const MatrixXcd& r, MatrixXcd& out, double gamma, cplx eps,
                  const std::vector<double>& sq) {
    const int d = static_cast<int>(r.rows());
    const cplx epsc = std::conj(eps);
    const bool driven = eps != cplx{};
    for (int n = 0; n < d; ++n) {
        for (int m = 0; m < d; ++m) {
            cplx v{};
            if (driven) {
                if (m > 0) v += eps * sq[m] * r(m - 1, n);
                if (m + 1 < d) v -= epsc * sq[m + 1] * r(m + 1, n);
                if (n + 1 < d) v -= eps * sq[n + 1] * r(m, n + 1);
                if (n > 0) v += epsc * sq[n] * r(m, n - 1);
            }
            if (m + 1 < d && n + 1 < d) v += gamma * sq[m + 1] * sq[n + 1] * r(m + 1, n + 1);
            if (m + 2 < d && n + 2 < d)
                v += sq[m + 1] * sq[m + 2] * sq[n + 1] * sq[n + 2] * r(m + 2, n + 2);
            const double loss =
                0.5 * gamma * (m + n) + 0.5 * (static_cast<double>(m) * (m - 1) + static_cast<double>(n) * (n - 1));
            v -= loss * r(m, n);
            out(m, n) = v;
        }
    }
}

void population_rhs(const std::vector<double>& p, std::vector<double>& out, double gamma) {
    const auto d = p.size();
    for (std::size_t m = 0; m < d; ++m) {
        const auto mm = static_cast<double>(m);
        double v = -(gamma * mm + mm * (mm - 1.0)) * p[m];
        if (m + 1 < d) v += gamma * (mm + 1.0) * p[m + 1];
        if (m + 2 < d) v += (mm + 1.0) * (mm + 2.0) * p[m + 2];
        out[m] = v;
    }
}

std::string time_str(double t) {
    std::ostringstream os;
    os << t;
    return os.str();
}

void check_times(std::span<const double> times, double t0) {
    if (times.empty()) throw ConfigError("oracle needs at least one sample time");
    double prev = t0;
    for (double t : times) {
        if (!(t >= prev - 1e-12)) throw ConfigError("oracle sample times must be ascending from rho0.time");
        prev = t;
    }
}

void record(OracleSeries& out, const FockDensityMatrix& r, const OracleOptions& opts) {
    out.times.push_back(r.time);
    for (std::size_t k = 0; k < opts.moments.size(); ++k)
        out.values[k].push_back(fock_moment(r, opts.moments[k].n, opts.moments[k].m));
    out.trace.push_back(r.trace());
    out.tail.push_back(r.tail());
    if (opts.keep_states) out.states.push_back(r);
}

void check_truncation(const FockDensityMatrix& r, const OracleOptions& opts) {
    const double tr = r.trace();
    if (!std::isfinite(tr) || std::abs(tr - 1.0) > opts.trace_tol) {
        throw TruncationError("trace drifted to " + time_str(tr) + " at t = " + time_str(r.time) +
                              " (dim " + std::to_string(r.dim) + "); reduce dt or raise dim");
    }
    if (r.tail() > opts.tail_tol) {
        throw TruncationError("top level occupancy " + time_str(r.tail()) + " exceeds " +
                              time_str(opts.tail_tol) + " at t = " + time_str(r.time) +
                              "; increase dim above " + std::to_string(r.dim));
    }
}

OracleSeries make_series(const OracleOptions& opts) {
    OracleSeries out;
    out.moments = opts.moments;
    out.values.assign(opts.moments.size(), {});
    return out;
}

}  // namespace

FockDensityMatrix coherent_rho(cplx alpha0, int dim, double tail_tol) {
    if (dim < 1) throw ConfigError("Fock dimension must be >= 1");
    const double x = std::norm(alpha0);
    Eigen::VectorXcd c(dim);
    // c_k = e^{-|a|^2/2} a^k / sqrt(k!)
    double kept = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double logmag =
            -0.5 * x + (x > 0.0 ? k * 0.5 * std::log(x) : (k == 0 ? 0.0 : -INFINITY)) -
            0.5 * std::lgamma(k + 1.0);
        const double phase = k * std::arg(alpha0);
        c(k) = std::polar(std::exp(logmag), phase);
        kept += std::norm(c(k));
    }
    // Poisson mass at and above dim, summed directly so it is not lost to rounding.
    double tail = 0.0;
    if (x > 0.0) {
        for (int k = dim; k < dim + 2000; ++k) {
            const double term = std::exp(-x + k * std::log(x) - std::lgamma(k + 1.0));
            tail += term;
            if (k > x && term < 1e-30) break;
        }
    }
    if (tail > tail_tol) {
        throw TruncationError("coherent state |" + time_str(std::abs(alpha0)) +
                              "> leaves Poisson weight " + time_str(tail) + " above level " +
                              std::to_string(dim - 1) + "; increase dim");
    }
    c /= std::sqrt(kept);
    FockDensityMatrix r;
    r.dim = dim;
    r.rho = c * c.adjoint();
    r.renormalization = tail;
    return r;
}

FockDensityMatrix fock_rho(int n, int dim) {
    if (n < 0 || n >= dim) throw ConfigError("Fock state |" + std::to_string(n) + "> outside dim " +
                                             std::to_string(dim));
    FockDensityMatrix r;
    r.dim = dim;
    r.rho = MatrixXcd::Zero(dim, dim);
    r.rho(n, n) = 1.0;
    return r;
}

cplx fock_moment(const FockDensityMatrix& r, int n, int m) {
    // <a^dag^n a^m> = sum_j rho(j, k) <k| a^dag^n a^m |j>, k = j - m + n.
    cplx acc{};
    for (int j = m; j < r.dim; ++j) {
        const int k = j - m + n;
        if (k >= r.dim) break;
        double c = 1.0;
        for (int i = 0; i < m; ++i) c *= std::sqrt(static_cast<double>(j - i));
        for (int i = 0; i < n; ++i) c *= std::sqrt(static_cast<double>(k - i));
        acc += c * r.rho(j, k);
    }
    return acc;
}

Series OracleSeries::series(std::size_t k, double axis_scale) const {
    Series s;
    s.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) s.push_back({axis_scale * times[i], values[k][i], 0.0, true});
    return s;
}

double absorber_stable_step(int dim, const AbsorberParams& p) {
    const double top = dim - 1.0;
    const double rate = p.gamma * top + top * (top - 1.0) + 4.0 * std::abs(p.epsilon) * std::sqrt(dim);
    return rate > 0.0 ? 2.5 / rate : std::numeric_limits<double>::infinity();
}

OracleSeries evolve_absorber(const FockDensityMatrix& rho0, const AbsorberParams& p,
                             std::span<const double> times, const OracleOptions& opts) {
    if (!(p.gamma >= 0.0)) throw ConfigError("absorber gamma must be >= 0");
    if (!(opts.dt > 0.0)) throw ConfigError("oracle dt must be > 0");
    if (opts.populations_only && p.epsilon != cplx{})
        throw ConfigError("populations-only evolution requires epsilon = 0");
    check_times(times, rho0.time);

    const int d = rho0.dim;
    double h = opts.dt;
    if (opts.auto_substep) h = std::min(h, absorber_stable_step(d, p));

    OracleSeries out = make_series(opts);
    out.substep = h;
    FockDensityMatrix cur = rho0;

    if (opts.populations_only) {
        std::vector<double> pop(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) pop[static_cast<std::size_t>(k)] = rho0.rho(k, k).real();
        std::vector<double> k1(pop.size()), k2(pop.size()), k3(pop.size()), k4(pop.size()), tmp(pop.size());
        auto sync = [&]() {
            cur.rho.setZero();
            for (int k = 0; k < d; ++k) cur.rho(k, k) = pop[static_cast<std::size_t>(k)];
        };
        for (double target : times) {
            const double span = target - cur.time;
            const long steps = span > 0.0 ? static_cast<long>(std::ceil(span / h - 1e-9)) : 0;
            const double hs = steps > 0 ? span / static_cast<double>(steps) : 0.0;
            for (long s = 0; s < steps; ++s) {
                population_rhs(pop, k1, p.gamma);
                for (std::size_t i = 0; i < pop.size(); ++i) tmp[i] = pop[i] + 0.5 * hs * k1[i];
                population_rhs(tmp, k2, p.gamma);
                for (std::size_t i = 0; i < pop.size(); ++i) tmp[i] = pop[i] + 0.5 * hs * k2[i];
                population_rhs(tmp, k3, p.gamma);
                for (std::size_t i = 0; i < pop.size(); ++i) tmp[i] = pop[i] + hs * k3[i];
                population_rhs(tmp, k4, p.gamma);
                for (std::size_t i = 0; i < pop.size(); ++i)
                    pop[i] += hs / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            cur.time = target;
            sync();
            check_truncation(cur, opts);
            record(out, cur, opts);
        }
        out.final_state = cur;
        return out;
    }

    const auto sq = sqrt_table(d + 2);
    MatrixXcd k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);
    for (double target : times) {
        const double span = target - cur.time;
        const long steps = span > 0.0 ? static_cast<long>(std::ceil(span / h - 1e-9)) : 0;
        const double hs = steps > 0 ? span / static_cast<double>(steps) : 0.0;
        for (long s = 0; s < steps; ++s) {
            absorber_rhs(cur.rho, k1, p.gamma, p.epsilon, sq);
            tmp = cur.rho + 0.5 * hs * k1;
            absorber_rhs(tmp, k2, p.gamma, p.epsilon, sq);
            tmp = cur.rho + 0.5 * hs * k2;
            absorber_rhs(tmp, k3, p.gamma, p.epsilon, sq);
            tmp = cur.rho + hs * k3;
            absorber_rhs(tmp, k4, p.gamma, p.epsilon, sq);
            cur.rho += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        cur.time = target;
        check_truncation(cur, opts);
        record(out, cur, opts);
    }
    out.final_state = cur;
    return out;
}

OracleSeries evolve_kerr(const FockDensityMatrix& rho0, const KerrParams& p,
                         std::span<const double> times, const OracleOptions& opts) {
    check_times(times, rho0.time);
    const int d = rho0.dim;
    std::vector<double> e(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) e[static_cast<std::size_t>(k)] = p.omega0 * k + 0.5 * p.kappa * k * (k - 1.0);

    OracleSeries out = make_series(opts);
    FockDensityMatrix cur = rho0;
    for (double target : times) {
        const double dt = target - rho0.time;
        for (int n = 0; n < d; ++n)
            for (int m = 0; m < d; ++m)
                cur.rho(m, n) = rho0.rho(m, n) * std::polar(1.0, -(e[static_cast<std::size_t>(m)] -
                                                                  e[static_cast<std::size_t>(n)]) * dt);
        cur.time = target;
        check_truncation(cur, opts);
        record(out, cur, opts);
    }
    out.final_state = cur;
    return out;
}

double absorber_steady_coherent(cplx alpha0) {
    return 0.5 * (1.0 - std::exp(-2.0 * std::norm(alpha0)));
}

double absorber_parity_sum(const FockDensityMatrix& rho0) {
    return parity_populations(rho0).second;
}

std::pair<double, double> parity_populations(const FockDensityMatrix& r) {
    double even = 0.0, odd = 0.0;
    for (int k = 0; k < r.dim; ++k) (k % 2 == 0 ? even : odd) += r.rho(k, k).real();
    return {even, odd};
}

DensityCheck check_density(const FockDensityMatrix& r) {
    DensityCheck c;
    c.hermiticity = (r.rho - r.rho.adjoint()).norm();
    c.trace_error = std::abs(r.rho.trace() - cplx{1.0, 0.0});
    const MatrixXcd h = 0.5 * (r.rho + r.rho.adjoint());
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    c.min_eigenvalue = es.eigenvalues().minCoeff();
    return c;
}

}  // namespace gaugep
