#include <doctest.h>

#include <cmath>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "gaugep/fock.hpp"

using namespace gaugep;

namespace {

// Independent reference for epsilon = 0: the population rate equations
// p_n' = (n+2)(n+1) p_{n+2} - n(n-1) p_n + gamma [(n+1) p_{n+1} - n p_n],
// propagated by a dense matrix exponential.
Eigen::VectorXd populations_exact(const Eigen::VectorXd& p0, double gamma, double t) {
    const int d = static_cast<int>(p0.size());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
    for (int n = 0; n < d; ++n) {
        l(n, n) -= n * (n - 1.0) + gamma * n;
        if (n + 2 < d) l(n, n + 2) += (n + 2.0) * (n + 1.0);
        if (n + 1 < d) l(n, n + 1) += gamma * (n + 1.0);
    }
    return (l * t).exp() * p0;
}

double mean_n(const Eigen::VectorXd& p) {
    double s = 0;
    for (int n = 0; n < p.size(); ++n) s += n * p(n);
    return s;
}

Eigen::VectorXd diag(const FockDensityMatrix& r) { return r.rho.diagonal().real(); }

}  // namespace

TEST_CASE("initial density matrices") {
    const FockDensityMatrix vac = coherent_rho(0.0, 10);
    CHECK(vac.rho(0, 0) == cplx{1.0, 0.0});
    CHECK(vac.rho.norm() == doctest::Approx(1.0));

    const double a = 1.0 / std::sqrt(2.0);
    const FockDensityMatrix c = coherent_rho(a, 20);
    CHECK(c.trace() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(fock_moment(c, 1, 1) - 0.5) < 1e-10);
    CHECK(std::abs(fock_moment(c, 0, 1) - a) < 1e-10);
    CHECK(c.renormalization < 1e-15);
    CHECK(c.tail() < 1e-15);

    const FockDensityMatrix big = coherent_rho(cplx{0.0, 10.0}, 180);
    CHECK(std::abs(fock_moment(big, 1, 1) - 100.0) < 1e-8);
    CHECK(std::abs(fock_moment(big, 0, 1) - cplx{0.0, 10.0}) < 1e-8);
    CHECK_THROWS_AS(coherent_rho(10.0, 120), TruncationError);

    const FockDensityMatrix two = fock_rho(2, 6);
    CHECK(std::abs(fock_moment(two, 1, 1) - 2.0) < 1e-14);
    CHECK(std::abs(fock_moment(two, 2, 2) - 2.0) < 1e-14);
    CHECK(fock_moment(two, 0, 1) == cplx{});
    CHECK_THROWS_AS(fock_rho(6, 6), ConfigError);
}

TEST_CASE("number states under two-boson loss") {
    std::vector<double> times;
    for (int i = 0; i <= 20; ++i) times.push_back(0.1 * i);
    const OracleSeries one = evolve_absorber(fock_rho(1, 8), {}, times);
    for (const auto& v : one.values[0]) CHECK(std::abs(v - 1.0) < 1e-12);

    const OracleSeries two = evolve_absorber(fock_rho(2, 8), {}, times);
    for (std::size_t r = 0; r < times.size(); ++r)
        CHECK(std::abs(two.values[0][r] - 2.0 * std::exp(-2.0 * times[r])) < 1e-8);
}

TEST_CASE("coherent state relaxes to the parity steady state") {
    const double a = 1.0 / std::sqrt(2.0);
    const std::vector<double> times{0.0, 1.0, 3.5, 10.0};
    for (bool pops : {false, true}) {
        OracleOptions o;
        o.populations_only = pops;
        o.keep_states = true;
        const OracleSeries s = evolve_absorber(coherent_rho(a, 20), {}, times, o);
        CHECK(std::abs(s.values[0].back().real() - 0.5 * (1.0 - std::exp(-1.0))) < 1e-4);
        const auto [even0, odd0] = parity_populations(s.states.front());
        for (const auto& st : s.states) {
            const auto [even, odd] = parity_populations(st);
            CHECK(std::abs(even - even0) < 1e-8);
            CHECK(std::abs(odd - odd0) < 1e-8);
            const DensityCheck chk = check_density(st);
            CHECK(chk.hermiticity < 1e-12);
            CHECK(chk.trace_error < 1e-10);
            CHECK(chk.min_eigenvalue > -1e-10);
        }
    }
    CHECK(absorber_steady_coherent(a) == doctest::Approx(0.31606).epsilon(1e-5));
    CHECK(absorber_steady_coherent(0.0) == 0.0);
    CHECK(absorber_steady_coherent(10.0) == doctest::Approx(0.5));
    CHECK(absorber_parity_sum(coherent_rho(a, 20)) ==
          doctest::Approx(absorber_steady_coherent(a)).epsilon(1e-12));
}

TEST_CASE("full and population-only evolution agree with the rate-equation oracle") {
    const std::vector<double> times{0.0, 0.25, 1.0, 2.5};
    for (double gamma : {0.0, 0.1}) {
        const FockDensityMatrix r0 = coherent_rho(1.3, 30);
        OracleOptions pops;
        pops.populations_only = true;
        pops.keep_states = true;
        OracleOptions full;
        full.keep_states = true;
        const OracleSeries a = evolve_absorber(r0, {gamma, {}}, times, pops);
        const OracleSeries b = evolve_absorber(r0, {gamma, {}}, times, full);
        for (std::size_t r = 0; r < times.size(); ++r) {
            const Eigen::VectorXd ref = populations_exact(diag(r0), gamma, times[r]);
            CHECK((diag(a.states[r]) - ref).norm() < 1e-9);
            CHECK((diag(b.states[r]) - ref).norm() < 1e-9);
            CHECK(std::abs(a.values[0][r] - mean_n(ref)) < 1e-9);
        }
    }
}

TEST_CASE("steady state is fixed by the odd-sector population for any start") {
    FockDensityMatrix mix = fock_rho(0, 12);
    mix.rho(0, 0) = 0.1;
    mix.rho(3, 3) = 0.3;
    mix.rho(4, 4) = 0.2;
    mix.rho(7, 7) = 0.4;
    const std::vector<double> times{0.0, 20.0};
    const OracleSeries s = evolve_absorber(mix, {}, times);
    CHECK(std::abs(s.values[0].back() - absorber_parity_sum(mix)) < 1e-8);
    CHECK(absorber_parity_sum(mix) == doctest::Approx(0.7));
}

TEST_CASE("truncation does not matter at the figure settings") {
    const auto times = std::vector<double>{0.0, 0.5, 1.0, 2.0, 3.5};
    {
        const double a = 1.0 / std::sqrt(2.0);
        const auto s20 = evolve_absorber(coherent_rho(a, 20), {}, times);
        const auto s40 = evolve_absorber(coherent_rho(a, 40), {}, times);
        for (std::size_t r = 0; r < times.size(); ++r)
            CHECK(std::abs(s20.values[0][r] - s40.values[0][r]) < 1e-8);
    }
    {
        const AbsorberParams drive{0.0, 0.05};
        const auto t = std::vector<double>{0.0, 2.5, 5.0, 10.0};
        const auto s20 = evolve_absorber(coherent_rho(0.0, 20), drive, t);
        const auto s40 = evolve_absorber(coherent_rho(0.0, 40), drive, t);
        for (std::size_t r = 0; r < t.size(); ++r)
            CHECK(std::abs(s20.values[0][r] - s40.values[0][r]) < 1e-8);
        CHECK(s20.trace.back() == doctest::Approx(1.0).epsilon(1e-10));
    }
    {
        OracleOptions pops;
        pops.populations_only = true;
        const AbsorberParams p{0.1, {}};
        const auto t = std::vector<double>{0.0, 0.05, 0.5, 2.0, 10.0};
        const auto s180 = evolve_absorber(coherent_rho(10.0, 180), p, t, pops);
        const auto s360 = evolve_absorber(coherent_rho(10.0, 360), p, t, pops);
        for (std::size_t r = 0; r < t.size(); ++r)
            CHECK(std::abs(s180.values[0][r] - s360.values[0][r]) < 1e-8);
    }
}

TEST_CASE("driven absorber keeps a valid density matrix") {
    OracleOptions o;
    o.keep_states = true;
    o.moments = {{1, 1, 0}, {0, 1, 0}};
    const std::vector<double> t{0.0, 1.0, 5.0, 10.0};
    const auto s = evolve_absorber(coherent_rho(0.0, 20), {0.0, 0.05}, t, o);
    for (const auto& st : s.states) {
        const DensityCheck chk = check_density(st);
        CHECK(chk.hermiticity < 1e-12);
        CHECK(chk.trace_error < 1e-9);
        CHECK(chk.min_eigenvalue > -1e-9);
    }
    // Early on <a> grows like epsilon t.
    const auto early = evolve_absorber(coherent_rho(0.0, 20), {0.0, 0.05}, std::vector<double>{0.0, 0.01}, o);
    CHECK(std::abs(early.values[1][1] - 0.05 * 0.01) < 1e-6);

    // A drive far too strong for the basis is reported, not silently truncated.
    CHECK_THROWS_AS(evolve_absorber(coherent_rho(0.0, 6), {0.0, 20.0}, std::vector<double>{0.0, 5.0}), TruncationError);
}

TEST_CASE("auto substep keeps RK4 stable") {
    const double h = absorber_stable_step(180, {0.1, {}});
    CHECK(h > 0.0);
    CHECK(h < 1e-3);
    OracleOptions o;
    o.populations_only = true;
    const auto s = evolve_absorber(coherent_rho(10.0, 180), {0.1, {}}, std::vector<double>{0.0, 0.1}, o);
    CHECK(s.substep <= h);
    CHECK(std::isfinite(s.values[0].back().real()));
}

TEST_CASE("Kerr evolution") {
    const std::vector<double> times{0.0, 0.1, 0.5, 1.3};
    const double w0 = 0.5;
    OracleOptions o;
    o.moments = {{0, 1, 0}, {1, 1, 0}};
    const auto free = evolve_kerr(coherent_rho(1.0, 24), {w0, 0.0}, times, o);
    for (std::size_t r = 0; r < times.size(); ++r)
        CHECK(std::abs(free.values[0][r] - std::exp(-kI * w0 * times[r])) < 1e-10);

    // <a> = alpha0 e^{-i w0 t} exp(|alpha0|^2 (e^{-i kappa t} - 1)) for a coherent start.
    const double kappa = 1.0;
    const cplx a0{1.0, 0.0};
    const auto k = evolve_kerr(coherent_rho(a0, 30), {w0, kappa}, times, o);
    for (std::size_t r = 0; r < times.size(); ++r) {
        const double t = times[r];
        const cplx exact = a0 * std::exp(-kI * w0 * t) * std::exp(std::norm(a0) * (std::exp(-kI * kappa * t) - 1.0));
        CHECK(std::abs(k.values[0][r] - exact) < 1e-10);
        CHECK(std::abs(k.values[1][r] - 1.0) < 1e-10);
    }

    FockDensityMatrix d = fock_rho(0, 6);
    d.rho(0, 0) = 0.5;
    d.rho(3, 3) = 0.5;
    const auto s = evolve_kerr(d, {w0, kappa}, times, o);
    for (const auto& v : s.values[1]) CHECK(std::abs(v - 1.5) < 1e-14);
}
