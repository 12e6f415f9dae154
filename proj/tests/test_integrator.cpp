#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "gaugep/integrator.hpp"
#include "gaugep/rng.hpp"

using namespace gaugep;

namespace {

// dz = -z dt with no noise; the simplest test of the deterministic update.
ModelSpec linear_decay() {
    ModelSpec m;
    m.id = "decay";
    m.family = "decay";
    m.modes = 1;
    m.noises = 1;
    auto drift = [](std::span<const cplx> z, double, std::span<cplx> out) {
        out[0] = -z[0];
        out[1] = -z[1];
    };
    auto zero = [](std::span<const cplx>, double, std::span<cplx> out) {
        for (auto& v : out) v = 0.0;
    };
    m.drift_ito = drift;
    m.drift_strat = drift;
    m.noise = zero;
    m.diffusion = zero;
    return m;
}

// Pure additive noise: z' = z + B dW in either calculus.
ModelSpec additive() {
    ModelSpec m = linear_decay();
    m.id = "additive";
    m.noises = 2;
    auto zero = [](std::span<const cplx>, double, std::span<cplx> out) {
        for (auto& v : out) v = 0.0;
    };
    m.drift_ito = zero;
    m.drift_strat = zero;
    m.noise = [](std::span<const cplx>, double, std::span<cplx> out) {
        out[0] = cplx{0.3, 0.1};
        out[1] = cplx{0.0, 0.5};
        out[2] = cplx{-0.2, 0.0};
        out[3] = cplx{0.7, 0.7};
    };
    return m;
}

TrajectoryState state(cplx a, cplx b, cplx omega = 1.0) {
    TrajectoryState s;
    s.alpha = {a};
    s.beta = {b};
    s.omega = omega;
    return s;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }
bool same_bits(cplx a, cplx b) { return same_bits(a.real(), b.real()) && same_bits(a.imag(), b.imag()); }

bool same_sums(const PartialSums& a, const PartialSums& b) {
    if (a.alive != b.alive || a.negative != b.negative || a.num.size() != b.num.size()) return false;
    for (std::size_t k = 0; k < a.num.size(); ++k)
        if (!same_bits(a.num[k], b.num[k])) return false;
    return same_bits(a.den, b.den) && same_bits(a.sum_abs, b.sum_abs) && same_bits(a.sum_re, b.sum_re) &&
           same_bits(a.sum_im, b.sum_im) && same_bits(a.sum_re2, b.sum_re2) &&
           same_bits(a.sum_im2, b.sum_im2) && same_bits(a.min_re, b.min_re) &&
           same_bits(a.max_re, b.max_re);
}

bool same_records(const TrajectoryRecordSet& a, const TrajectoryRecordSet& b) {
    if (a.sums.size() != b.sums.size() || a.alive != b.alive) return false;
    for (std::size_t r = 0; r < a.sums.size(); ++r) {
        if (a.sums[r].diverged != b.sums[r].diverged) return false;
        for (std::size_t k = 0; k < a.sums[r].batches.size(); ++k)
            if (!same_sums(a.sums[r].batches[k], b.sums[r].batches[k])) return false;
    }
    for (std::size_t i = 0; i < a.final_ensemble.states.size(); ++i) {
        const auto& x = a.final_ensemble.states[i];
        const auto& y = b.final_ensemble.states[i];
        if (!same_bits(x.omega, y.omega) || !same_bits(x.alpha[0], y.alpha[0]) ||
            !same_bits(x.beta[0], y.beta[0]))
            return false;
    }
    return true;
}

StepConfig steps(double dt, double t_end, int stride, Scheme scheme = Scheme::strat_semi_implicit) {
    StepConfig c;
    c.dt = dt;
    c.t_end = t_end;
    c.record_stride = stride;
    c.scheme = scheme;
    return c;
}

}  // namespace

TEST_CASE("Euler step of linear decay") {
    const GaugedSystem sys = positive_p(linear_decay());
    const std::vector<double> dw{0.0};
    const TrajectoryState s = step_ito(state(1.0, 1.0), sys, dw, 0.01);
    CHECK(std::abs(s.alpha[0] - 0.99) < 1e-15);
    CHECK(s.omega == cplx{1.0, 0.0});
    CHECK(s.time == doctest::Approx(0.01));
    CHECK_THROWS_AS(step_ito(state(1.0, 1.0), sys, std::vector<double>{0.0, 0.0}, 0.01), ConfigError);
}

TEST_CASE("weight picks up Omega g dW") {
    const GaugedSystem sys = apply_drift_gauge(frozen_model(1), constant_gauge({kI}));
    const TrajectoryState s = step_ito(state(0.0, 0.0), sys, std::vector<double>{0.1}, 0.01);
    CHECK(std::abs(s.omega - cplx{1.0, 0.1}) < 1e-15);
    CHECK(s.alpha[0] == cplx{});
}

TEST_CASE("midpoint iterations converge to the implicit midpoint") {
    const GaugedSystem sys = positive_p(linear_decay());
    const std::vector<double> dw{0.0};
    const TrajectoryState three = step_strat(state(1.0, 1.0), sys, dw, 0.1, 3);
    CHECK(std::abs(three.alpha[0] - 0.9047625) < 1e-15);
    const TrajectoryState many = step_strat(state(1.0, 1.0), sys, dw, 0.1, 60);
    CHECK(std::abs(many.alpha[0] - (1.0 - 0.1 / 1.05)) < 1e-14);
    CHECK(std::abs(three.alpha[0] - many.alpha[0]) < 1e-5);
    CHECK_THROWS_AS(step_strat(state(1.0, 1.0), sys, dw, 0.1, 0), ConfigError);
}

TEST_CASE("additive noise steps identically in both calculi") {
    const GaugedSystem sys = positive_p(additive());
    const std::vector<double> dw{0.13, -0.41};
    const TrajectoryState a = step_ito(state(0.2, 0.5), sys, dw, 0.01);
    const TrajectoryState b = step_strat(state(0.2, 0.5), sys, dw, 0.01);
    CHECK(same_bits(a.alpha[0], b.alpha[0]));
    CHECK(same_bits(a.beta[0], b.beta[0]));
    CHECK(std::abs(a.alpha[0] - (0.2 + 0.13 * cplx{0.3, 0.1} - 0.41 * cplx{0.0, 0.5})) < 1e-15);
}

TEST_CASE("circular gauge without noise pulls |n| to 1/2") {
    const GaugedSystem sys = apply_drift_gauge(absorber_model({}), circular_gauge());
    const std::vector<double> dw{0.0, 0.0};
    TrajectoryState s = state(1.0, 1.0);
    double prev = 1.0;
    bool monotone = true;
    for (int i = 0; i < 4000; ++i) {
        s = step_strat(s, sys, dw, 0.005);
        const double r = std::abs(s.alpha[0] * s.beta[0]);
        monotone = monotone && r < prev;
        prev = r;
    }
    CHECK(monotone);
    CHECK(prev == doctest::Approx(0.5).epsilon(1e-6));
    // Closed solution of dr/dt = r - 2 r^2 from r = 1 at t = 0.5.
    TrajectoryState q = state(1.0, 1.0);
    for (int i = 0; i < 500; ++i) q = step_strat(q, sys, dw, 0.001);
    const double exact = 0.5 / (1.0 - 0.5 * std::exp(-0.5));
    CHECK(std::abs(q.alpha[0] * q.beta[0]) == doctest::Approx(exact).epsilon(1e-6));
}

TEST_CASE("record schedule") {
    CHECK(record_times(steps(0.01, 0.0, 5)) == std::vector<double>{0.0});
    const auto t = record_times(steps(0.005, 3.5, 20));
    CHECK(t.size() == 36);
    CHECK(t[1] == doctest::Approx(0.1));
    CHECK(t.back() == 3.5);
    // A stride that does not divide the step count leaves a short last interval.
    const auto u = record_times(steps(0.1, 1.0, 3));
    CHECK(u.size() == 5);
    CHECK(u.back() == 1.0);

    CHECK_THROWS_AS(validate_step_config(steps(0.3, 1.0, 1)), ConfigError);
    CHECK_THROWS_AS(validate_step_config(steps(0.0, 1.0, 1)), ConfigError);
    CHECK_THROWS_AS(validate_step_config(steps(2.0, 1.0, 1)), ConfigError);
    CHECK_THROWS_AS(validate_step_config(steps(0.1, 1.0, 0)), ConfigError);
    StepConfig bad_iters = steps(0.1, 1.0, 1);
    bad_iters.midpoint_iters = 0;
    CHECK_THROWS_AS(validate_step_config(bad_iters), ConfigError);

    StepConfig ramped = steps(0.01, 5.0, 10);
    ramped.ramp = RampSchedule{2.0, 0.1};
    const auto r = record_times(ramped);
    CHECK(r.back() == 5.0);
    CHECK(r[1] == doctest::Approx(0.1));
    CHECK(r[2] == doctest::Approx(0.3));
    CHECK(r[4] == doctest::Approx(1.5));  // capped at dt_max = 0.1 from here on

    CHECK(parse_scheme("ito") == Scheme::ito_euler);
    CHECK(parse_scheme("strat_semi_implicit") == Scheme::strat_semi_implicit);
    CHECK_THROWS_AS(parse_scheme("rk4"), ConfigError);
    CHECK(to_string(Scheme::ito_euler) == "ito_euler");
}

TEST_CASE("zero-length run returns the initial ensemble") {
    const GaugedSystem sys = apply_drift_gauge(absorber_model({}), circular_gauge());
    const Ensemble ens = init_coherent(cplx{0.5, 0.2}, 40, 3);
    const auto rec = run_ensemble(ens, sys, steps(0.01, 0.0, 1));
    REQUIRE(rec.times.size() == 1);
    CHECK(rec.final_ensemble.states[7].alpha == ens.states[7].alpha);
    const auto n = moment(rec, 1, 1);
    CHECK(std::abs(n[0].value - std::norm(cplx{0.5, 0.2})) < 1e-15);
    CHECK_THROWS_AS(moment(rec, 2, 2), ConfigError);
}

TEST_CASE("results do not depend on the worker count") {
    const GaugedSystem sys = apply_drift_gauge(absorber_model({}), circular_gauge());
    // 300 trajectories per batch: two chunks per batch.
    const Ensemble ens = init_coherent(cplx{0.8, 0.0}, 6000, 17);
    RunOptions opts;
    opts.moments = {{1, 1, 0}, {0, 1, 0}, {2, 2, 0}};
    opts.workers = 1;
    const auto one = run_ensemble(ens, sys, steps(0.01, 0.3, 10), opts);
    opts.workers = 2;
    const auto two = run_ensemble(ens, sys, steps(0.01, 0.3, 10), opts);
    opts.workers = 8;
    const auto eight = run_ensemble(ens, sys, steps(0.01, 0.3, 10), opts);
    CHECK(same_records(one, two));
    CHECK(same_records(one, eight));
    opts.workers = 1;
    CHECK(same_records(one, run_ensemble(ens, sys, steps(0.01, 0.3, 10), opts)));
}

TEST_CASE("zero drift gauge is bit-identical to positive-P") {
    const ModelSpec m = absorber_model({});
    const Ensemble ens = init_coherent(cplx{0.7071067811865476, 0.0}, 2000, 21);
    RunOptions opts;
    opts.abort_fraction = 1.0;
    for (Scheme scheme : {Scheme::ito_euler, Scheme::strat_semi_implicit}) {
        const auto plain = run_ensemble(ens, positive_p(m), steps(0.01, 2.0, 20, scheme), opts);
        const auto zero =
            run_ensemble(ens, apply_drift_gauge(m, constant_gauge({0.0, 0.0})), steps(0.01, 2.0, 20, scheme), opts);
        CHECK(same_records(plain, zero));
        CHECK(plain.divergences.size() == zero.divergences.size());
    }
}

TEST_CASE("circular gauge |n| does not depend on the noise") {
    const GaugedSystem sys = apply_drift_gauge(absorber_model({}), circular_gauge());
    const double exact = 0.5 / (1.0 - 0.5 * std::exp(-0.5));
    double worst = 0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Ensemble ens = init_coherent(cplx{1.0, 0.0}, 200, seed);
        const auto rec = run_ensemble(ens, sys, steps(0.001, 0.5, 500));
        for (const auto& s : rec.final_ensemble.states)
            worst = std::max(worst, std::abs(std::abs(s.alpha[0] * s.beta[0]) - exact));
    }
    MESSAGE("max | |n| - r(t) | over 600 noisy trajectories: " << worst);
    CHECK(worst < 1e-3);
}

TEST_CASE("mean weight is conserved on gauged runs") {
    const GaugedSystem sys = apply_drift_gauge(absorber_model({}), circular_gauge());
    const auto rec = run_ensemble(init_coherent(cplx{0.7071067811865476, 0.0}, 4000, 5), sys,
                                  steps(0.005, 2.0, 20));
    for (const auto& w : weight_series(rec)) {
        CHECK(std::abs(w.mean_re - 1.0) <= 4.0 * w.se_mean_re + 1e-12);
        CHECK(std::abs(w.mean_im) <= 4.0 * w.se_mean_im + 1e-12);
    }
    CHECK(rec.diverged() == 0);
}

TEST_CASE("norm-preserving gauge keeps Re Omega = 1") {
    auto f = [](std::span<const cplx> z, std::span<double> out) {
        const cplx n = z[0] * z[1];
        out[0] = 0.3 * n.imag() / (1.0 + std::abs(n));
        out[1] = 0.2;
    };
    const LaserParams p{1.0, 0.25, {}};
    const GaugedSystem sys = apply_drift_gauge(laser_model(p), norm_preserving_gauge(f, 2));
    RunOptions opts;
    opts.keep_snapshots = true;
    opts.abort_fraction = 1.0;
    const auto rec = run_ensemble(init_gaussian(0.1, 400, 8), sys, steps(0.005, 1.0, 50, Scheme::ito_euler), opts);
    double worst = 0;
    for (const auto& snap : rec.snapshots)
        for (const auto& s : snap) worst = std::max(worst, std::abs(s.omega.real() - 1.0));
    CHECK(worst <= 1e-8);
    // The imaginary part does move.
    double spread = 0;
    for (const auto& s : rec.final_ensemble.states) spread = std::max(spread, std::abs(s.omega.imag()));
    CHECK(spread > 0.01);
    CHECK_THROWS_AS(run_ensemble(init_gaussian(0.1, 400, 8), sys, steps(0.005, 1.0, 50)), ConfigError);
}

TEST_CASE("Ito and Stratonovich schemes agree on the gauged absorber") {
    const GaugedSystem sys = apply_drift_gauge(absorber_model({}), circular_gauge());
    const Ensemble a = init_coherent(cplx{1.0, 0.0}, 8000, 31);
    const Ensemble b = init_coherent(cplx{1.0, 0.0}, 8000, 32);
    const auto ito = moment(run_ensemble(a, sys, steps(0.002, 0.5, 50, Scheme::ito_euler)), 1, 1);
    const auto str = moment(run_ensemble(b, sys, steps(0.002, 0.5, 50)), 1, 1);
    for (std::size_t r = 0; r < ito.size(); ++r) {
        const double sigma = std::hypot(ito[r].std_err, str[r].std_err);
        CHECK(std::abs(ito[r].value - str[r].value) <= 3.0 * sigma + 1e-12);
    }
}

TEST_CASE("Ito and Stratonovich schemes agree for every model") {
    struct Case {
        GaugedSystem sys;
        Ensemble ens;
        double t_end;
    };
    std::vector<Case> cases;
    cases.push_back({positive_p(absorber_model({0.1, cplx{0.05, 0}})), init_coherent(cplx{0.7, 0.0}, 4000, 1), 0.3});
    cases.push_back({positive_p(laser_model({})), init_gaussian(0.1, 4000, 2), 1.0});
    cases.push_back({positive_p(kerr_model({0.5, 1.0})), init_coherent(cplx{1.0, 0.0}, 4000, 3), 0.2});
    for (const auto& c : cases) {
        Ensemble other = c.ens;
        other.master_seed += 100;
        const auto ito = moment(run_ensemble(c.ens, c.sys, steps(0.001, c.t_end, 100, Scheme::ito_euler)), 1, 1);
        const auto str = moment(run_ensemble(other, c.sys, steps(0.001, c.t_end, 100)), 1, 1);
        for (std::size_t r = 0; r < ito.size(); ++r) {
            const double sigma = std::hypot(ito[r].std_err, str[r].std_err);
            CHECK(std::abs(ito[r].value - str[r].value) <= 3.5 * sigma + 1e-12);
        }
    }
}

TEST_CASE("step halving on matched noise converges") {
    // The coarse increments are sums of the finest ones, so the differences between
    // levels are pure discretization error.
    const GaugedSystem sys = apply_drift_gauge(absorber_model({}), circular_gauge());
    const int paths = 2000;
    const int fine = 256;
    const double t_end = 1.0;
    std::vector<int> levels{8, 16, 32, 64};
    std::vector<double> est;
    for (int n_steps : levels) {
        const int group = fine / n_steps;
        const double dt = t_end / n_steps;
        Stepper stepper(sys, Scheme::strat_semi_implicit, 3);
        double num = 0, den = 0;
        std::vector<double> dw_fine(2), dw(2);
        for (int p = 0; p < paths; ++p) {
            cplx omega = 1.0;
            std::vector<cplx> z{1.0, 1.0};
            NoiseStream stream(99, static_cast<std::uint64_t>(p));
            for (int s = 0; s < n_steps; ++s) {
                dw = {0.0, 0.0};
                for (int k = 0; k < group; ++k) {
                    stream.set_step(static_cast<std::uint32_t>(s * group + k));
                    stream.fill_standard_normal(dw_fine);
                    dw[0] += dw_fine[0] * std::sqrt(t_end / fine);
                    dw[1] += dw_fine[1] * std::sqrt(t_end / fine);
                }
                stepper.step(omega, z, s * dt, dt, dw);
            }
            num += 2.0 * (omega * z[0] * z[1]).real();
            den += 2.0 * omega.real();
        }
        est.push_back(num / den);
    }
    const double d1 = std::abs(est[0] - est[1]);
    const double d2 = std::abs(est[1] - est[2]);
    const double d3 = std::abs(est[2] - est[3]);
    MESSAGE("successive differences " << d1 << " " << d2 << " " << d3);
    CHECK(d1 > d2);
    CHECK(d2 > d3);
}

TEST_CASE("escaping trajectories are frozen, counted and can abort the run") {
    // dz = z^2 dt reaches infinity at t = 1 from z = 1.
    ModelSpec blowup = linear_decay();
    blowup.drift_ito = [](std::span<const cplx> z, double, std::span<cplx> out) {
        out[0] = z[0] * z[0];
        out[1] = z[1] * z[1];
    };
    blowup.drift_strat = blowup.drift_ito;
    const Ensemble ens = init_coherent(cplx{1.0, 0.0}, 40, 4);
    const GaugedSystem sys = positive_p(blowup);
    RunOptions opts;
    opts.abort_fraction = 1.0;
    const auto rec = run_ensemble(ens, sys, steps(0.01, 3.0, 50), opts);
    CHECK(rec.diverged() == 40);
    REQUIRE(rec.divergences.size() == 40);
    CHECK(rec.divergences[0].trajectory_index == 0);
    CHECK(rec.divergences[39].trajectory_index == 39);
    CHECK(rec.divergences[0].magnitude > 1e10);
    for (const auto& s : rec.final_ensemble.states) {
        CHECK(std::isfinite(std::abs(s.alpha[0])));
        CHECK(std::abs(s.alpha[0]) <= 1e10);
    }
    const auto n = moment(rec, 1, 1);
    CHECK(n.back().alive == 0);
    CHECK_FALSE(n.back().valid);
    CHECK(n.back().diverged == 40);

    opts.abort_fraction = 0.5;
    CHECK_THROWS_AS(run_ensemble(ens, sys, steps(0.01, 3.0, 50), opts), DivergenceAbort);

    CHECK(find_divergence(1.0, std::vector<cplx>{1.0, 2.0}, 1, 1e10) == std::nullopt);
    const auto hit = find_divergence(1.0, std::vector<cplx>{1.0, cplx{NAN, 0}}, 1, 1e10);
    REQUIRE(hit);
    CHECK(hit->first == "beta[0]");
    CHECK(find_divergence(cplx{2e10, 0}, std::vector<cplx>{1.0, 1.0}, 1, 1e10)->first == "omega");
}

TEST_CASE("run validation") {
    const GaugedSystem sys = positive_p(absorber_model({}));
    const Ensemble two = init_gaussian(0.1, 40, 1, 20, 2);
    CHECK_THROWS_AS(run_ensemble(two, sys, steps(0.01, 0.1, 1)), ConfigError);
    RunOptions opts;
    opts.moments = {};
    CHECK_THROWS_AS(run_ensemble(init_coherent(1.0, 40, 1), sys, steps(0.01, 0.1, 1), opts), ConfigError);
    opts.moments = {{1, 1, 1}};
    CHECK_THROWS_AS(run_ensemble(init_coherent(1.0, 40, 1), sys, steps(0.01, 0.1, 1), opts), ConfigError);
}
