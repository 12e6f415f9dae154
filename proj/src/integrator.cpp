#include "gaugep/integrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "gaugep/rng.hpp"

namespace gaugep {

namespace {

struct Interval {
    double t0;
    double dt;
    int steps;
};

// Record intervals covering [0, t_end]. Record r sits at the end of interval r - 1.
std::vector<Interval> plan_intervals(const StepConfig& cfg) {
    std::vector<Interval> out;
    if (cfg.t_end == 0.0) return out;
    if (!cfg.ramp) {
        const auto total = static_cast<long>(std::llround(cfg.t_end / cfg.dt));
        for (long k = 0; k < total; k += cfg.record_stride) {
            const long steps = std::min<long>(cfg.record_stride, total - k);
            out.push_back({static_cast<double>(k) * cfg.dt, cfg.dt, static_cast<int>(steps)});
        }
        return out;
    }
    const RampSchedule& r = *cfg.ramp;
    const double cap = r.dt_max > 0.0 ? r.dt_max : std::numeric_limits<double>::infinity();
    double t = 0.0;
    double dt = cfg.dt;
    const double tol = 1e-12 * cfg.t_end;
    while (t < cfg.t_end - tol) {
        double step = std::min(dt, cap);
        const double span = step * cfg.record_stride;
        if (t + span > cfg.t_end - tol) step = (cfg.t_end - t) / cfg.record_stride;
        out.push_back({t, step, cfg.record_stride});
        t += step * cfg.record_stride;
        dt *= r.factor;
    }
    return out;
}

void pack(const TrajectoryState& s, std::span<cplx> z) {
    const auto m = s.alpha.size();
    std::copy(s.alpha.begin(), s.alpha.end(), z.begin());
    std::copy(s.beta.begin(), s.beta.end(), z.begin() + static_cast<long>(m));
}

void unpack(std::span<const cplx> z, TrajectoryState& s) {
    const auto m = s.alpha.size();
    std::copy(z.begin(), z.begin() + static_cast<long>(m), s.alpha.begin());
    std::copy(z.begin() + static_cast<long>(m), z.end(), s.beta.begin());
}

}  // namespace

std::string to_string(Scheme s) {
    return s == Scheme::ito_euler ? "ito_euler" : "strat_semi_implicit";
}

Scheme parse_scheme(const std::string& s) {
    if (s == "ito_euler" || s == "ito") return Scheme::ito_euler;
    if (s == "strat_semi_implicit" || s == "stratonovich" || s == "strat")
        return Scheme::strat_semi_implicit;
    throw ConfigError("unknown scheme '" + s + "' (expected ito_euler or strat_semi_implicit)");
}

void validate_step_config(const StepConfig& cfg) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("dt must be > 0");
    if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end)) throw ConfigError("t_end must be >= 0");
    if (cfg.t_end > 0.0 && cfg.dt > cfg.t_end * (1.0 + 1e-12))
        throw ConfigError("dt must not exceed t_end");
    if (cfg.midpoint_iters < 1) throw ConfigError("midpoint_iters must be >= 1");
    if (cfg.record_stride < 1) throw ConfigError("record_stride must be >= 1");
    if (cfg.ramp) {
        if (!(cfg.ramp->factor >= 1.0)) throw ConfigError("ramp factor must be >= 1");
        if (cfg.ramp->dt_max < 0.0) throw ConfigError("ramp dt_max must be >= 0");
    } else if (cfg.t_end > 0.0) {
        const double steps = cfg.t_end / cfg.dt;
        if (std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, steps))
            throw ConfigError("t_end must be an integer multiple of dt");
    }
}

std::vector<double> record_times(const StepConfig& cfg) {
    validate_step_config(cfg);
    std::vector<double> out{0.0};
    const auto intervals = plan_intervals(cfg);
    for (const Interval& iv : intervals) out.push_back(iv.t0 + iv.dt * iv.steps);
    if (!intervals.empty()) out.back() = cfg.t_end;
    return out;
}

std::optional<std::pair<std::string, double>> find_divergence(cplx omega, std::span<const cplx> z,
                                                              int modes, double guard) {
    auto bad = [guard](cplx v) {
        return !std::isfinite(v.real()) || !std::isfinite(v.imag()) || std::abs(v) > guard;
    };
    if (bad(omega)) return std::make_pair(std::string("omega"), std::abs(omega));
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (!bad(z[j])) continue;
        const auto mode = static_cast<int>(j) % modes;
        const std::string name =
            (static_cast<int>(j) < modes ? "alpha[" : "beta[") + std::to_string(mode) + "]";
        return std::make_pair(name, std::abs(z[j]));
    }
    return std::nullopt;
}

// ---- stepping ----------------------------------------------------------------

Stepper::Stepper(const GaugedSystem& sys, Scheme scheme, int midpoint_iters)
    : sys_(&sys),
      scheme_(scheme),
      iters_(midpoint_iters),
      ws_(sys),
      zbar_(static_cast<std::size_t>(sys.dim())),
      inc_(static_cast<std::size_t>(sys.dim())) {
    if (midpoint_iters < 1) throw ConfigError("midpoint_iters must be >= 1");
    if (scheme == Scheme::strat_semi_implicit && !sys.supports_stratonovich()) {
        throw ConfigError("gauge '" + sys.gauge_id() +
                          "' supports only the Ito scheme (no Stratonovich weight correction)");
    }
}

void Stepper::increments(cplx omega, std::span<const cplx> z, double t, double dt,
                         std::span<const double> dw, Calculus calc, cplx& d_omega) {
    evaluate(*sys_, calc, omega, z, t, ws_);
    const int n = sys_->dim();
    const int w = sys_->noises();
    for (int j = 0; j < n; ++j) {
        cplx v = ws_.drift[j] * dt;
        const cplx* row = ws_.noise.data() + static_cast<std::ptrdiff_t>(j) * w;
        for (int k = 0; k < w; ++k) v += row[k] * dw[k];
        inc_[j] = v;
    }
    cplx rate = ws_.weight_rate * dt;
    if (sys_->drift_gauge) {
        for (int k = 0; k < w; ++k) rate += ws_.g[k] * dw[k];
    }
    d_omega = omega * rate;
}

void Stepper::step(cplx& omega, std::span<cplx> z, double t, double dt, std::span<const double> dw) {
    const auto n = z.size();
    cplx d_omega;
    if (scheme_ == Scheme::ito_euler) {
        increments(omega, z, t, dt, dw, Calculus::ito, d_omega);
        for (std::size_t j = 0; j < n; ++j) z[j] += inc_[j];
        omega += d_omega;
        return;
    }
    const double tm = t + 0.5 * dt;
    std::copy(z.begin(), z.end(), zbar_.begin());
    cplx obar = omega;
    for (int it = 0; it < iters_; ++it) {
        increments(obar, zbar_, tm, dt, dw, Calculus::stratonovich, d_omega);
        for (std::size_t j = 0; j < n; ++j) zbar_[j] = z[j] + 0.5 * inc_[j];
        obar = omega + 0.5 * d_omega;
    }
    increments(obar, zbar_, tm, dt, dw, Calculus::stratonovich, d_omega);
    for (std::size_t j = 0; j < n; ++j) z[j] += inc_[j];
    omega += d_omega;
}

TrajectoryState step_ito(const TrajectoryState& s, const GaugedSystem& sys,
                         std::span<const double> dw, double dt) {
    if (static_cast<int>(dw.size()) != sys.noises()) throw ConfigError("noise length mismatch");
    Stepper stepper(sys, Scheme::ito_euler);
    TrajectoryState out = s;
    std::vector<cplx> z(static_cast<std::size_t>(sys.dim()));
    pack(s, z);
    stepper.step(out.omega, z, s.time, dt, dw);
    unpack(z, out);
    out.time = s.time + dt;
    return out;
}

TrajectoryState step_strat(const TrajectoryState& s, const GaugedSystem& sys,
                           std::span<const double> dw, double dt, int midpoint_iters) {
    if (static_cast<int>(dw.size()) != sys.noises()) throw ConfigError("noise length mismatch");
    Stepper stepper(sys, Scheme::strat_semi_implicit, midpoint_iters);
    TrajectoryState out = s;
    std::vector<cplx> z(static_cast<std::size_t>(sys.dim()));
    pack(s, z);
    stepper.step(out.omega, z, s.time, dt, dw);
    unpack(z, out);
    out.time = s.time + dt;
    return out;
}

// ---- ensemble runs -------------------------------------------------------------

long TrajectoryRecordSet::diverged() const {
    return static_cast<long>(std::count(alive.begin(), alive.end(), std::uint8_t{0}));
}

TrajectoryRecordSet run_ensemble(const Ensemble& ens, const GaugedSystem& sys,
                                 const StepConfig& cfg, const RunOptions& opts) {
    validate_ensemble(ens);
    validate_step_config(cfg);
    if (ens.modes() != sys.model.modes) {
        throw ConfigError("ensemble has " + std::to_string(ens.modes()) + " modes but model '" +
                          sys.model.id + "' has " + std::to_string(sys.model.modes));
    }
    if (opts.moments.empty()) throw ConfigError("no moments requested");
    for (const MomentSpec& ms : opts.moments) {
        if (ms.n < 0 || ms.m < 0) throw ConfigError("moment orders must be >= 0");
        if (ms.mode < 0 || ms.mode >= sys.model.modes) throw ConfigError("moment mode out of range");
    }
    // Fails early for gauges without a Stratonovich correction.
    Stepper probe(sys, cfg.scheme, cfg.midpoint_iters);

    const std::vector<Interval> intervals = plan_intervals(cfg);
    const std::size_t n_records = intervals.size() + 1;
    const long n_traj = ens.size();
    const int batches = ens.batch_count;
    const long per_batch = n_traj / batches;
    const long chunks_per_batch = (per_batch + kChunkSize - 1) / kChunkSize;
    const long n_items = batches * chunks_per_batch;
    const int dim = sys.dim();
    const int w = sys.noises();
    const int modes = sys.model.modes;
    const std::size_t n_mom = opts.moments.size();

    struct ItemResult {
        std::vector<PartialSums> sums;     // per record
        std::vector<long> dead;            // per record
        std::vector<DivergenceReport> divergences;
    };
    std::vector<ItemResult> results(static_cast<std::size_t>(n_items));

    TrajectoryRecordSet rec;
    rec.moments = opts.moments;
    rec.n_traj = n_traj;
    rec.batch_count = batches;
    rec.final_ensemble = ens;
    rec.alive.assign(static_cast<std::size_t>(n_traj), 1);
    if (opts.keep_snapshots) {
        rec.snapshots.assign(n_records, ens.states);
    }
    rec.times = record_times(cfg);

    const double abort_limit = opts.abort_fraction * static_cast<double>(n_traj);
    std::atomic<long> diverged_total{0};
    std::atomic<bool> abort{false};
    std::atomic<long> next_item{0};

    auto work = [&]() {
        Stepper stepper(sys, cfg.scheme, cfg.midpoint_iters);
        std::vector<cplx> z(static_cast<std::size_t>(dim));
        std::vector<cplx> zprev(static_cast<std::size_t>(dim));
        std::vector<double> dw(static_cast<std::size_t>(w));
        while (!abort.load(std::memory_order_relaxed)) {
            const long item = next_item.fetch_add(1);
            if (item >= n_items) break;
            const long b = item / chunks_per_batch;
            const long c = item % chunks_per_batch;
            const long begin = b * per_batch + c * kChunkSize;
            const long end = std::min(begin + kChunkSize, (b + 1) * per_batch);
            ItemResult& res = results[static_cast<std::size_t>(item)];
            res.sums.assign(n_records, PartialSums(n_mom));
            res.dead.assign(n_records, 0);

            for (long i = begin; i < end; ++i) {
                TrajectoryState& s = rec.final_ensemble.states[static_cast<std::size_t>(i)];
                pack(s, z);
                cplx omega = s.omega;
                bool alive = true;
                NoiseStream stream(ens.master_seed, static_cast<std::uint64_t>(i));
                std::uint32_t step = 0;
                double t = 0.0;

                auto record = [&](std::size_t r) {
                    if (alive) {
                        res.sums[r].add(omega, std::span<const cplx>(z.data(), modes),
                                        std::span<const cplx>(z.data() + modes, modes), opts.moments);
                    } else {
                        ++res.dead[r];
                    }
                    if (opts.keep_snapshots) {
                        TrajectoryState& snap = rec.snapshots[r][static_cast<std::size_t>(i)];
                        snap.omega = omega;
                        unpack(z, snap);
                        snap.time = rec.times[r];
                    }
                };
                record(0);

                for (std::size_t iv = 0; iv < intervals.size(); ++iv) {
                    const Interval& in = intervals[iv];
                    if (alive) {
                        const double sq = std::sqrt(in.dt);
                        for (int k = 0; k < in.steps; ++k) {
                            stream.set_step(step);
                            stream.fill_standard_normal(dw);
                            for (double& x : dw) x *= sq;
                            t = in.t0 + in.dt * k;
                            const cplx prev_omega = omega;
                            std::copy(z.begin(), z.end(), zprev.begin());
                            stepper.step(omega, z, t, in.dt, dw);
                            ++step;
                            auto bad = find_divergence(omega, z, modes, opts.overflow_guard);
                            if (bad) {
                                // Freeze at the last finite state.
                                omega = prev_omega;
                                std::copy(zprev.begin(), zprev.end(), z.begin());
                                alive = false;
                                res.divergences.push_back({i, static_cast<long>(step - 1),
                                                           bad->first, bad->second});
                                if (static_cast<double>(diverged_total.fetch_add(1) + 1) >
                                    abort_limit) {
                                    abort.store(true);
                                }
                                break;
                            }
                        }
                    } else {
                        step += static_cast<std::uint32_t>(in.steps);
                    }
                    record(iv + 1);
                    if (abort.load(std::memory_order_relaxed)) break;
                }
                s.omega = omega;
                unpack(z, s);
                s.time = rec.times.back();
                if (!alive) rec.alive[static_cast<std::size_t>(i)] = 0;
                if (abort.load(std::memory_order_relaxed)) break;
            }
        }
    };

    const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(n_items)));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int k = 0; k < workers; ++k) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    if (abort.load()) {
        throw DivergenceAbort("more than " + std::to_string(opts.abort_fraction * 100.0) +
                              "% of " + std::to_string(n_traj) +
                              " trajectories diverged (guard " +
                              std::to_string(opts.overflow_guard) + "); run aborted");
    }

    rec.sums.assign(n_records, RecordSums{});
    for (std::size_t r = 0; r < n_records; ++r) {
        RecordSums& rs = rec.sums[r];
        rs.batches.assign(static_cast<std::size_t>(batches), PartialSums(n_mom));
        for (long item = 0; item < n_items; ++item) {
            const ItemResult& res = results[static_cast<std::size_t>(item)];
            rs.batches[static_cast<std::size_t>(item / chunks_per_batch)].merge(res.sums[r]);
            rs.diverged += res.dead[r];
        }
    }
    for (const ItemResult& res : results) {
        rec.divergences.insert(rec.divergences.end(), res.divergences.begin(), res.divergences.end());
    }

    const PartialSums t0 = rec.sums.front().total();
    const double mean_abs = t0.alive > 0 ? t0.sum_abs / static_cast<double>(t0.alive) : 1.0;
    rec.denom_floor = kDenomFloorFactor * 2.0 * mean_abs;
    return rec;
}

std::vector<MomentEstimate> moment(const TrajectoryRecordSet& rec, int n, int m, int mode) {
    const MomentSpec want{n, m, mode};
    const auto it = std::find(rec.moments.begin(), rec.moments.end(), want);
    if (it == rec.moments.end()) {
        throw ConfigError("moment " + want.label() + " was not accumulated during the run");
    }
    const auto k = static_cast<std::size_t>(it - rec.moments.begin());
    std::vector<MomentEstimate> out;
    out.reserve(rec.sums.size());
    for (const RecordSums& rs : rec.sums) out.push_back(estimate_moment(rs, k, rec.denom_floor));
    return out;
}

std::vector<WeightDiagnostics> weight_series(const TrajectoryRecordSet& rec) {
    std::vector<WeightDiagnostics> out;
    out.reserve(rec.sums.size());
    for (const RecordSums& rs : rec.sums) out.push_back(weight_diagnostics(rs));
    return out;
}

}  // namespace gaugep
