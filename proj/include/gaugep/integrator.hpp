#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaugep/ensemble.hpp"
#include "gaugep/estimator.hpp"
#include "gaugep/gauges.hpp"

namespace gaugep {

enum class Scheme { ito_euler, strat_semi_implicit };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

/// Geometric step ramp: the step used during record interval r is
/// min(dt * factor^r, dt_max).
struct RampSchedule {
    double factor = 1.0;
    double dt_max = 0.0;
};

struct StepConfig {
    double dt = 0.01;  // native model time
    Scheme scheme = Scheme::strat_semi_implicit;
    int midpoint_iters = 3;
    double t_end = 0.0;
    int record_stride = 1;
    std::optional<RampSchedule> ramp;
};

void validate_step_config(const StepConfig& cfg);

/// Record times (native) that run_ensemble will produce for cfg, starting at 0.
std::vector<double> record_times(const StepConfig& cfg);

inline constexpr double kOverflowGuard = 1e10;

struct DivergenceReport {
    long trajectory_index = 0;
    long step = 0;
    std::string variable;  // "omega", "alpha[j]" or "beta[j]"
    double magnitude = 0.0;
};

/// First component of (omega, z) that is non-finite or larger than `guard` in
/// modulus, as a variable name and magnitude.
std::optional<std::pair<std::string, double>> find_divergence(cplx omega, std::span<const cplx> z,
                                                              int modes, double guard);

/// One Euler-Maruyama step of the Ito system. `dw` holds W increments with
/// variance dt.
TrajectoryState step_ito(const TrajectoryState& s, const GaugedSystem& sys,
                         std::span<const double> dw, double dt);

/// One semi-implicit midpoint step of the Stratonovich system.
TrajectoryState step_strat(const TrajectoryState& s, const GaugedSystem& sys,
                           std::span<const double> dw, double dt, int midpoint_iters = 3);

/// Reusable single-trajectory stepper over packed z = [alpha, beta].
class Stepper {
public:
    Stepper(const GaugedSystem& sys, Scheme scheme, int midpoint_iters = 3);

    /// Advance (omega, z) from time t by dt using increments dw.
    void step(cplx& omega, std::span<cplx> z, double t, double dt, std::span<const double> dw);

    const GaugedSystem& system() const { return *sys_; }

private:
    void increments(cplx omega, std::span<const cplx> z, double t, double dt,
                    std::span<const double> dw, Calculus calc, cplx& d_omega);

    const GaugedSystem* sys_;
    Scheme scheme_;
    int iters_;
    Workspace ws_;
    std::vector<cplx> zbar_;
    std::vector<cplx> inc_;
};

struct RunOptions {
    int workers = 1;
    double abort_fraction = 0.5;
    double overflow_guard = kOverflowGuard;
    std::vector<MomentSpec> moments{MomentSpec{1, 1, 0}};
    bool keep_snapshots = false;
};

struct TrajectoryRecordSet {
    std::vector<double> times;  // native time of each record
    std::vector<MomentSpec> moments;
    std::vector<RecordSums> sums;  // one per record
    std::vector<std::vector<TrajectoryState>> snapshots;  // only with keep_snapshots
    Ensemble final_ensemble;
    std::vector<std::uint8_t> alive;  // per trajectory at the end of the run
    std::vector<DivergenceReport> divergences;  // in trajectory order
    long n_traj = 0;
    int batch_count = 0;
    double denom_floor = 0.0;

    long diverged() const;
};

/// Advance every trajectory to cfg.t_end. Work is split into (batch, chunk)
/// items; partial sums are merged in item order, so results are bit-identical
/// for any worker count. Throws DivergenceAbort when more than
/// abort_fraction * n_traj trajectories diverge.
TrajectoryRecordSet run_ensemble(const Ensemble& ens, const GaugedSystem& sys,
                                 const StepConfig& cfg, const RunOptions& opts = {});

/// Moment estimates, one per record. The moment must have been requested in
/// RunOptions::moments.
std::vector<MomentEstimate> moment(const TrajectoryRecordSet& rec, int n, int m, int mode = 0);

std::vector<WeightDiagnostics> weight_series(const TrajectoryRecordSet& rec);

}  // namespace gaugep
