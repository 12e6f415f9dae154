#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gaugep/ensemble.hpp"
#include "gaugep/types.hpp"

namespace gaugep {

/// Normally ordered moment <a^dag^n a^m> of one mode.
struct MomentSpec {
    int n = 1;
    int m = 1;
    int mode = 0;

    std::string label() const;
    friend bool operator==(const MomentSpec&, const MomentSpec&) = default;
};

/// Per-batch running sums over surviving trajectories.
struct PartialSums {
    long alive = 0;
    double den = 0.0;         // sum of Omega + Omega*
    std::vector<cplx> num;    // per moment: beta^n alpha^m Omega + (alpha^n beta^m Omega)*
    double sum_abs = 0.0;     // |Omega|
    double sum_re = 0.0;
    double sum_im = 0.0;
    double sum_re2 = 0.0;
    double sum_im2 = 0.0;
    double min_re = std::numeric_limits<double>::infinity();
    double max_re = -std::numeric_limits<double>::infinity();
    long negative = 0;

    explicit PartialSums(std::size_t moments = 0) : num(moments) {}
    void add(cplx omega, std::span<const cplx> alpha, std::span<const cplx> beta,
             std::span<const MomentSpec> moments);
    void merge(const PartialSums& other);
};

/// Sums for one record time, one entry per batch.
struct RecordSums {
    std::vector<PartialSums> batches;
    long diverged = 0;

    PartialSums total() const;
};

/// Trajectories per accumulation chunk. Chunk boundaries depend only on the batch
/// layout, so partial sums combine in the same order for any worker count.
inline constexpr int kChunkSize = 256;

/// Sum states [begin, end) of one batch chunk-by-chunk, matching the reduction order
/// used by run_ensemble.
PartialSums accumulate_batch(std::span<const TrajectoryState> states,
                             std::span<const std::uint8_t> alive,
                             std::span<const MomentSpec> moments);

struct MomentEstimate {
    cplx value{};
    double std_err = 0.0;     // from batch ratios, |complex| deviations
    double std_err_re = 0.0;
    double std_err_im = 0.0;
    cplx numerator_mean{};
    double denominator_mean = 0.0;
    int n_batches = 0;
    long alive = 0;
    long diverged = 0;
    bool valid = true;        // false when |<Omega + Omega*>| fell below the floor
};

struct WeightDiagnostics {
    double mean_re = 0.0;
    double mean_im = 0.0;
    double mean_sq_re = 0.0;  // <(Re Omega)^2>
    double mean_sq_im = 0.0;  // <(Im Omega)^2>
    double var_re = 0.0;
    double var_im = 0.0;
    double min_re = 0.0;
    double max_re = 0.0;
    double frac_negative = 0.0;
    // Batch-means standard errors.
    double se_mean_re = 0.0;
    double se_mean_im = 0.0;
    double se_mean_sq_re = 0.0;
    double se_mean_sq_im = 0.0;
    long alive = 0;
};

/// Relative floor on |<Omega + Omega*>|: the estimate is flagged invalid below
/// kDenomFloorFactor * 2 <|Omega(0)|>.
inline constexpr double kDenomFloorFactor = 1e-6;

/// Ratio estimate for moment index `k` of the accumulated moments. `denom_floor` is
/// an absolute floor on the per-trajectory mean denominator.
MomentEstimate estimate_moment(const RecordSums& sums, std::size_t k, double denom_floor);

WeightDiagnostics weight_diagnostics(const RecordSums& sums);

/// z-score comparison of two time series.
struct SeriesPoint {
    double time = 0.0;
    cplx value{};
    double std_err = 0.0;
    bool valid = true;
};
using Series = std::vector<SeriesPoint>;

struct ComparisonReport {
    std::vector<double> times;
    std::vector<double> z;
    double max_z = 0.0;
    double max_z_time = 0.0;
    double threshold = 3.0;
    bool pass = true;
};

/// Per-time z = |a - b| / sqrt(sa^2 + sb^2), evaluated on a's grid; b is linearly
/// interpolated where grids differ. Throws ConfigError for disjoint ranges.
ComparisonReport compare_series(const Series& a, const Series& b, double z_threshold);

}  // namespace gaugep
