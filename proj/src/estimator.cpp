#include "gaugep/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace gaugep {

namespace {

cplx ipow(cplx x, int p) {
    cplx r{1.0, 0.0};
    for (int i = 0; i < p; ++i) r *= x;
    return r;
}

// Batch-means standard error of a scalar with per-batch values `v`.
double batch_se(const std::vector<double>& v) {
    const auto nb = static_cast<double>(v.size());
    if (v.size() < 2) return std::numeric_limits<double>::infinity();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= nb;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (nb * (nb - 1.0)));
}

}  // namespace

std::string MomentSpec::label() const {
    std::string s = "n" + std::to_string(n) + "m" + std::to_string(m);
    if (mode != 0) s += "_mode" + std::to_string(mode);
    return s;
}

void PartialSums::add(cplx omega, std::span<const cplx> alpha, std::span<const cplx> beta,
                      std::span<const MomentSpec> moments) {
    ++alive;
    den += 2.0 * omega.real();
    for (std::size_t k = 0; k < moments.size(); ++k) {
        const MomentSpec& ms = moments[k];
        const cplx a = alpha[static_cast<std::size_t>(ms.mode)];
        const cplx b = beta[static_cast<std::size_t>(ms.mode)];
        num[k] += ipow(b, ms.n) * ipow(a, ms.m) * omega +
                  std::conj(ipow(a, ms.n) * ipow(b, ms.m) * omega);
    }
    const double re = omega.real();
    const double im = omega.imag();
    sum_abs += std::abs(omega);
    sum_re += re;
    sum_im += im;
    sum_re2 += re * re;
    sum_im2 += im * im;
    min_re = std::min(min_re, re);
    max_re = std::max(max_re, re);
    if (re < 0.0) ++negative;
}

void PartialSums::merge(const PartialSums& o) {
    alive += o.alive;
    den += o.den;
    if (num.size() < o.num.size()) num.resize(o.num.size());
    for (std::size_t k = 0; k < o.num.size(); ++k) num[k] += o.num[k];
    sum_abs += o.sum_abs;
    sum_re += o.sum_re;
    sum_im += o.sum_im;
    sum_re2 += o.sum_re2;
    sum_im2 += o.sum_im2;
    min_re = std::min(min_re, o.min_re);
    max_re = std::max(max_re, o.max_re);
    negative += o.negative;
}

PartialSums RecordSums::total() const {
    PartialSums t(batches.empty() ? 0 : batches.front().num.size());
    for (const auto& b : batches) t.merge(b);
    return t;
}

PartialSums accumulate_batch(std::span<const TrajectoryState> states,
                             std::span<const std::uint8_t> alive,
                             std::span<const MomentSpec> moments) {
    PartialSums batch(moments.size());
    for (std::size_t begin = 0; begin < states.size(); begin += kChunkSize) {
        const std::size_t end = std::min(states.size(), begin + kChunkSize);
        PartialSums chunk(moments.size());
        for (std::size_t i = begin; i < end; ++i) {
            if (!alive.empty() && !alive[i]) continue;
            chunk.add(states[i].omega, states[i].alpha, states[i].beta, moments);
        }
        batch.merge(chunk);
    }
    return batch;
}

MomentEstimate estimate_moment(const RecordSums& sums, std::size_t k, double denom_floor) {
    MomentEstimate est;
    est.n_batches = static_cast<int>(sums.batches.size());
    est.diverged = sums.diverged;
    const PartialSums total = sums.total();
    est.alive = total.alive;
    if (total.alive == 0 || k >= total.num.size()) {
        est.valid = false;
        est.std_err = est.std_err_re = est.std_err_im = std::numeric_limits<double>::infinity();
        return est;
    }
    const auto alive = static_cast<double>(total.alive);
    est.numerator_mean = total.num[k] / alive;
    est.denominator_mean = total.den / alive;
    est.valid = std::abs(est.denominator_mean) >= denom_floor;
    est.value = total.num[k] / total.den;

    std::vector<double> re, im;
    bool batches_ok = true;
    for (const auto& b : sums.batches) {
        if (b.alive == 0 || std::abs(b.den / static_cast<double>(b.alive)) < denom_floor) {
            batches_ok = false;
            break;
        }
        const cplx r = b.num[k] / b.den;
        re.push_back(r.real());
        im.push_back(r.imag());
    }
    if (!batches_ok || re.size() < 2) {
        est.std_err = est.std_err_re = est.std_err_im = std::numeric_limits<double>::infinity();
        return est;
    }
    est.std_err_re = batch_se(re);
    est.std_err_im = batch_se(im);
    est.std_err = std::hypot(est.std_err_re, est.std_err_im);
    return est;
}

WeightDiagnostics weight_diagnostics(const RecordSums& sums) {
    WeightDiagnostics d;
    const PartialSums t = sums.total();
    d.alive = t.alive;
    if (t.alive == 0) return d;
    const auto n = static_cast<double>(t.alive);
    d.mean_re = t.sum_re / n;
    d.mean_im = t.sum_im / n;
    d.mean_sq_re = t.sum_re2 / n;
    d.mean_sq_im = t.sum_im2 / n;
    d.var_re = std::max(0.0, d.mean_sq_re - d.mean_re * d.mean_re);
    d.var_im = std::max(0.0, d.mean_sq_im - d.mean_im * d.mean_im);
    d.min_re = t.min_re;
    d.max_re = t.max_re;
    d.frac_negative = static_cast<double>(t.negative) / n;

    std::vector<double> re, im, re2, im2;
    for (const auto& b : sums.batches) {
        if (b.alive == 0) continue;
        const auto nb = static_cast<double>(b.alive);
        re.push_back(b.sum_re / nb);
        im.push_back(b.sum_im / nb);
        re2.push_back(b.sum_re2 / nb);
        im2.push_back(b.sum_im2 / nb);
    }
    d.se_mean_re = batch_se(re);
    d.se_mean_im = batch_se(im);
    d.se_mean_sq_re = batch_se(re2);
    d.se_mean_sq_im = batch_se(im2);
    return d;
}

ComparisonReport compare_series(const Series& a, const Series& b, double z_threshold) {
    if (a.empty() || b.empty()) throw ConfigError("cannot compare empty series");
    ComparisonReport rep;
    rep.threshold = z_threshold;

    const double b_lo = b.front().time;
    const double b_hi = b.back().time;
    const double slack = 1e-9 * std::max({1.0, std::abs(b_lo), std::abs(b_hi)});

    for (const SeriesPoint& p : a) {
        if (p.time < b_lo - slack || p.time > b_hi + slack) continue;
        auto it = std::lower_bound(b.begin(), b.end(), p.time - slack,
                                   [](const SeriesPoint& q, double t) { return q.time < t; });
        SeriesPoint q;
        if (it == b.end()) it = std::prev(b.end());
        if (std::abs(it->time - p.time) <= slack || it == b.begin()) {
            q = *it;
        } else {
            const SeriesPoint& hi = *it;
            const SeriesPoint& lo = *std::prev(it);
            const double w = (p.time - lo.time) / (hi.time - lo.time);
            q.time = p.time;
            q.value = (1.0 - w) * lo.value + w * hi.value;
            q.std_err = (1.0 - w) * lo.std_err + w * hi.std_err;
            q.valid = lo.valid && hi.valid;
        }

        double z;
        const double diff = std::abs(p.value - q.value);
        const double sigma = std::hypot(p.std_err, q.std_err);
        // Two exact values (sigma = 0) agree when they differ only by rounding.
        const double rounding = 1e-12 * (1.0 + std::abs(p.value) + std::abs(q.value));
        if (!p.valid || !q.valid || !std::isfinite(sigma) || !std::isfinite(diff)) {
            z = std::numeric_limits<double>::infinity();
        } else if (sigma > 0.0) {
            z = diff / sigma;
        } else {
            z = diff <= rounding ? 0.0 : std::numeric_limits<double>::infinity();
        }
        rep.times.push_back(p.time);
        rep.z.push_back(z);
        if (z > rep.max_z || rep.z.size() == 1) {
            rep.max_z = z;
            rep.max_z_time = p.time;
        }
    }
    if (rep.times.empty()) throw ConfigError("compared series have disjoint time ranges");
    rep.pass = rep.max_z <= z_threshold;
    return rep;
}

}  // namespace gaugep
