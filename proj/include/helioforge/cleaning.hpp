#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "helioforge/time_series.hpp"

namespace helioforge {

// Raw-data cleaning: neighbor-based outlier detection, production/irradiance
// cross-matching, short-gap filling, and resampling onto the common 15-minute
// grid. All operations are pure: they return a modified copy.

/// Flag samples that deviate from the mean of their neighbors. For each
/// sample, up to `window` usable neighbors on each side (the sample itself
/// excluded, non-usable neighbors skipped) form the reference mean; the
/// sample is an outlier when |x - mean| > threshold * max(1, |mean|).
/// Decisions are made against the input flags, so the result does not depend
/// on scan order. Values are never changed, only flags.
inline TimeSeries detect_outliers_neighbor(const TimeSeries& series, int window,
                                           double threshold) {
    series.validate();
    if (series.empty()) throw std::invalid_argument("empty input");
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (series.size() < 2 * static_cast<std::size_t>(window) + 1)
        throw std::invalid_argument("window exceeds series");
    if (threshold <= 0) throw std::invalid_argument("threshold must be positive");

    TimeSeries out = series;
    const std::int64_t n = static_cast<std::int64_t>(series.size());
    for (std::int64_t i = 0; i < n; ++i) {
        if (!series.usable(static_cast<std::size_t>(i))) continue;
        double sum = 0.0;
        int count = 0;
        for (int side = 0; side < 2; ++side) {
            const std::int64_t dir = side == 0 ? -1 : 1;
            int taken = 0;
            for (std::int64_t j = i + dir; j >= 0 && j < n && taken < window; j += dir) {
                if (!series.usable(static_cast<std::size_t>(j))) continue;
                sum += series.values[static_cast<std::size_t>(j)];
                ++count;
                ++taken;
            }
        }
        if (count == 0) continue;
        const double mean = sum / count;
        if (std::abs(series.values[static_cast<std::size_t>(i)] - mean) >
            threshold * std::max(1.0, std::abs(mean)))
            out.flags[static_cast<std::size_t>(i)] = Flag::Outlier;
    }
    return out;
}

/// Flag production samples that contradict the irradiance measurement:
/// high production with (near-)zero irradiance, or near-zero production with
/// high irradiance. Returns a copy of `gp` with the offending samples flagged.
inline TimeSeries cross_match_outliers(const TimeSeries& gp, const TimeSeries& sr, double gp_high,
                                       double sr_low, double gp_low, double sr_high) {
    gp.validate();
    sr.validate();
    if (!gp.same_grid(sr)) throw std::invalid_argument("unaligned series");
    TimeSeries out = gp;
    for (std::size_t i = 0; i < gp.size(); ++i) {
        if (!gp.usable(i) || !sr.usable(i)) continue;
        const double g = gp.values[i];
        const double s = sr.values[i];
        if ((g >= gp_high && s <= sr_low) || (g <= gp_low && s >= sr_high))
            out.flags[i] = Flag::Outlier;
    }
    return out;
}

/// Defaults for the cross-match thresholds, expressed from the production
/// series peak: high production = 20% of peak, low = 2% of peak; irradiance
/// "zero" = 5 W/m2, "high" = 200 W/m2.
struct CrossMatchThresholds {
    double gp_high;
    double sr_low;
    double gp_low;
    double sr_high;

    static CrossMatchThresholds from_peak(double gp_peak) {
        return {0.2 * gp_peak, 5.0, 0.02 * gp_peak, 200.0};
    }
};

/// Replace each maximal run of missing/outlier samples of length <= max_gap
/// with the mean of the nearest usable sample on each side; replacements are
/// flagged interpolated. Longer runs and runs touching either series boundary
/// are left untouched (no one-sided extrapolation).
inline TimeSeries fill_gaps(const TimeSeries& series, int max_gap) {
    series.validate();
    if (max_gap < 1) throw std::invalid_argument("max_gap must be >= 1");
    TimeSeries out = series;
    const std::size_t n = series.size();
    std::size_t i = 0;
    while (i < n) {
        if (out.usable(i)) {
            ++i;
            continue;
        }
        std::size_t run_end = i;
        while (run_end < n && !out.usable(run_end)) ++run_end;
        const bool interior = i > 0 && run_end < n;
        const std::size_t run_len = run_end - i;
        if (interior && run_len <= static_cast<std::size_t>(max_gap)) {
            const double fill = 0.5 * (out.values[i - 1] + out.values[run_end]);
            for (std::size_t j = i; j < run_end; ++j) {
                out.values[j] = fill;
                out.flags[j] = Flag::Interpolated;
            }
        }
        i = run_end;
    }
    return out;
}

/// Resample onto a new grid. Downsampling (target_step > step) averages the
/// usable samples falling in each target window [m*target, (m+1)*target);
/// a window with no usable samples is missing. Upsampling (target_step <
/// step, integer ratio) repeats each sample (zero-order hold), propagating
/// flags. target_step == step returns a copy.
inline TimeSeries resample(const TimeSeries& series, std::int64_t target_step) {
    series.validate();
    if (target_step <= 0) throw std::invalid_argument("target step must be positive");
    if (series.empty()) throw std::invalid_argument("empty input");
    if (target_step == series.step) return series;

    TimeSeries out;
    out.start_time = series.start_time;
    out.step = target_step;

    if (target_step > series.step) {
        const std::int64_t span = static_cast<std::int64_t>(series.size()) * series.step;
        const std::int64_t n_out = span / target_step;  // full windows only
        out.values.reserve(static_cast<std::size_t>(n_out));
        std::size_t i = 0;
        for (std::int64_t m = 0; m < n_out; ++m) {
            const std::int64_t window_end = (m + 1) * target_step;
            double sum = 0.0;
            int count = 0;
            for (; i < series.size() &&
                   static_cast<std::int64_t>(i) * series.step < window_end;
                 ++i) {
                if (!series.usable(i)) continue;
                sum += series.values[i];
                ++count;
            }
            if (count > 0)
                out.push_back(sum / count, Flag::Valid);
            else
                out.push_back(kMissingValue, Flag::Missing);
        }
        return out;
    }

    if (series.step % target_step != 0) throw std::invalid_argument("incompatible steps");
    const std::int64_t ratio = series.step / target_step;
    out.values.reserve(series.size() * static_cast<std::size_t>(ratio));
    for (std::size_t i = 0; i < series.size(); ++i)
        for (std::int64_t r = 0; r < ratio; ++r) out.push_back(series.values[i], series.flags[i]);
    return out;
}

}  // namespace helioforge
