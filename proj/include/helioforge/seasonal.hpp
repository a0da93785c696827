#pragma once

#include <cstdint>
#include <stdexcept>

#include "helioforge/time_series.hpp"

namespace helioforge {

/// Seasonal differencing: out_i = in_i - in_{i-lag} for i >= lag; the first
/// `lag` samples (and any sample whose pair is not usable) are missing.
/// At 15-minute sampling, lag 96 is one 24-hour differencing pass.
inline TimeSeries seasonal_diff(const TimeSeries& series, int lag) {
    series.validate();
    if (lag < 1) throw std::invalid_argument("lag must be >= 1");
    if (series.size() <= static_cast<std::size_t>(lag))
        throw std::invalid_argument("insufficient history");
    TimeSeries out;
    out.start_time = series.start_time;
    out.step = series.step;
    out.values.assign(series.size(), kMissingValue);
    out.flags.assign(series.size(), Flag::Missing);
    for (std::size_t i = static_cast<std::size_t>(lag); i < series.size(); ++i) {
        if (!series.usable(i) || !series.usable(i - static_cast<std::size_t>(lag))) continue;
        out.values[i] = series.values[i] - series.values[i - static_cast<std::size_t>(lag)];
        out.flags[i] = Flag::Valid;
    }
    return out;
}

/// Inverse of seasonal_diff. `history` must supply at least the last `lag`
/// original-scale samples immediately preceding the first diff sample;
/// out_i = diff_i + original_{i-lag}, computed recursively forward. A missing
/// diff sample makes the output missing from that seasonal slot onward.
inline TimeSeries seasonal_integrate(const TimeSeries& diff, const TimeSeries& history, int lag) {
    diff.validate();
    history.validate();
    if (lag < 1) throw std::invalid_argument("lag must be >= 1");
    if (history.size() < static_cast<std::size_t>(lag))
        throw std::invalid_argument("insufficient history");
    TimeSeries out;
    out.start_time = diff.start_time;
    out.step = diff.step;
    out.values.assign(diff.size(), kMissingValue);
    out.flags.assign(diff.size(), Flag::Missing);
    const std::size_t h0 = history.size() - static_cast<std::size_t>(lag);
    for (std::size_t i = 0; i < diff.size(); ++i) {
        double prior;
        if (i < static_cast<std::size_t>(lag)) {
            if (!history.usable(h0 + i)) throw std::invalid_argument("insufficient history");
            prior = history.values[h0 + i];
        } else {
            if (!out.usable(i - static_cast<std::size_t>(lag))) continue;
            prior = out.values[i - static_cast<std::size_t>(lag)];
        }
        if (!diff.usable(i)) continue;
        out.values[i] = diff.values[i] + prior;
        out.flags[i] = Flag::Valid;
    }
    return out;
}

}  // namespace helioforge
