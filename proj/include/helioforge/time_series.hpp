#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "helioforge/calendar.hpp"

namespace helioforge {

/// Value stored for samples that carry no number.
constexpr double kMissingValue = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// Per-sample quality flag.
enum class Flag : std::uint8_t { Valid, Missing, Outlier, Interpolated };

/// A sample is usable when its numeric value may be consumed downstream.
constexpr bool is_usable(Flag f) noexcept {
    return f == Flag::Valid || f == Flag::Interpolated;
}

inline const char* flag_name(Flag f) {
    switch (f) {
        case Flag::Valid: return "valid";
        case Flag::Missing: return "missing";
        case Flag::Outlier: return "outlier";
        case Flag::Interpolated: return "interpolated";
    }
    return "valid";
}

inline Flag flag_from_name(const std::string& s) {
    if (s == "valid" || s.empty()) return Flag::Valid;
    if (s == "missing") return Flag::Missing;
    if (s == "outlier") return Flag::Outlier;
    if (s == "interpolated") return Flag::Interpolated;
    throw std::invalid_argument("unknown flag: " + s);
}

/// Half-open index range [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t length() const noexcept { return end - begin; }
};

/// Uniformly sampled scalar series. Timestamps are implicit:
/// t_i = start_time + i * step, so grid uniformity is structural.
/// Missing samples carry NaN values; outliers keep their original value
/// but are excluded from downstream numeric use via the flag.
struct TimeSeries {
    UnixTime start_time = 0;
    std::int64_t step = 900;
    std::vector<double> values;
    std::vector<Flag> flags;

    TimeSeries() = default;
    TimeSeries(UnixTime start, std::int64_t step_seconds, std::vector<double> vals)
        : start_time(start), step(step_seconds), values(std::move(vals)) {
        flags.assign(values.size(), Flag::Valid);
        for (std::size_t i = 0; i < values.size(); ++i)
            if (std::isnan(values[i])) flags[i] = Flag::Missing;
    }

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }

    UnixTime time_at(std::size_t i) const noexcept {
        return start_time + static_cast<std::int64_t>(i) * step;
    }
    UnixTime end_time() const noexcept { return time_at(size()); }  // one past the last sample

    /// Index of an exact grid point, or -1 if off-grid / out of range.
    std::int64_t index_of(UnixTime t) const noexcept {
        const std::int64_t d = t - start_time;
        if (d < 0 || d % step != 0) return -1;
        const std::int64_t i = d / step;
        return i < static_cast<std::int64_t>(size()) ? i : -1;
    }

    bool usable(std::size_t i) const noexcept { return is_usable(flags[i]); }

    void push_back(double v, Flag f = Flag::Valid) {
        values.push_back(v);
        flags.push_back(f);
    }

    void mark_missing(std::size_t i) {
        values[i] = std::numeric_limits<double>::quiet_NaN();
        flags[i] = Flag::Missing;
    }

    bool same_grid(const TimeSeries& other) const noexcept {
        return start_time == other.start_time && step == other.step && size() == other.size();
    }

    std::size_t usable_count() const noexcept {
        std::size_t n = 0;
        for (Flag f : flags) n += is_usable(f);
        return n;
    }

    /// Largest usable value (0 if none).
    double peak() const noexcept {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
            if (usable(i) && values[i] > m) m = values[i];
        return m;
    }

    /// Copy of samples [0, n_prefix). Used by the backtest harness to hand a
    /// predictor only the history strictly before an origin.
    TimeSeries prefix(std::size_t n_prefix) const {
        TimeSeries out;
        out.start_time = start_time;
        out.step = step;
        out.values.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n_prefix));
        out.flags.assign(flags.begin(), flags.begin() + static_cast<std::ptrdiff_t>(n_prefix));
        return out;
    }

    /// Copy of the half-open index range [r.begin, r.end); keeps the grid.
    TimeSeries slice(IndexRange r) const {
        if (r.begin > r.end || r.end > size())
            throw std::out_of_range("time series: slice out of range");
        TimeSeries out;
        out.start_time = time_at(r.begin);
        out.step = step;
        out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(r.begin),
                          values.begin() + static_cast<std::ptrdiff_t>(r.end));
        out.flags.assign(flags.begin() + static_cast<std::ptrdiff_t>(r.begin),
                         flags.begin() + static_cast<std::ptrdiff_t>(r.end));
        return out;
    }

    void validate() const {
        if (step <= 0) throw std::invalid_argument("time series: step must be positive");
        if (values.size() != flags.size())
            throw std::invalid_argument("time series: values/flags length mismatch");
    }
};

/// The three disjoint, ordered periods of a dataset: model calibration,
/// ensemble calibration, validation.
struct DatasetSplit {
    IndexRange calibration;
    IndexRange ensemble_calibration;
    IndexRange validation;

    void validate() const {
        auto ok = [](const IndexRange& r) { return r.begin <= r.end; };
        if (!ok(calibration) || !ok(ensemble_calibration) || !ok(validation))
            throw std::invalid_argument("split: inverted range");
        if (calibration.end > ensemble_calibration.begin ||
            ensemble_calibration.end > validation.begin)
            throw std::invalid_argument("split: ranges must be disjoint and ordered");
    }

    /// Split the first n samples into three consecutive periods of the given
    /// fractional sizes (validation takes the remainder).
    static DatasetSplit by_fraction(std::size_t n, double cal_frac, double ens_frac) {
        if (cal_frac < 0 || ens_frac < 0 || cal_frac + ens_frac > 1.0)
            throw std::invalid_argument("split: bad fractions");
        DatasetSplit s;
        s.calibration = {0, static_cast<std::size_t>(static_cast<double>(n) * cal_frac)};
        s.ensemble_calibration = {
            s.calibration.end,
            s.calibration.end + static_cast<std::size_t>(static_cast<double>(n) * ens_frac)};
        s.validation = {s.ensemble_calibration.end, n};
        s.validate();
        return s;
    }
};

}  // namespace helioforge
