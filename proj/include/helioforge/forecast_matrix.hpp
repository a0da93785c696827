#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "helioforge/time_series.hpp"

namespace helioforge {

/// Per prediction origin, the vector of h-step-ahead predictions of one
/// predictor. Lead h (1-based) targets origin + (h-1)*step: the origin is
/// the first predicted instant, and a predictor issuing at an origin has
/// seen only measurements strictly before it. Missing entries are NaN.
struct ForecastMatrix {
    std::string predictor_id;
    std::int64_t step = 900;
    int horizon = 96;
    std::vector<UnixTime> origins;
    std::vector<std::vector<double>> predictions;  // [origin][h-1]

    std::size_t size() const noexcept { return origins.size(); }

    UnixTime target_time(std::size_t origin_idx, int lead) const noexcept {
        return origins[origin_idx] + static_cast<std::int64_t>(lead - 1) * step;
    }

    double at(std::size_t origin_idx, int lead) const { return predictions[origin_idx][lead - 1]; }

    void add_row(UnixTime origin, std::vector<double> row) {
        if (static_cast<int>(row.size()) != horizon)
            throw std::invalid_argument("forecast matrix: row length != horizon");
        origins.push_back(origin);
        predictions.push_back(std::move(row));
    }

    /// Index of an origin, or -1.
    std::int64_t find_origin(UnixTime origin) const noexcept {
        const auto it = std::lower_bound(origins.begin(), origins.end(), origin);
        if (it == origins.end() || *it != origin) return -1;
        return it - origins.begin();
    }

    void validate() const {
        if (step <= 0) throw std::invalid_argument("forecast matrix: step must be positive");
        if (horizon < 1) throw std::invalid_argument("forecast matrix: horizon must be >= 1");
        if (origins.size() != predictions.size())
            throw std::invalid_argument("forecast matrix: origins/rows mismatch");
        for (const auto& row : predictions)
            if (static_cast<int>(row.size()) != horizon)
                throw std::invalid_argument("forecast matrix: ragged row");
    }
};

/// One forecast product delivered by the external weather service: issued at
/// `issue_time`, covering `values` (its own coarse grid, typically 3-hour).
struct ForecastIssue {
    UnixTime issue_time = 0;
    TimeSeries values;
};

/// The service feed is the ordered list of issues (new issue every 6 hours).
struct ServiceFeed {
    std::vector<ForecastIssue> issues;  // sorted by issue_time

    bool empty() const noexcept { return issues.empty(); }

    /// Latest issue strictly before `origin`, or nullptr.
    const ForecastIssue* latest_before(UnixTime origin) const noexcept {
        const ForecastIssue* best = nullptr;
        for (const auto& iss : issues) {
            if (iss.issue_time < origin) best = &iss;
            else break;
        }
        return best;
    }

    /// Service prediction for `horizon` leads from `origin` on a `step` grid:
    /// the latest issue before the origin, held constant across each of its
    /// coarse intervals (zero-order hold). Leads outside the issue's coverage
    /// are missing.
    std::vector<double> predict(UnixTime origin, int horizon, std::int64_t step) const {
        std::vector<double> out(static_cast<std::size_t>(horizon), kMissingValue);
        const ForecastIssue* iss = latest_before(origin);
        if (!iss) return out;
        const TimeSeries& v = iss->values;
        for (int h = 1; h <= horizon; ++h) {
            const UnixTime t = origin + static_cast<std::int64_t>(h - 1) * step;
            const std::int64_t d = t - v.start_time;
            if (d < 0) continue;
            const std::int64_t i = d / v.step;
            if (i >= static_cast<std::int64_t>(v.size())) continue;
            if (v.usable(static_cast<std::size_t>(i))) out[static_cast<std::size_t>(h - 1)] = v.values[static_cast<std::size_t>(i)];
        }
        return out;
    }

    void sort_issues() {
        std::sort(issues.begin(), issues.end(),
                  [](const ForecastIssue& a, const ForecastIssue& b) {
                      return a.issue_time < b.issue_time;
                  });
    }
};

}  // namespace helioforge
