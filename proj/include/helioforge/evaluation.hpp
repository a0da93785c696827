#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "helioforge/forecast_matrix.hpp"
#include "helioforge/time_series.hpp"

namespace helioforge {

/// Normalized root-mean-square error in percent: (100/M) * sqrt(sum of
/// squared errors / h). M is the peak of the full measurement record for
/// the quantity, fixed across evaluations.
inline double rmse_normalized(const std::vector<double>& predicted,
                              const std::vector<double>& measured, double M) {
    if (predicted.empty() || measured.empty()) throw std::invalid_argument("empty input");
    if (predicted.size() != measured.size()) throw std::invalid_argument("unaligned series");
    if (!(M > 0.0)) throw std::invalid_argument("normalization peak must be positive");
    double sq = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - measured[i];
        sq += d * d;
    }
    return 100.0 / M * std::sqrt(sq / static_cast<double>(predicted.size()));
}

/// A prediction callable: given the measurement history strictly before the
/// origin, return one value per lead (lead h targets origin + (h-1)*step).
using PredictorFn = std::function<std::vector<double>(const TimeSeries&, UnixTime)>;

struct BacktestOptions {
    int horizon = 96;
    int stride = 1;  // origins every `stride` grid steps
    /// Skip windows whose usable measured values are all zero (night-only
    /// windows); the default scores every window.
    bool daylight_only = false;
    /// 0 selects the peak of the full measurement record.
    double normalization_peak = 0.0;
    std::string predictor_id = "predictor";
};

struct BacktestResult {
    std::string predictor_id;
    double mean_rmse = 0.0;  // arithmetic mean of per-origin RMSE
    std::vector<UnixTime> origins;
    std::vector<double> per_origin_rmse;
    std::vector<double> lead_rmse;  // pooled per lead, NaN where no pairs
    double normalization_peak = 0.0;
    std::size_t pairs = 0;
    ForecastMatrix matrix;  // every issued prediction, reusable downstream
};

/// Rolling-origin evaluation. Origins are grid instants indexed by
/// [range.begin, range.end) stepping `stride`; the predictor receives only
/// the prefix of the measurements strictly before each origin, so lookahead
/// is structurally impossible. Targets beyond the record or unusable are
/// skipped; origins with no scored pair are dropped from the report.
inline BacktestResult rolling_backtest(const PredictorFn& predictor, const TimeSeries& measured,
                                       IndexRange range, const BacktestOptions& options = {}) {
    measured.validate();
    if (options.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (options.stride < 1) throw std::invalid_argument("stride must be >= 1");
    if (range.begin >= range.end || range.end > measured.size())
        throw std::invalid_argument("empty input");

    BacktestResult result;
    result.predictor_id = options.predictor_id;
    result.normalization_peak =
        options.normalization_peak > 0.0 ? options.normalization_peak : measured.peak();
    if (!(result.normalization_peak > 0.0))
        throw std::invalid_argument("normalization peak must be positive");
    result.matrix.predictor_id = options.predictor_id;
    result.matrix.step = measured.step;
    result.matrix.horizon = options.horizon;

    std::vector<double> lead_sq(static_cast<std::size_t>(options.horizon), 0.0);
    std::vector<std::size_t> lead_n(static_cast<std::size_t>(options.horizon), 0);

    for (std::size_t i = range.begin; i < range.end;
         i += static_cast<std::size_t>(options.stride)) {
        const UnixTime origin = measured.time_at(i);
        const TimeSeries history = measured.prefix(i);
        std::vector<double> pred = predictor(history, origin);
        if (pred.size() != static_cast<std::size_t>(options.horizon))
            throw std::invalid_argument("predictor returned wrong horizon");
        result.matrix.add_row(origin, pred);

        double sq = 0.0;
        std::size_t n = 0;
        bool any_daylight = false;
        for (int h = 1; h <= options.horizon; ++h) {
            const std::size_t ti = i + static_cast<std::size_t>(h - 1);
            if (ti >= measured.size() || !measured.usable(ti)) continue;
            if (measured.values[ti] > 0.0) any_daylight = true;
        }
        if (options.daylight_only && !any_daylight) continue;
        for (int h = 1; h <= options.horizon; ++h) {
            const std::size_t ti = i + static_cast<std::size_t>(h - 1);
            if (ti >= measured.size() || !measured.usable(ti)) continue;
            const double p = pred[static_cast<std::size_t>(h - 1)];
            if (is_missing(p)) continue;
            const double d = p - measured.values[ti];
            sq += d * d;
            ++n;
            lead_sq[static_cast<std::size_t>(h - 1)] += d * d;
            ++lead_n[static_cast<std::size_t>(h - 1)];
        }
        if (n == 0) continue;
        result.origins.push_back(origin);
        result.per_origin_rmse.push_back(100.0 / result.normalization_peak *
                                         std::sqrt(sq / static_cast<double>(n)));
        result.pairs += n;
    }

    if (result.per_origin_rmse.empty()) throw std::invalid_argument("empty input");
    double acc = 0.0;
    for (double r : result.per_origin_rmse) acc += r;
    result.mean_rmse = acc / static_cast<double>(result.per_origin_rmse.size());

    result.lead_rmse.assign(static_cast<std::size_t>(options.horizon), kMissingValue);
    for (int h = 1; h <= options.horizon; ++h) {
        const std::size_t k = static_cast<std::size_t>(h - 1);
        if (lead_n[k])
            result.lead_rmse[k] = 100.0 / result.normalization_peak *
                                  std::sqrt(lead_sq[k] / static_cast<double>(lead_n[k]));
    }
    return result;
}

struct AcfPacf {
    std::vector<double> acf;   // index = lag, acf[0] = 1
    std::vector<double> pacf;  // index = lag, pacf[0] = 1
    double band = 0.0;         // 95% significance band half-width
    std::size_t n = 0;
};

/// Sample autocorrelation and Durbin-Levinson partial autocorrelation for
/// lags 0..max_lag, with the +-1.96/sqrt(n) white-noise band.
inline AcfPacf acf_pacf(const std::vector<double>& x, int max_lag) {
    if (x.empty()) throw std::invalid_argument("empty input");
    if (max_lag < 1) throw std::invalid_argument("max lag must be >= 1");
    const std::size_t n = x.size();
    if (static_cast<std::size_t>(max_lag) >= n) throw std::invalid_argument("insufficient data");

    double mean = 0.0;
    for (double v : x) {
        if (is_missing(v)) throw std::invalid_argument("missing values in series");
        mean += v;
    }
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : x) c0 += (v - mean) * (v - mean);
    c0 /= static_cast<double>(n);
    if (!(c0 > 0.0)) throw std::invalid_argument("zero variance");

    AcfPacf out;
    out.n = n;
    out.band = 1.96 / std::sqrt(static_cast<double>(n));
    out.acf.assign(static_cast<std::size_t>(max_lag) + 1, 0.0);
    out.acf[0] = 1.0;
    for (int k = 1; k <= max_lag; ++k) {
        double ck = 0.0;
        for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t)
            ck += (x[t] - mean) * (x[t - static_cast<std::size_t>(k)] - mean);
        out.acf[static_cast<std::size_t>(k)] = ck / static_cast<double>(n) / c0;
    }

    out.pacf.assign(static_cast<std::size_t>(max_lag) + 1, 0.0);
    out.pacf[0] = 1.0;
    std::vector<double> phi(static_cast<std::size_t>(max_lag) + 1, 0.0);
    std::vector<double> prev(static_cast<std::size_t>(max_lag) + 1, 0.0);
    for (int k = 1; k <= max_lag; ++k) {
        double num = out.acf[static_cast<std::size_t>(k)];
        double den = 1.0;
        for (int j = 1; j < k; ++j) {
            num -= prev[static_cast<std::size_t>(j)] * out.acf[static_cast<std::size_t>(k - j)];
            den -= prev[static_cast<std::size_t>(j)] * out.acf[static_cast<std::size_t>(j)];
        }
        const double pkk = std::abs(den) > 1e-12 ? num / den : 0.0;
        phi = prev;
        phi[static_cast<std::size_t>(k)] = pkk;
        for (int j = 1; j < k; ++j)
            phi[static_cast<std::size_t>(j)] =
                prev[static_cast<std::size_t>(j)] -
                pkk * prev[static_cast<std::size_t>(k - j)];
        out.pacf[static_cast<std::size_t>(k)] = pkk;
        prev = phi;
    }
    return out;
}

inline AcfPacf acf_pacf(const TimeSeries& series, int max_lag) {
    series.validate();
    std::vector<double> x;
    x.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i)
        if (series.usable(i)) x.push_back(series.values[i]);
    return acf_pacf(x, max_lag);
}

}  // namespace helioforge
