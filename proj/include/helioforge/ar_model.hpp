#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "helioforge/seasonal.hpp"
#include "helioforge/time_series.hpp"

namespace helioforge {

/// Lag structure of a seasonally differenced autoregression. `ar_lags` are
/// the autoregressive lags on the differenced series, `exo_lags` the lags of
/// the (differenced) exogenous input (empty for a plain autoregression), and
/// `seasonal_lag` the differencing lag (96 = 24 hours at 15-minute sampling).
struct LagSpec {
    std::vector<int> ar_lags;
    std::vector<int> exo_lags;
    int seasonal_lag = 96;

    void validate() const {
        auto strictly_increasing = [](const std::vector<int>& v, int min_allowed) {
            int prev = min_allowed - 1;
            for (int x : v) {
                if (x <= prev) return false;
                prev = x;
            }
            return true;
        };
        if (!strictly_increasing(ar_lags, 1))
            throw std::invalid_argument("lag spec: ar lags must be strictly increasing positives");
        if (!strictly_increasing(exo_lags, 0))
            throw std::invalid_argument("lag spec: exo lags must be strictly increasing and >= 0");
        if (seasonal_lag < 1) throw std::invalid_argument("lag spec: seasonal lag must be >= 1");
    }

    int max_ar_lag() const { return ar_lags.empty() ? 0 : ar_lags.back(); }
    int max_lag() const {
        return std::max(max_ar_lag(), exo_lags.empty() ? 0 : exo_lags.back());
    }
    int min_exo_lag() const { return exo_lags.empty() ? 0 : exo_lags.front(); }
    std::size_t coeff_count() const { return ar_lags.size() + exo_lags.size(); }
};

/// Named lag-structure presets used throughout the toolkit.
///   sr-long   p = [1,2,3,4,94,95,96,97]
///   sr-short  p = [1,2,3,4]
///   gp-ari    p = [1,2,3,4,94,95,96,97]
///   gp-arix   p = [1,2,3,4,94,95,96,97], exo = [1..12,94,95,96,97]
inline LagSpec lag_spec_preset(const std::string& name) {
    LagSpec spec;
    if (name == "sr-long" || name == "gp-ari") {
        spec.ar_lags = {1, 2, 3, 4, 94, 95, 96, 97};
    } else if (name == "sr-short") {
        spec.ar_lags = {1, 2, 3, 4};
    } else if (name == "gp-arix") {
        spec.ar_lags = {1, 2, 3, 4, 94, 95, 96, 97};
        spec.exo_lags = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 94, 95, 96, 97};
    } else {
        throw std::invalid_argument("unknown lag spec preset: " + name);
    }
    return spec;
}

/// Fitted coefficients for a LagSpec, plus fit diagnostics.
struct ModelParams {
    LagSpec spec;
    std::vector<double> ar_coeffs;
    std::vector<double> exo_coeffs;
    double fit_residual_rms = 0.0;
    double regressor_condition = 0.0;
    std::size_t fit_rows = 0;

    void validate() const {
        spec.validate();
        if (ar_coeffs.size() != spec.ar_lags.size() || exo_coeffs.size() != spec.exo_lags.size())
            throw std::invalid_argument("model params: coefficient/lag count mismatch");
    }
};

namespace detail {

/// Differenced values with availability: NaN where not computable.
inline std::vector<double> diff_values(const TimeSeries& series, int lag) {
    const TimeSeries d = seasonal_diff(series, lag);
    std::vector<double> out(d.size(), kMissingValue);
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.usable(i)) out[i] = d.values[i];
    return out;
}

}  // namespace detail

/// Ordinary least squares on the seasonally differenced target against its
/// own lagged values and, when `exo` is given, lagged differenced exogenous
/// values. No intercept: the differencing removes the diurnal level. Rows
/// containing any missing sample are dropped rather than imputed.
inline ModelParams fit_ar(const TimeSeries& series, const LagSpec& spec,
                          const TimeSeries* exo = nullptr) {
    spec.validate();
    series.validate();
    if (!spec.exo_lags.empty()) {
        if (!exo) throw std::invalid_argument("exogenous input required");
        exo->validate();
        if (exo->start_time != series.start_time || exo->step != series.step ||
            exo->size() != series.size())
            throw std::invalid_argument("unaligned series");
    }

    const int L = spec.seasonal_lag;
    if (series.size() <= static_cast<std::size_t>(L + spec.max_lag()))
        throw std::invalid_argument("insufficient data");

    const std::vector<double> z = detail::diff_values(series, L);
    std::vector<double> w;
    if (!spec.exo_lags.empty()) w = detail::diff_values(*exo, L);

    const std::size_t ncoef = spec.coeff_count();
    const std::size_t t0 = static_cast<std::size_t>(L + spec.max_lag());

    std::vector<std::size_t> row_index;
    for (std::size_t t = t0; t < z.size(); ++t) {
        if (is_missing(z[t])) continue;
        bool ok = true;
        for (int l : spec.ar_lags)
            if (is_missing(z[t - static_cast<std::size_t>(l)])) {
                ok = false;
                break;
            }
        if (ok)
            for (int m : spec.exo_lags)
                if (is_missing(w[t - static_cast<std::size_t>(m)])) {
                    ok = false;
                    break;
                }
        if (ok) row_index.push_back(t);
    }

    if (row_index.size() < 10 * ncoef) throw std::invalid_argument("insufficient data");

    Eigen::MatrixXd X(row_index.size(), ncoef);
    Eigen::VectorXd y(row_index.size());
    for (std::size_t r = 0; r < row_index.size(); ++r) {
        const std::size_t t = row_index[r];
        std::size_t c = 0;
        for (int l : spec.ar_lags) X(r, c++) = z[t - static_cast<std::size_t>(l)];
        for (int m : spec.exo_lags) X(r, c++) = w[t - static_cast<std::size_t>(m)];
        y(r) = z[t];
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
    const double condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (svd.rank() < static_cast<Eigen::Index>(ncoef))
        throw std::runtime_error("degenerate regression (condition " + std::to_string(condition) +
                                 ")");
    const Eigen::VectorXd theta = svd.solve(y);

    ModelParams params;
    params.spec = spec;
    params.ar_coeffs.assign(theta.data(), theta.data() + spec.ar_lags.size());
    params.exo_coeffs.assign(theta.data() + spec.ar_lags.size(), theta.data() + ncoef);
    params.fit_residual_rms = std::sqrt((X * theta - y).squaredNorm() / static_cast<double>(y.size()));
    params.regressor_condition = condition;
    params.fit_rows = row_index.size();
    return params;
}

namespace detail {

/// Original-scale anchor at index u: the value one (or, when that slot is
/// missing, several) seasonal lags back. `predicted` covers indices >= n.
inline double anchor_value(const TimeSeries& history, const std::vector<double>& predicted,
                           std::size_t n, std::int64_t u, int lag) {
    while (u >= 0) {
        if (u >= static_cast<std::int64_t>(n)) {
            const double v = predicted[static_cast<std::size_t>(u) - n];
            if (!is_missing(v)) return v;
        } else if (history.usable(static_cast<std::size_t>(u))) {
            return history.values[static_cast<std::size_t>(u)];
        }
        u -= lag;
    }
    throw std::invalid_argument("insufficient history");
}

}  // namespace detail

/// Iterated multi-step prediction. The recursion runs in differenced space,
/// feeding its own predictions back for future lags; the result is then
/// seasonally re-integrated and clipped below at zero. `history` holds all
/// measurements strictly before the prediction origin; lead h targets
/// origin + (h-1)*step. For a model with exogenous lags, `exo` must share
/// the history grid and extend at least `horizon` samples past it.
inline std::vector<double> predict_recursive(const ModelParams& model, const TimeSeries& history,
                                             const TimeSeries* exo, int horizon) {
    model.validate();
    history.validate();
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    const LagSpec& spec = model.spec;
    const int L = spec.seasonal_lag;
    const std::size_t n = history.size();
    if (n < static_cast<std::size_t>(L + spec.max_ar_lag()))
        throw std::invalid_argument("insufficient history");

    std::vector<double> w;
    if (!spec.exo_lags.empty()) {
        if (!exo) throw std::invalid_argument("exogenous input required");
        exo->validate();
        if (exo->start_time != history.start_time || exo->step != history.step)
            throw std::invalid_argument("unaligned series");
        const std::int64_t need = static_cast<std::int64_t>(n) + horizon - spec.min_exo_lag();
        if (static_cast<std::int64_t>(exo->size()) < need)
            throw std::invalid_argument("exogenous input required");
        w = detail::diff_values(*exo, L);
        w.resize(n + static_cast<std::size_t>(horizon), kMissingValue);
    }

    std::vector<double> z = detail::diff_values(history, L);
    z.resize(n + static_cast<std::size_t>(horizon), kMissingValue);
    // missing differenced samples contribute nothing (seasonal persistence
    // for that term)
    auto term = [](const std::vector<double>& v, std::size_t idx) {
        const double x = v[idx];
        return is_missing(x) ? 0.0 : x;
    };

    std::vector<double> out(static_cast<std::size_t>(horizon), kMissingValue);
    for (int s = 0; s < horizon; ++s) {
        const std::size_t t = n + static_cast<std::size_t>(s);
        double acc = 0.0;
        for (std::size_t j = 0; j < spec.ar_lags.size(); ++j)
            acc += model.ar_coeffs[j] * term(z, t - static_cast<std::size_t>(spec.ar_lags[j]));
        for (std::size_t k = 0; k < spec.exo_lags.size(); ++k)
            acc += model.exo_coeffs[k] * term(w, t - static_cast<std::size_t>(spec.exo_lags[k]));
        z[t] = acc;
        const double anchor = detail::anchor_value(history, out, n,
                                                   static_cast<std::int64_t>(t) - L, L);
        out[static_cast<std::size_t>(s)] = std::max(0.0, acc + anchor);
    }
    return out;
}

/// Repeat the previous day: the prediction at lead h is the measurement one
/// seasonal lag before the target (scanning further back across missing
/// slots, and reading already-predicted leads once h exceeds the lag).
inline std::vector<double> persistence_predict(const TimeSeries& history, int seasonal_lag,
                                               int horizon) {
    history.validate();
    if (seasonal_lag < 1) throw std::invalid_argument("seasonal lag must be >= 1");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    const std::size_t n = history.size();
    if (n < static_cast<std::size_t>(seasonal_lag))
        throw std::invalid_argument("insufficient history");
    std::vector<double> out(static_cast<std::size_t>(horizon), kMissingValue);
    for (int s = 0; s < horizon; ++s) {
        const std::int64_t u = static_cast<std::int64_t>(n) + s - seasonal_lag;
        out[static_cast<std::size_t>(s)] =
            detail::anchor_value(history, out, n, u, seasonal_lag);
    }
    return out;
}

}  // namespace helioforge
