#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "helioforge/forecast_matrix.hpp"
#include "helioforge/time_series.hpp"

namespace helioforge {

enum class EnsembleFramework { Basic, TimeOrder };

inline const char* framework_name(EnsembleFramework f) {
    return f == EnsembleFramework::Basic ? "basic" : "time-order";
}

inline EnsembleFramework framework_from_name(const std::string& s) {
    if (s == "basic") return EnsembleFramework::Basic;
    if (s == "time-order") return EnsembleFramework::TimeOrder;
    throw std::invalid_argument("unknown ensemble framework: " + s);
}

/// Upper lead boundaries of the time-order groups; lead h belongs to the
/// first group whose boundary is >= h.
inline const std::vector<int> kTimeOrderBoundaries = {4, 8, 12, 24, 36, 48, 60, 72, 84, 96};

struct EnsembleGroupDiagnostics {
    std::size_t rows = 0;
    double condition = 0.0;
    bool rank_deficient = false;
};

/// Combination weights, one vector per lead group (a single group for the
/// basic framework). Weights are unconstrained least-squares coefficients:
/// they need not be nonnegative or sum to one.
struct EnsembleWeights {
    EnsembleFramework framework = EnsembleFramework::Basic;
    std::vector<int> boundaries;  // empty for basic
    std::vector<std::vector<double>> weights;
    std::vector<EnsembleGroupDiagnostics> diagnostics;

    std::size_t components() const { return weights.empty() ? 0 : weights[0].size(); }

    int group_of_lead(int lead) const {
        if (lead < 1) throw std::invalid_argument("lead must be >= 1");
        if (framework == EnsembleFramework::Basic) return 0;
        for (std::size_t g = 0; g < boundaries.size(); ++g)
            if (lead <= boundaries[g]) return static_cast<int>(g);
        throw std::invalid_argument("lead exceeds ensemble horizon");
    }

    const std::vector<double>& weights_for_lead(int lead) const {
        return weights[static_cast<std::size_t>(group_of_lead(lead))];
    }

    void validate() const {
        if (weights.empty()) throw std::invalid_argument("empty input");
        const std::size_t k = weights[0].size();
        if (k == 0) throw std::invalid_argument("empty input");
        for (const auto& w : weights)
            if (w.size() != k) throw std::invalid_argument("ensemble weights: ragged groups");
        if (framework == EnsembleFramework::Basic) {
            if (weights.size() != 1)
                throw std::invalid_argument("ensemble weights: basic framework needs one group");
        } else {
            if (boundaries.size() != weights.size())
                throw std::invalid_argument("ensemble weights: boundary/group count mismatch");
            int prev = 0;
            for (int b : boundaries) {
                if (b <= prev)
                    throw std::invalid_argument(
                        "ensemble weights: boundaries must be strictly increasing positives");
                prev = b;
            }
        }
    }

    /// Equal weights over k components (the pre-fit default).
    static EnsembleWeights equal(EnsembleFramework framework, std::size_t k,
                                 const std::vector<int>& bounds = kTimeOrderBoundaries) {
        EnsembleWeights w;
        w.framework = framework;
        if (framework == EnsembleFramework::TimeOrder) w.boundaries = bounds;
        const std::size_t groups = framework == EnsembleFramework::Basic ? 1 : w.boundaries.size();
        w.weights.assign(groups, std::vector<double>(k, 1.0 / static_cast<double>(k)));
        w.diagnostics.assign(groups, {});
        w.validate();
        return w;
    }
};

struct EnsembleFitOptions {
    /// Drop rows whose measured target is at or below this magnitude
    /// (night instants carry no combinable signal).
    bool exclude_night = true;
    double night_threshold = 0.0;
    /// Optional row keep-predicate on (origin, lead); empty keeps all.
    std::function<bool(UnixTime, int)> row_filter;
};

namespace detail {

struct EnsembleRow {
    int lead = 1;
    std::vector<double> preds;
    double target = 0.0;
};

/// (origin, lead) rows where every component predicted and the measured
/// target is usable, after the night and custom filters. The row set is a
/// pure function of components + measurements + options, so objectives of
/// different weight structures are comparable on it.
inline std::vector<EnsembleRow> collect_rows(const std::vector<const ForecastMatrix*>& components,
                                             const TimeSeries& measured,
                                             const EnsembleFitOptions& options, int* horizon_out) {
    if (components.empty()) throw std::invalid_argument("empty input");
    measured.validate();
    const std::size_t k = components.size();
    int horizon = components[0] ? components[0]->horizon : 0;
    for (const ForecastMatrix* m : components) {
        if (!m) throw std::invalid_argument("empty input");
        m->validate();
        if (m->step != measured.step) throw std::invalid_argument("incompatible steps");
        horizon = std::min(horizon, m->horizon);
    }
    if (horizon < 1) throw std::invalid_argument("empty input");
    if (horizon_out) *horizon_out = horizon;

    std::vector<EnsembleRow> rows;
    for (std::size_t i = 0; i < components[0]->origins.size(); ++i) {
        const UnixTime origin = components[0]->origins[i];
        std::vector<std::ptrdiff_t> at(k);
        at[0] = static_cast<std::ptrdiff_t>(i);
        bool all = true;
        for (std::size_t c = 1; c < k; ++c) {
            at[c] = components[c]->find_origin(origin);
            if (at[c] < 0) {
                all = false;
                break;
            }
        }
        if (!all) continue;
        for (int h = 1; h <= horizon; ++h) {
            const UnixTime target = origin + static_cast<UnixTime>(h - 1) * measured.step;
            const std::ptrdiff_t ti = measured.index_of(target);
            if (ti < 0 || !measured.usable(static_cast<std::size_t>(ti))) continue;
            const double y = measured.values[static_cast<std::size_t>(ti)];
            if (options.exclude_night && std::abs(y) <= options.night_threshold) continue;
            if (options.row_filter && !options.row_filter(origin, h)) continue;
            EnsembleRow row;
            row.lead = h;
            row.preds.resize(k);
            bool complete = true;
            for (std::size_t c = 0; c < k; ++c) {
                const double p = components[c]->at(static_cast<std::size_t>(at[c]), h);
                if (is_missing(p)) {
                    complete = false;
                    break;
                }
                row.preds[c] = p;
            }
            if (!complete) continue;
            row.target = y;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

struct GroupSolve {
    std::vector<double> weights;
    EnsembleGroupDiagnostics diag;
};

/// Minimum-norm least squares via SVD; small singular values are treated
/// as zero so collinear component sets stay solvable.
inline GroupSolve solve_group(const std::vector<const EnsembleRow*>& rows, std::size_t k) {
    GroupSolve out;
    out.diag.rows = rows.size();
    Eigen::MatrixXd X(rows.size(), k);
    Eigen::VectorXd y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < k; ++c) X(r, c) = rows[r]->preds[c];
        y(r) = rows[r]->target;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
    out.diag.condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
    out.diag.rank_deficient = svd.rank() < static_cast<Eigen::Index>(k);
    const Eigen::VectorXd w = svd.solve(y);
    out.weights.assign(w.data(), w.data() + k);
    return out;
}

}  // namespace detail

/// Fit combination weights by least squares against the measurements: one
/// pooled problem for the basic framework, one per lead group for
/// time-order. Rows are (origin, lead) pairs where every component made a
/// prediction and the target measurement is usable; component matrices must
/// share the measurement grid.
inline EnsembleWeights fit_weights(const std::vector<const ForecastMatrix*>& components,
                                   const TimeSeries& measured, EnsembleFramework framework,
                                   const EnsembleFitOptions& options = {},
                                   const std::vector<int>& boundaries = kTimeOrderBoundaries) {
    int horizon = 0;
    const std::vector<detail::EnsembleRow> rows =
        detail::collect_rows(components, measured, options, &horizon);
    const std::size_t k = components.size();
    if (framework == EnsembleFramework::TimeOrder &&
        (boundaries.empty() || boundaries.back() < horizon))
        throw std::invalid_argument("ensemble weights: boundaries do not cover the horizon");

    EnsembleWeights result = EnsembleWeights::equal(framework, k, boundaries);
    const std::size_t groups = result.weights.size();

    std::vector<std::vector<const detail::EnsembleRow*>> grouped(groups);
    for (const auto& row : rows)
        grouped[static_cast<std::size_t>(result.group_of_lead(row.lead))].push_back(&row);

    for (std::size_t g = 0; g < groups; ++g) {
        const int group_first_lead =
            framework == EnsembleFramework::Basic
                ? 1
                : (g == 0 ? 1 : result.boundaries[g - 1] + 1);
        if (group_first_lead > horizon) continue;  // beyond horizon: equal weights stay
        if (grouped[g].size() < k) throw std::invalid_argument("insufficient data");
        detail::GroupSolve sol = detail::solve_group(grouped[g], k);
        result.weights[g] = std::move(sol.weights);
        result.diagnostics[g] = sol.diag;
    }
    return result;
}

/// Sum of squared combination residuals over exactly the rows fit_weights
/// would use, evaluated for an arbitrary weight structure. Objectives of
/// different frameworks (and of single components via one-hot weights) are
/// directly comparable when computed with the same options.
inline double training_objective(const std::vector<const ForecastMatrix*>& components,
                                 const TimeSeries& measured, const EnsembleWeights& weights,
                                 const EnsembleFitOptions& options = {}) {
    weights.validate();
    if (weights.components() != components.size())
        throw std::invalid_argument("ensemble weights: component count mismatch");
    const std::vector<detail::EnsembleRow> rows =
        detail::collect_rows(components, measured, options, nullptr);
    if (rows.empty()) throw std::invalid_argument("insufficient data");
    double J = 0.0;
    for (const auto& row : rows) {
        const std::vector<double>& w = weights.weights_for_lead(row.lead);
        double p = 0.0;
        for (std::size_t c = 0; c < w.size(); ++c) p += w[c] * row.preds[c];
        const double d = p - row.target;
        J += d * d;
    }
    return J;
}

/// One-hot weights selecting a single component (for objective comparisons).
inline EnsembleWeights one_hot_weights(std::size_t k, std::size_t index) {
    if (index >= k) throw std::invalid_argument("one-hot index out of range");
    EnsembleWeights w = EnsembleWeights::equal(EnsembleFramework::Basic, k);
    w.weights[0].assign(k, 0.0);
    w.weights[0][index] = 1.0;
    return w;
}

/// Combine one prediction per component into the ensemble output. When a
/// component is missing at a lead, the remaining weights are rescaled by
/// (sum of all weights) / (sum of available weights); a near-zero available
/// sum falls back to equal weights over the available components. Output is
/// clipped below at zero; leads where no component predicts stay missing.
inline std::vector<double> combine(const EnsembleWeights& w,
                                   const std::vector<std::vector<double>>& component_preds) {
    w.validate();
    const std::size_t k = w.components();
    if (component_preds.size() != k) throw std::invalid_argument("empty input");
    std::size_t horizon = 0;
    for (const auto& p : component_preds) horizon = std::max(horizon, p.size());

    std::vector<double> out(horizon, kMissingValue);
    for (std::size_t h = 1; h <= horizon; ++h) {
        const std::vector<double>& wg = w.weights_for_lead(static_cast<int>(h));
        double sum_all = 0.0;
        for (double wi : wg) sum_all += wi;
        double sum_avail = 0.0;
        std::size_t n_avail = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (h <= component_preds[c].size() && !is_missing(component_preds[c][h - 1])) {
                sum_avail += wg[c];
                ++n_avail;
            }
        }
        if (n_avail == 0) continue;
        double acc = 0.0;
        if (std::abs(sum_avail) <= 1e-9) {
            for (std::size_t c = 0; c < k; ++c) {
                if (h <= component_preds[c].size() && !is_missing(component_preds[c][h - 1]))
                    acc += component_preds[c][h - 1] / static_cast<double>(n_avail);
            }
        } else {
            const double scale = sum_all / sum_avail;
            for (std::size_t c = 0; c < k; ++c) {
                if (h <= component_preds[c].size() && !is_missing(component_preds[c][h - 1]))
                    acc += wg[c] * scale * component_preds[c][h - 1];
            }
        }
        out[h - 1] = std::max(0.0, acc);
    }
    return out;
}

/// Matrix-level combine: rows are matched across components by origin time;
/// origins absent from some component are combined from the rest through
/// the missing-component renormalization.
inline ForecastMatrix combine_matrices(const EnsembleWeights& w,
                                       const std::vector<const ForecastMatrix*>& components,
                                       const std::string& predictor_id) {
    w.validate();
    if (components.empty() || w.components() != components.size())
        throw std::invalid_argument("empty input");
    for (const ForecastMatrix* m : components) {
        if (!m) throw std::invalid_argument("empty input");
        m->validate();
        if (m->step != components[0]->step) throw std::invalid_argument("incompatible steps");
    }
    int horizon = components[0]->horizon;
    for (const ForecastMatrix* m : components) horizon = std::min(horizon, m->horizon);

    ForecastMatrix out;
    out.predictor_id = predictor_id;
    out.step = components[0]->step;
    out.horizon = horizon;
    for (std::size_t i = 0; i < components[0]->origins.size(); ++i) {
        const UnixTime origin = components[0]->origins[i];
        std::vector<std::vector<double>> preds(components.size());
        for (std::size_t c = 0; c < components.size(); ++c) {
            const std::ptrdiff_t at =
                c == 0 ? static_cast<std::ptrdiff_t>(i) : components[c]->find_origin(origin);
            if (at < 0) {
                preds[c].assign(static_cast<std::size_t>(horizon), kMissingValue);
                continue;
            }
            preds[c].resize(static_cast<std::size_t>(horizon));
            for (int h = 1; h <= horizon; ++h)
                preds[c][static_cast<std::size_t>(h - 1)] =
                    components[c]->at(static_cast<std::size_t>(at), h);
        }
        out.add_row(origin, combine(w, preds));
    }
    return out;
}

}  // namespace helioforge
