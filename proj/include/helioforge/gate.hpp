#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "helioforge/calendar.hpp"
#include "helioforge/forecast_matrix.hpp"
#include "helioforge/rng.hpp"
#include "helioforge/svm.hpp"
#include "helioforge/time_series.hpp"

namespace helioforge {

/// One labeled instance for the service-quality gate. `label` is +1 (Good:
/// the service forecast was strictly closer to the measurement than the
/// reference autoregression) or -1 (Bad, ties included).
struct GateSample {
    double forecast_change = 0.0;
    int instant = 1;  // 1-based time-of-day index of the target
    int label = -1;
    UnixTime origin = 0;
    int lead = 1;
};

/// Feature vector [forecast_change, sin, cos, instant] where the angle is
/// 2*pi*instant/period; `period` is the number of samples per day.
inline std::vector<double> gate_features(double forecast_change, int instant, int period) {
    if (period < 1) throw std::invalid_argument("gate features: period must be >= 1");
    const double angle = 2.0 * 3.14159265358979323846 * static_cast<double>(instant) /
                         static_cast<double>(period);
    return {forecast_change, std::sin(angle), std::cos(angle), static_cast<double>(instant)};
}

/// Per-feature affine map to zero mean and unit variance.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Standardizer fit(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) throw std::invalid_argument("empty input");
        const std::size_t dim = rows[0].size();
        Standardizer s;
        s.mean.assign(dim, 0.0);
        s.stddev.assign(dim, 0.0);
        for (const auto& r : rows) {
            if (r.size() != dim) throw std::invalid_argument("standardizer: ragged rows");
            for (std::size_t k = 0; k < dim; ++k) s.mean[k] += r[k];
        }
        for (std::size_t k = 0; k < dim; ++k) s.mean[k] /= static_cast<double>(rows.size());
        for (const auto& r : rows)
            for (std::size_t k = 0; k < dim; ++k) {
                const double d = r[k] - s.mean[k];
                s.stddev[k] += d * d;
            }
        for (std::size_t k = 0; k < dim; ++k) {
            s.stddev[k] = std::sqrt(s.stddev[k] / static_cast<double>(rows.size()));
            if (!(s.stddev[k] > 0.0)) throw std::invalid_argument("zero variance");
        }
        return s;
    }

    std::vector<double> transform(const std::vector<double>& x) const {
        if (x.size() != mean.size()) throw std::invalid_argument("standardizer: dimension mismatch");
        std::vector<double> out(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - mean[k]) / stddev[k];
        return out;
    }
};

/// Label service forecasts per (origin, lead) against a reference forecast
/// matrix on the same origins. The forecast-change feature compares the
/// service value with the measurement one day before the target, which is
/// always strictly before the origin. Instances with an unusable target,
/// absent prediction, or unusable previous-day measurement are skipped.
inline std::vector<GateSample> label_gate_samples(const ForecastMatrix& service_fc,
                                                  const ForecastMatrix& reference_fc,
                                                  const TimeSeries& measured) {
    measured.validate();
    service_fc.validate();
    reference_fc.validate();
    if (service_fc.step != measured.step || reference_fc.step != measured.step)
        throw std::invalid_argument("incompatible steps");
    if (86400 % measured.step != 0)
        throw std::invalid_argument("gate labels: step must divide one day");
    const int day_lag = static_cast<int>(86400 / measured.step);
    const int horizon = std::min(service_fc.horizon, reference_fc.horizon);

    std::vector<GateSample> samples;
    for (std::size_t i = 0; i < service_fc.origins.size(); ++i) {
        const UnixTime origin = service_fc.origins[i];
        const std::ptrdiff_t j = reference_fc.find_origin(origin);
        if (j < 0) continue;
        for (int h = 1; h <= horizon; ++h) {
            const UnixTime target = service_fc.target_time(i, h);
            const std::ptrdiff_t ti = measured.index_of(target);
            if (ti < 0 || !measured.usable(static_cast<std::size_t>(ti))) continue;
            const double svc = service_fc.at(i, h);
            const double ref = reference_fc.at(static_cast<std::size_t>(j), h);
            if (is_missing(svc) || is_missing(ref)) continue;
            const std::ptrdiff_t pi = ti - day_lag;
            if (pi < 0 || !measured.usable(static_cast<std::size_t>(pi))) continue;

            GateSample s;
            s.forecast_change = svc - measured.values[static_cast<std::size_t>(pi)];
            s.instant = instant_of_day(target, measured.step);
            const double y = measured.values[static_cast<std::size_t>(ti)];
            s.label = std::abs(svc - y) < std::abs(ref - y) ? 1 : -1;
            s.origin = origin;
            s.lead = h;
            samples.push_back(s);
        }
    }
    return samples;
}

/// Trained gate: standardizer plus SVM. Good (+1) only on a strictly
/// positive decision value.
struct GateModel {
    Standardizer scaler;
    SvmModel svm;
    int period = 96;

    double decision(double forecast_change, int instant) const {
        return svm.decision(scaler.transform(gate_features(forecast_change, instant, period)));
    }
    int classify(double forecast_change, int instant) const {
        return decision(forecast_change, instant) > 0.0 ? 1 : -1;
    }
};

inline GateModel train_gate(const std::vector<GateSample>& samples, int period, double C,
                            double gamma, double tol = 1e-3) {
    if (samples.empty()) throw std::invalid_argument("empty input");
    bool has_pos = false, has_neg = false;
    for (const auto& s : samples) (s.label > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw std::invalid_argument("degenerate labels");

    std::vector<std::vector<double>> raw;
    std::vector<int> y;
    raw.reserve(samples.size());
    y.reserve(samples.size());
    for (const auto& s : samples) {
        raw.push_back(gate_features(s.forecast_change, s.instant, period));
        y.push_back(s.label);
    }
    GateModel model;
    model.period = period;
    model.scaler = Standardizer::fit(raw);
    std::vector<std::vector<double>> X;
    X.reserve(raw.size());
    for (const auto& r : raw) X.push_back(model.scaler.transform(r));
    SvmTrainOptions opt;
    opt.C = C;
    opt.gamma = gamma;
    opt.tol = tol;
    model.svm = train_svm(X, y, opt);
    return model;
}

struct GateEvaluation {
    std::size_t n = 0;
    std::size_t correct = 0;
    std::size_t good_total = 0, good_correct = 0;
    std::size_t bad_total = 0, bad_correct = 0;
    double accuracy() const { return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0; }
};

inline GateEvaluation evaluate_gate(const GateModel& model, const std::vector<GateSample>& samples) {
    GateEvaluation ev;
    for (const auto& s : samples) {
        const int pred = model.classify(s.forecast_change, s.instant);
        ++ev.n;
        if (s.label > 0) {
            ++ev.good_total;
            if (pred > 0) ++ev.good_correct;
        } else {
            ++ev.bad_total;
            if (pred < 0) ++ev.bad_correct;
        }
        if (pred == s.label) ++ev.correct;
    }
    ev.correct = ev.good_correct + ev.bad_correct;
    return ev;
}

struct GateGridPoint {
    double C = 0.0;
    double gamma = 0.0;
    double cv_accuracy = 0.0;
};

struct GateTuneResult {
    double C = 0.0;
    double gamma = 0.0;
    double cv_accuracy = 0.0;
    std::vector<GateGridPoint> grid;
};

/// K-fold cross-validated grid search. The fold split is a deterministic
/// shuffle of the sample order; the winner is the first grid point (C
/// ascending, then gamma ascending) with the highest pooled accuracy.
inline GateTuneResult tune_gate(const std::vector<GateSample>& samples, int period,
                                const std::vector<double>& Cs = {0.1, 1.0, 10.0, 100.0},
                                const std::vector<double>& gammas = {0.01, 0.1, 1.0, 10.0},
                                int folds = 5, std::uint64_t seed = 0) {
    if (samples.empty()) throw std::invalid_argument("empty input");
    if (folds < 2) throw std::invalid_argument("gate tuning: folds must be >= 2");
    if (samples.size() < static_cast<std::size_t>(folds))
        throw std::invalid_argument("insufficient data");

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(i)));
        std::swap(order[i], order[j]);
    }

    GateTuneResult result;
    for (double C : Cs) {
        for (double gamma : gammas) {
            std::size_t correct = 0, total = 0;
            for (int f = 0; f < folds; ++f) {
                std::vector<GateSample> train, test;
                for (std::size_t p = 0; p < order.size(); ++p) {
                    (static_cast<int>(p % static_cast<std::size_t>(folds)) == f ? test : train)
                        .push_back(samples[order[p]]);
                }
                if (test.empty()) continue;
                const GateModel m = train_gate(train, period, C, gamma);
                const GateEvaluation ev = evaluate_gate(m, test);
                correct += ev.correct;
                total += ev.n;
            }
            GateGridPoint pt;
            pt.C = C;
            pt.gamma = gamma;
            pt.cv_accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
            result.grid.push_back(pt);
            if (pt.cv_accuracy > result.cv_accuracy ||
                (result.grid.size() == 1)) {
                result.C = pt.C;
                result.gamma = pt.gamma;
                result.cv_accuracy = pt.cv_accuracy;
            }
        }
    }
    return result;
}

}  // namespace helioforge
