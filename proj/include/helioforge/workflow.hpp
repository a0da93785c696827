#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "helioforge/ar_model.hpp"
#include "helioforge/calendar.hpp"
#include "helioforge/ensemble.hpp"
#include "helioforge/evaluation.hpp"
#include "helioforge/forecast_matrix.hpp"
#include "helioforge/gate.hpp"
#include "helioforge/kvdoc.hpp"
#include "helioforge/model_io.hpp"
#include "helioforge/time_series.hpp"

namespace helioforge {

/// The nine predictor configurations.
///   SR-1 previous-day persistence of the radiation measurements
///   SR-2 weather-service forecast, held on the 15-minute grid
///   SR-3 basic ensemble over {service, ARI}
///   SR-4 time-order ensemble over {service, ARI}
///   SR-5 gate-routed time-order ensembles ES1/ES2 over {service, ARI}
///   GP-1 previous-day persistence of the production measurements
///   GP-2 ARIX driven by the raw service radiation forecast
///   GP-3 ARIX driven by the gated radiation prediction (SR-5)
///   GP-4 basic ensemble over {ARI, GP-3, GP-2}
inline const std::vector<std::string> kPredictorIds = {"SR-1", "SR-2", "SR-3", "SR-4", "SR-5",
                                                       "GP-1", "GP-2", "GP-3", "GP-4"};

inline std::string predictor_description(const std::string& id) {
    if (id == "SR-1") return "previous-day persistence of radiation";
    if (id == "SR-2") return "weather-service radiation forecast (zero-order hold)";
    if (id == "SR-3") return "basic ensemble {service, ARI}";
    if (id == "SR-4") return "time-order ensemble {service, ARI}";
    if (id == "SR-5") return "gated time-order ensembles ES1/ES2 {service, ARI}";
    if (id == "GP-1") return "previous-day persistence of production";
    if (id == "GP-2") return "ARIX with service radiation forecast as exogenous input";
    if (id == "GP-3") return "ARIX with gated radiation prediction as exogenous input";
    if (id == "GP-4") return "basic ensemble {ARI, ARIX-gated, ARIX-service}";
    throw std::invalid_argument("unknown predictor: " + id);
}

/// Gate input for one predicted instant: the service prediction minus the
/// measured value at the same instant one day earlier, scanning back whole
/// days across missing samples. Only measurements strictly before `origin`
/// are consulted; NaN when the input cannot be formed.
inline double gate_forecast_change(double service_pred, const TimeSeries& measured,
                                   UnixTime origin, UnixTime target) {
    if (is_missing(service_pred)) return kMissingValue;
    for (UnixTime t = target - 86400; t >= measured.start_time; t -= 86400) {
        if (t >= origin) continue;
        const std::int64_t idx = measured.index_of(t);
        if (idx >= 0 && measured.usable(static_cast<std::size_t>(idx)))
            return service_pred - measured.values[static_cast<std::size_t>(idx)];
    }
    return kMissingValue;
}

/// One gated prediction row: evaluate the gate per instant and take the ES1
/// (Good) or ES2 (Bad) combination. Instants whose gate input cannot be
/// formed route to ES2, consistent with the tie rule that indifference
/// prefers the ARI-leaning ensemble. `measured` supplies the previous-day
/// values; only samples strictly before `origin` are read.
inline std::vector<double> gated_sr_predict_row(const GateModel& gate, const EnsembleWeights& es1,
                                                const EnsembleWeights& es2,
                                                const std::vector<double>& service_pred,
                                                const std::vector<double>& ari_pred,
                                                const TimeSeries& measured, UnixTime origin) {
    if (gate.svm.support_vectors.empty()) throw std::invalid_argument("untrained gate");
    if (service_pred.size() != ari_pred.size()) throw std::invalid_argument("unaligned series");
    const std::vector<double> c1 = combine(es1, {service_pred, ari_pred});
    const std::vector<double> c2 = combine(es2, {service_pred, ari_pred});
    std::vector<double> out(service_pred.size(), kMissingValue);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const UnixTime target = origin + static_cast<std::int64_t>(k) * measured.step;
        const double fc = gate_forecast_change(service_pred[k], measured, origin, target);
        const bool good =
            !is_missing(fc) && gate.classify(fc, instant_of_day(target, measured.step)) > 0;
        out[k] = good ? c1[k] : c2[k];
    }
    return out;
}

/// Matrix form of the gated prediction: rows are matched across the service
/// and ARI matrices by origin.
inline ForecastMatrix gated_sr_predict(const GateModel& gate, const EnsembleWeights& es1,
                                       const EnsembleWeights& es2, const ForecastMatrix& service,
                                       const ForecastMatrix& ari, const TimeSeries& measured,
                                       const std::string& predictor_id = "SR-5") {
    service.validate();
    ari.validate();
    measured.validate();
    if (service.step != ari.step || service.horizon != ari.horizon)
        throw std::invalid_argument("incompatible steps");
    ForecastMatrix out;
    out.predictor_id = predictor_id;
    out.step = service.step;
    out.horizon = service.horizon;
    for (std::size_t i = 0; i < service.origins.size(); ++i) {
        const std::int64_t j = ari.find_origin(service.origins[i]);
        if (j < 0) continue;
        out.add_row(service.origins[i],
                    gated_sr_predict_row(gate, es1, es2, service.predictions[i],
                                         ari.predictions[static_cast<std::size_t>(j)], measured,
                                         service.origins[i]));
    }
    return out;
}

/// Everything fitted on one dataset: the three autoregressions, the gate,
/// and the five weight sets. Peaks are the full-record normalization
/// constants used by downstream RMSE reports.
struct PredictorStore {
    ModelParams sr_ari;            // preset sr-long
    ModelParams gp_ari;            // preset gp-ari
    ModelParams gp_arix;           // preset gp-arix, exogenous radiation
    GateModel gate;
    EnsembleWeights sr_basic;      // basic over {service, ARI}
    EnsembleWeights sr_timeorder;  // time-order over {service, ARI}
    EnsembleWeights es1;           // time-order, fitted on Good-labeled instants
    EnsembleWeights es2;           // time-order, fitted on Bad-labeled instants
    EnsembleWeights gp_basic;      // basic over {ARI, ARIX-gated, ARIX-service}
    double sr_peak = 0.0;
    double gp_peak = 0.0;
    int horizon = 96;
    std::int64_t step = 900;
};

struct FitConfig {
    int horizon = 96;
    /// Origin spacing (grid steps) for the ensemble-calibration matrices.
    /// Should divide the day length so every day-start origin is included
    /// (the gate is labeled from the day-start rows).
    int stride = 4;
    double gate_c = 10.0;
    double gate_gamma = 2.0;
    bool tune_gate = false;  // 5-fold cross-validated grid search for (C, gamma)
    std::uint64_t tune_seed = 1;
    double night_threshold = 0.0;
};

namespace detail {

/// Rows whose origin falls at the start of a civil day.
inline ForecastMatrix day_start_rows(const ForecastMatrix& m) {
    ForecastMatrix out;
    out.predictor_id = m.predictor_id;
    out.step = m.step;
    out.horizon = m.horizon;
    for (std::size_t i = 0; i < m.origins.size(); ++i)
        if (seconds_of_day(m.origins[i]) == 0) out.add_row(m.origins[i], m.predictions[i]);
    return out;
}

}  // namespace detail

/// Fit the full predictor stack. Autoregressions are fitted on the
/// calibration period; ensemble weights and the gate on forecast matrices
/// generated over the ensemble-calibration period with strictly-prefix
/// histories, with origins restricted so every predicted instant stays
/// inside that period. The gate is labeled from the day-start rows (one
/// day-ahead prediction per day); ES1/ES2 are fitted on the rows whose
/// target instant the gate labeling marked Good respectively Bad.
inline PredictorStore fit_store(const TimeSeries& sr, const TimeSeries& gp,
                                const ServiceFeed& feed, const DatasetSplit& split,
                                const FitConfig& cfg = {}) {
    sr.validate();
    gp.validate();
    if (!sr.same_grid(gp)) throw std::invalid_argument("unaligned series");
    split.validate();
    if (split.ensemble_calibration.end > sr.size())
        throw std::invalid_argument("split exceeds record");
    if (cfg.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (cfg.stride < 1) throw std::invalid_argument("stride must be >= 1");

    PredictorStore store;
    store.horizon = cfg.horizon;
    store.step = sr.step;
    store.sr_peak = sr.peak();
    store.gp_peak = gp.peak();

    const TimeSeries sr_cal = sr.slice(split.calibration);
    const TimeSeries gp_cal = gp.slice(split.calibration);
    store.sr_ari = fit_ar(sr_cal, lag_spec_preset("sr-long"));
    store.gp_ari = fit_ar(gp_cal, lag_spec_preset("gp-ari"));
    store.gp_arix = fit_ar(gp_cal, lag_spec_preset("gp-arix"), &sr_cal);

    // Ensemble-calibration origins: day-start aligned, every predicted
    // instant inside the period (no bleed into the validation period).
    const IndexRange ens = split.ensemble_calibration;
    if (ens.length() <= static_cast<std::size_t>(cfg.horizon))
        throw std::invalid_argument("insufficient data");
    std::size_t first = ens.begin;
    while (first < ens.end && seconds_of_day(sr.time_at(first)) != 0) ++first;
    const std::size_t last = ens.end - static_cast<std::size_t>(cfg.horizon) + 1;
    if (first >= last) throw std::invalid_argument("insufficient data");
    const IndexRange origins{first, last};

    BacktestOptions bo;
    bo.horizon = cfg.horizon;
    bo.stride = cfg.stride;

    const PredictorFn svc_fn = [&feed, &cfg](const TimeSeries& hist, UnixTime origin) {
        return feed.predict(origin, cfg.horizon, hist.step);
    };
    const PredictorFn sr_ari_fn = [&store, &cfg](const TimeSeries& hist, UnixTime) {
        return predict_recursive(store.sr_ari, hist, nullptr, cfg.horizon);
    };
    bo.predictor_id = "SR-2";
    const BacktestResult svc_bt = rolling_backtest(svc_fn, sr, origins, bo);
    bo.predictor_id = "sr-ari";
    const BacktestResult sr_ari_bt = rolling_backtest(sr_ari_fn, sr, origins, bo);

    const std::vector<const ForecastMatrix*> sr_comps{&svc_bt.matrix, &sr_ari_bt.matrix};
    EnsembleFitOptions eo;
    eo.night_threshold = cfg.night_threshold;
    store.sr_basic = fit_weights(sr_comps, sr, EnsembleFramework::Basic, eo);
    store.sr_timeorder = fit_weights(sr_comps, sr, EnsembleFramework::TimeOrder, eo);

    const ForecastMatrix svc_day = detail::day_start_rows(svc_bt.matrix);
    const ForecastMatrix ari_day = detail::day_start_rows(sr_ari_bt.matrix);
    const std::vector<GateSample> samples = label_gate_samples(svc_day, ari_day, sr);
    const int period = static_cast<int>(86400 / sr.step);
    if (cfg.tune_gate) {
        const GateTuneResult tuned = tune_gate(samples, period, {0.1, 1.0, 10.0, 100.0},
                                               {0.01, 0.1, 1.0, 10.0}, 5, cfg.tune_seed);
        store.gate = train_gate(samples, period, tuned.C, tuned.gamma);
    } else {
        store.gate = train_gate(samples, period, cfg.gate_c, cfg.gate_gamma);
    }

    // ES1/ES2 row sets are keyed by target instant: the gate labeling sees
    // each instant once (day-start rows), the ensemble matrices many times.
    std::unordered_set<std::int64_t> good_targets, bad_targets;
    for (const GateSample& s : samples) {
        const std::int64_t t = s.origin + static_cast<std::int64_t>(s.lead - 1) * sr.step;
        (s.label > 0 ? good_targets : bad_targets).insert(t);
    }
    const std::int64_t step = sr.step;
    EnsembleFitOptions e1 = eo;
    e1.row_filter = [targets = std::move(good_targets), step](UnixTime origin, int lead) {
        return targets.count(origin + static_cast<std::int64_t>(lead - 1) * step) > 0;
    };
    store.es1 = fit_weights(sr_comps, sr, EnsembleFramework::TimeOrder, e1);
    EnsembleFitOptions e2 = eo;
    e2.row_filter = [targets = std::move(bad_targets), step](UnixTime origin, int lead) {
        return targets.count(origin + static_cast<std::int64_t>(lead - 1) * step) > 0;
    };
    store.es2 = fit_weights(sr_comps, sr, EnsembleFramework::TimeOrder, e2);

    // Production components. The exogenous radiation record is consumed
    // strictly as a prefix aligned with the production history, so the same
    // no-lookahead discipline holds for it.
    const PredictorFn gp_ari_fn = [&store, &cfg](const TimeSeries& hist, UnixTime) {
        return predict_recursive(store.gp_ari, hist, nullptr, cfg.horizon);
    };
    const PredictorFn gp_svc_fn = [&store, &sr, &feed, &cfg](const TimeSeries& hist,
                                                             UnixTime origin) {
        TimeSeries exo = sr.prefix(hist.size());
        for (double v : feed.predict(origin, cfg.horizon, hist.step))
            exo.push_back(v, is_missing(v) ? Flag::Missing : Flag::Valid);
        return predict_recursive(store.gp_arix, hist, &exo, cfg.horizon);
    };
    const PredictorFn gp_gated_fn = [&store, &sr, &feed, &cfg](const TimeSeries& hist,
                                                               UnixTime origin) {
        TimeSeries exo = sr.prefix(hist.size());
        const std::vector<double> svc = feed.predict(origin, cfg.horizon, hist.step);
        const std::vector<double> ari = predict_recursive(store.sr_ari, exo, nullptr, cfg.horizon);
        const std::vector<double> gated =
            gated_sr_predict_row(store.gate, store.es1, store.es2, svc, ari, exo, origin);
        for (double v : gated) exo.push_back(v, is_missing(v) ? Flag::Missing : Flag::Valid);
        return predict_recursive(store.gp_arix, hist, &exo, cfg.horizon);
    };
    bo.predictor_id = "gp-ari";
    const BacktestResult gp_ari_bt = rolling_backtest(gp_ari_fn, gp, origins, bo);
    bo.predictor_id = "GP-3";
    const BacktestResult gp_gated_bt = rolling_backtest(gp_gated_fn, gp, origins, bo);
    bo.predictor_id = "GP-2";
    const BacktestResult gp_svc_bt = rolling_backtest(gp_svc_fn, gp, origins, bo);

    // Component order pinned: {ARI, ARIX-gated, ARIX-service}.
    const std::vector<const ForecastMatrix*> gp_comps{&gp_ari_bt.matrix, &gp_gated_bt.matrix,
                                                      &gp_svc_bt.matrix};
    store.gp_basic = fit_weights(gp_comps, gp, EnsembleFramework::Basic, eo);
    return store;
}

/// Build one of the nine predictors as a PredictorFn. The returned closure
/// keeps references to `store`, `feed`, and `sr`; all three must outlive it.
/// For the production predictors, the history argument is the production
/// record and `sr` supplies the radiation record (read strictly as a prefix
/// aligned with the history, plus forecasts beyond it); for the radiation
/// predictors, the history argument is the radiation record itself.
inline PredictorFn make_predictor(const PredictorStore& store, const ServiceFeed& feed,
                                  const TimeSeries& sr, const std::string& id, int horizon = 0) {
    const int h = horizon > 0 ? horizon : store.horizon;
    if (86400 % store.step != 0) throw std::invalid_argument("step must divide one day");
    const int day = static_cast<int>(86400 / store.step);
    if (id == "SR-1" || id == "GP-1")
        return [day, h](const TimeSeries& hist, UnixTime) {
            return persistence_predict(hist, day, h);
        };
    if (id == "SR-2")
        return [&feed, h](const TimeSeries& hist, UnixTime origin) {
            return feed.predict(origin, h, hist.step);
        };
    if (id == "SR-3" || id == "SR-4" || id == "SR-5") {
        return [&store, &feed, h, id](const TimeSeries& hist, UnixTime origin) {
            const std::vector<double> svc = feed.predict(origin, h, hist.step);
            const std::vector<double> ari = predict_recursive(store.sr_ari, hist, nullptr, h);
            if (id == "SR-3") return combine(store.sr_basic, {svc, ari});
            if (id == "SR-4") return combine(store.sr_timeorder, {svc, ari});
            return gated_sr_predict_row(store.gate, store.es1, store.es2, svc, ari, hist, origin);
        };
    }
    if (id == "GP-2")
        return [&store, &feed, &sr, h](const TimeSeries& hist, UnixTime origin) {
            TimeSeries exo = sr.prefix(hist.size());
            for (double v : feed.predict(origin, h, hist.step))
                exo.push_back(v, is_missing(v) ? Flag::Missing : Flag::Valid);
            return predict_recursive(store.gp_arix, hist, &exo, h);
        };
    if (id == "GP-3" || id == "GP-4")
        return [&store, &feed, &sr, h, id](const TimeSeries& hist, UnixTime origin) {
            TimeSeries sr_hist = sr.prefix(hist.size());
            const std::vector<double> svc = feed.predict(origin, h, hist.step);
            const std::vector<double> sr_ari =
                predict_recursive(store.sr_ari, sr_hist, nullptr, h);
            const std::vector<double> gated = gated_sr_predict_row(
                store.gate, store.es1, store.es2, svc, sr_ari, sr_hist, origin);
            TimeSeries exo_gated = sr_hist;
            for (double v : gated) exo_gated.push_back(v, is_missing(v) ? Flag::Missing : Flag::Valid);
            const std::vector<double> via_gated =
                predict_recursive(store.gp_arix, hist, &exo_gated, h);
            if (id == "GP-3") return via_gated;
            TimeSeries exo_svc = std::move(sr_hist);
            for (double v : svc) exo_svc.push_back(v, is_missing(v) ? Flag::Missing : Flag::Valid);
            const std::vector<double> via_svc =
                predict_recursive(store.gp_arix, hist, &exo_svc, h);
            const std::vector<double> via_ari = predict_recursive(store.gp_ari, hist, nullptr, h);
            return combine(store.gp_basic, {via_ari, via_gated, via_svc});
        };
    throw std::invalid_argument("unknown predictor: " + id);
}

/// Whether the predictor consumes the production record (true) or the
/// radiation record (false) as its history argument.
inline bool predictor_uses_gp(const std::string& id) {
    if (id.rfind("GP-", 0) == 0) return true;
    if (id.rfind("SR-", 0) == 0) return false;
    throw std::invalid_argument("unknown predictor: " + id);
}

inline void save_store(const PredictorStore& s, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto p = [&dir](const char* name) { return (fs::path(dir) / name).string(); };
    save_model(s.sr_ari, p("sr-ari.model"));
    save_model(s.gp_ari, p("gp-ari.model"));
    save_model(s.gp_arix, p("gp-arix.model"));
    save_gate(s.gate, p("gate.model"));
    save_weights(s.sr_basic, p("sr-basic.weights"));
    save_weights(s.sr_timeorder, p("sr-timeorder.weights"));
    save_weights(s.es1, p("es1.weights"));
    save_weights(s.es2, p("es2.weights"));
    save_weights(s.gp_basic, p("gp-basic.weights"));
    KvDoc meta;
    meta.set("kind", "predictor-store");
    meta.set_double("sr_peak", s.sr_peak);
    meta.set_double("gp_peak", s.gp_peak);
    meta.set_int("horizon", s.horizon);
    meta.set_int("step", s.step);
    meta.save(p("store.meta"));
}

inline PredictorStore load_store(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto p = [&dir](const char* name) { return (fs::path(dir) / name).string(); };
    const KvDoc meta = KvDoc::load(p("store.meta"));
    if (meta.get_or("kind", "") != "predictor-store")
        throw std::runtime_error("not a predictor-store directory: " + dir);
    PredictorStore s;
    s.sr_peak = meta.get_double("sr_peak");
    s.gp_peak = meta.get_double("gp_peak");
    s.horizon = static_cast<int>(meta.get_int("horizon"));
    s.step = meta.get_int("step");
    s.sr_ari = load_model(p("sr-ari.model"));
    s.gp_ari = load_model(p("gp-ari.model"));
    s.gp_arix = load_model(p("gp-arix.model"));
    s.gate = load_gate(p("gate.model"));
    s.sr_basic = load_weights(p("sr-basic.weights"));
    s.sr_timeorder = load_weights(p("sr-timeorder.weights"));
    s.es1 = load_weights(p("es1.weights"));
    s.es2 = load_weights(p("es2.weights"));
    s.gp_basic = load_weights(p("gp-basic.weights"));
    return s;
}

}  // namespace helioforge
