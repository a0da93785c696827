// helioforge: command-line front end for the forecasting toolkit.
// Subcommands cover the offline phase (synth, clean, fit, fit-store,
// gate-train, gate-eval, ensemble-fit), ad-hoc prediction and scoring
// (predict, evaluate, diagnose, impact), and the online phase (serve).

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "helioforge/ar_model.hpp"
#include "helioforge/calendar.hpp"
#include "helioforge/cleaning.hpp"
#include "helioforge/csv.hpp"
#include "helioforge/ensemble.hpp"
#include "helioforge/evaluation.hpp"
#include "helioforge/gate.hpp"
#include "helioforge/impact.hpp"
#include "helioforge/model_io.hpp"
#include "helioforge/seasonal.hpp"
#include "helioforge/service.hpp"
#include "helioforge/synth.hpp"
#include "helioforge/workflow.hpp"

// After the numeric headers: httplib's system includes leak macros that
// corrupt Eigen's internals when seen first.
#include "CLI11.hpp"
#include "httplib.h"

namespace hf = helioforge;
namespace fs = std::filesystem;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }

hf::UnixTime parse_time_arg(const std::string& s, const char* what) {
    try {
        return hf::parse_iso8601(s);
    } catch (const std::exception&) {
        throw CLI::ValidationError(std::string(what) + ": expected ISO-8601 UTC, got '" + s + "'");
    }
}

std::size_t count_flag(const hf::TimeSeries& ts, hf::Flag f) {
    std::size_t n = 0;
    for (hf::Flag g : ts.flags) n += g == f;
    return n;
}

// ---------------------------------------------------------------- synth ---

int run_synth(const hf::SynthConfig& cfg, const std::string& out_dir) {
    const hf::SynthData data = hf::generate(cfg);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    hf::write_series_csv((dir / "sr.csv").string(), data.sr);
    hf::write_series_csv((dir / "gp.csv").string(), data.gp);
    hf::write_service_csv((dir / "service.csv").string(), data.service);

    int clear = 0, cloudy = 0, mixed = 0;
    for (hf::Regime r : data.day_regimes) {
        if (r == hf::Regime::Clear) ++clear;
        else if (r == hf::Regime::Cloudy) ++cloudy;
        else ++mixed;
    }
    std::printf("synth: %d days (%d clear, %d cloudy, %d mixed), seed %llu\n", cfg.days, clear,
                cloudy, mixed, static_cast<unsigned long long>(cfg.seed));
    std::printf("  sr.csv      %zu samples, peak %.1f\n", data.sr.size(), data.sr.peak());
    std::printf("  gp.csv      %zu samples, peak %.1f\n", data.gp.size(), data.gp.peak());
    std::printf("  service.csv %zu issues\n", data.service.issues.size());
    return 0;
}

// ---------------------------------------------------------------- clean ---

struct CleanArgs {
    std::string in, out, cross_sr;
    double snap = 1.0;
    std::int64_t step_hint = 0;
    int window = 2;
    double threshold = 3.0;
    int max_gap = 3;
    std::int64_t resample_step = 0;
    double gp_high = -1.0, sr_low = -1.0, gp_low = -1.0, sr_high = -1.0;
};

int run_clean(const CleanArgs& a) {
    hf::TimeSeries ts = hf::read_series_csv(a.in, a.snap, a.step_hint);
    const std::size_t usable_in = ts.usable_count();

    if (ts.size() >= 2 * static_cast<std::size_t>(a.window) + 1)
        ts = hf::detect_outliers_neighbor(ts, a.window, a.threshold);
    std::size_t outliers = count_flag(ts, hf::Flag::Outlier);

    if (!a.cross_sr.empty()) {
        const hf::TimeSeries sr = hf::read_series_csv(a.cross_sr, a.snap, a.step_hint);
        if (sr.step != ts.step)
            throw std::runtime_error("cross-match: step mismatch between inputs");
        const hf::UnixTime lo = std::max(sr.start_time, ts.start_time);
        const hf::UnixTime hi = std::min(sr.end_time(), ts.end_time());
        if (hi <= lo || (lo - ts.start_time) % ts.step != 0 || (lo - sr.start_time) % sr.step != 0)
            throw std::runtime_error("cross-match: inputs do not overlap on a shared grid");
        const auto ta = static_cast<std::size_t>((lo - ts.start_time) / ts.step);
        const auto sa = static_cast<std::size_t>((lo - sr.start_time) / sr.step);
        const auto n = static_cast<std::size_t>((hi - lo) / ts.step);
        hf::TimeSeries gp_part = ts.slice({ta, ta + n});
        const hf::TimeSeries sr_part = sr.slice({sa, sa + n});
        hf::CrossMatchThresholds th = hf::CrossMatchThresholds::from_peak(gp_part.peak());
        if (a.gp_high >= 0) th.gp_high = a.gp_high;
        if (a.sr_low >= 0) th.sr_low = a.sr_low;
        if (a.gp_low >= 0) th.gp_low = a.gp_low;
        if (a.sr_high >= 0) th.sr_high = a.sr_high;
        gp_part = hf::cross_match_outliers(gp_part, sr_part, th.gp_high, th.sr_low, th.gp_low,
                                           th.sr_high);
        for (std::size_t i = 0; i < n; ++i) ts.flags[ta + i] = gp_part.flags[i];
        outliers = count_flag(ts, hf::Flag::Outlier);
    }

    ts = hf::fill_gaps(ts, a.max_gap);
    const std::size_t filled = count_flag(ts, hf::Flag::Interpolated);
    if (a.resample_step > 0) ts = hf::resample(ts, a.resample_step);

    hf::write_series_csv(a.out, ts);
    std::printf("clean: %zu samples in (%zu usable) -> %zu out (%zu usable)\n", ts.size(),
                usable_in, ts.size(), ts.usable_count());
    std::printf("  outliers flagged: %zu, gaps filled: %zu\n", outliers, filled);
    return 0;
}

// ------------------------------------------------------------------ fit ---

hf::LagSpec lag_spec_from_arg(const std::string& spec_arg) {
    if (fs::exists(spec_arg)) {
        const hf::KvDoc doc = hf::KvDoc::load(spec_arg);
        hf::LagSpec spec;
        spec.ar_lags = doc.get_ints("ar_lags");
        if (doc.has("exo_lags")) spec.exo_lags = doc.get_ints("exo_lags");
        spec.seasonal_lag = static_cast<int>(doc.get_int_or("seasonal_lag", spec.seasonal_lag));
        spec.validate();
        return spec;
    }
    return hf::lag_spec_preset(spec_arg);
}

int run_fit(const std::string& target, std::string spec_arg, const std::string& in,
            const std::string& exo_path, const std::string& out, double snap) {
    if (spec_arg.empty()) {
        if (target == "sr") spec_arg = "sr-long";
        else spec_arg = exo_path.empty() ? "gp-ari" : "gp-arix";
    }
    const hf::LagSpec spec = lag_spec_from_arg(spec_arg);
    const hf::TimeSeries series = hf::read_series_csv(in, snap);
    hf::TimeSeries exo;
    if (!exo_path.empty()) exo = hf::read_series_csv(exo_path, snap);
    if (!spec.exo_lags.empty() && exo_path.empty())
        throw std::runtime_error("spec has exogenous lags; provide --exo");

    const hf::ModelParams model = hf::fit_ar(series, spec, exo_path.empty() ? nullptr : &exo);
    hf::save_model(model, out);
    std::printf("fit: %s, %zu AR + %zu exogenous coefficients\n", spec_arg.c_str(),
                model.ar_coeffs.size(), model.exo_coeffs.size());
    std::printf("  rows %zu, residual rms %.4f, condition %.3g\n", model.fit_rows,
                model.fit_residual_rms, model.regressor_condition);
    return 0;
}

// ------------------------------------------------------------ fit-store ---

struct FitStoreArgs {
    std::string sr, gp, service, out;
    double cal_frac = 0.5, ens_frac = 0.25;
    hf::FitConfig cfg;
    double snap = 1.0;
};

int run_fit_store(const FitStoreArgs& a) {
    const hf::TimeSeries sr = hf::read_series_csv(a.sr, a.snap);
    const hf::TimeSeries gp = hf::read_series_csv(a.gp, a.snap);
    const hf::ServiceFeed feed = hf::read_service_csv(a.service);
    const hf::DatasetSplit split = hf::DatasetSplit::by_fraction(sr.size(), a.cal_frac, a.ens_frac);

    const hf::PredictorStore store = hf::fit_store(sr, gp, feed, split, a.cfg);
    fs::create_directories(a.out);
    hf::save_store(store, a.out);

    std::printf("fit-store: calibration [%zu, %zu), ensemble [%zu, %zu)\n",
                split.calibration.begin, split.calibration.end, split.ensemble_calibration.begin,
                split.ensemble_calibration.end);
    std::printf("  gate: %zu support vectors (C=%g, gamma=%g)\n",
                store.gate.svm.support_vectors.size(), store.gate.svm.C, store.gate.svm.gamma);
    std::printf("  wrote predictor store to %s\n", a.out.c_str());
    return 0;
}

// ----------------------------------------------------------- gate-train ---

struct GateTrainArgs {
    std::string service, reference, measured, out;
    double c = 10.0, gamma = 2.0;
    bool tune = false;
    int folds = 5;
    std::uint64_t tune_seed = 0;
    std::int64_t fc_step = 900;
    double snap = 1.0;
};

int run_gate_train(const GateTrainArgs& a) {
    const hf::ForecastMatrix svc = hf::read_forecast_csv(a.service, a.fc_step);
    const hf::ForecastMatrix ref = hf::read_forecast_csv(a.reference, a.fc_step);
    const hf::TimeSeries measured = hf::read_series_csv(a.measured, a.snap);
    const std::vector<hf::GateSample> samples = hf::label_gate_samples(svc, ref, measured);
    const int period = static_cast<int>(86400 / measured.step);

    double C = a.c, gamma = a.gamma;
    if (a.tune) {
        const hf::GateTuneResult tuned =
            hf::tune_gate(samples, period, {0.1, 1.0, 10.0, 100.0}, {0.01, 0.1, 1.0, 10.0},
                          a.folds, a.tune_seed);
        C = tuned.C;
        gamma = tuned.gamma;
        std::printf("gate-train: grid search (%d-fold)\n", a.folds);
        for (const auto& pt : tuned.grid)
            std::printf("  C=%-6g gamma=%-6g cv=%.4f\n", pt.C, pt.gamma, pt.cv_accuracy);
        std::printf("  best C=%g gamma=%g cv=%.4f\n", C, gamma, tuned.cv_accuracy);
    }
    const hf::GateModel gate = hf::train_gate(samples, period, C, gamma);
    hf::save_gate(gate, a.out);
    const hf::GateEvaluation ev = hf::evaluate_gate(gate, samples);
    std::printf("gate-train: %zu samples (%zu good, %zu bad), train accuracy %.4f\n", ev.n,
                ev.good_total, ev.bad_total, ev.accuracy());
    std::printf("  %zu support vectors, %s\n", gate.svm.support_vectors.size(),
                gate.svm.converged ? "converged" : "iteration cap hit");
    return 0;
}

int run_gate_eval(const std::string& gate_path, const GateTrainArgs& a,
                  const std::string& report) {
    const hf::GateModel gate = hf::load_gate(gate_path);
    const hf::ForecastMatrix svc = hf::read_forecast_csv(a.service, a.fc_step);
    const hf::ForecastMatrix ref = hf::read_forecast_csv(a.reference, a.fc_step);
    const hf::TimeSeries measured = hf::read_series_csv(a.measured, a.snap);
    const std::vector<hf::GateSample> samples = hf::label_gate_samples(svc, ref, measured);
    const hf::GateEvaluation ev = hf::evaluate_gate(gate, samples);
    std::printf("gate-eval: %zu samples, accuracy %.4f (%zu good, %zu bad)\n", ev.n, ev.accuracy(),
                ev.good_total, ev.bad_total);
    if (!report.empty()) {
        std::ofstream out(report);
        if (!out) throw std::runtime_error("cannot write " + report);
        out << "n,correct,accuracy,good_total,bad_total\n"
            << ev.n << ',' << ev.correct << ',' << ev.accuracy() << ',' << ev.good_total << ','
            << ev.bad_total << '\n';
    }
    return 0;
}

// --------------------------------------------------------- ensemble-fit ---

struct EnsembleFitArgs {
    std::string framework = "basic";
    std::string measured, out;
    std::vector<std::string> components;
    bool gated = false;
    bool include_night = false;
    double night_threshold = 0.0;
    std::int64_t fc_step = 900;
    double snap = 1.0;
};

int run_ensemble_fit(const EnsembleFitArgs& a) {
    const hf::EnsembleFramework fw = hf::framework_from_name(a.framework);
    const hf::TimeSeries measured = hf::read_series_csv(a.measured, a.snap);
    std::vector<hf::ForecastMatrix> mats;
    mats.reserve(a.components.size());
    for (const std::string& p : a.components) mats.push_back(hf::read_forecast_csv(p, a.fc_step));
    std::vector<const hf::ForecastMatrix*> ptrs;
    for (const auto& m : mats) ptrs.push_back(&m);

    hf::EnsembleFitOptions opts;
    opts.exclude_night = !a.include_night;
    opts.night_threshold = a.night_threshold;

    if (!a.gated) {
        const hf::EnsembleWeights w = hf::fit_weights(ptrs, measured, fw, opts);
        hf::save_weights(w, a.out);
        std::printf("ensemble-fit: %s, %zu components, J = %.6f\n", a.framework.c_str(),
                    ptrs.size(), hf::training_objective(ptrs, measured, w, opts));
        return 0;
    }

    // Gated pair: component 0 is the service route, component 1 the
    // reference; rows split by which side the gate label favors.
    if (ptrs.size() != 2)
        throw std::runtime_error("--gated needs exactly two components (service, reference)");
    const std::vector<hf::GateSample> samples =
        hf::label_gate_samples(*ptrs[0], *ptrs[1], measured);
    std::set<hf::UnixTime> good_targets, bad_targets;
    for (const hf::GateSample& s : samples)
        (s.label > 0 ? good_targets : bad_targets)
            .insert(s.origin + static_cast<hf::UnixTime>(s.lead - 1) * measured.step);

    const auto filter_for = [&measured](const std::set<hf::UnixTime>& targets) {
        return [targets, step = measured.step](hf::UnixTime origin, int lead) {
            return targets.count(origin + static_cast<hf::UnixTime>(lead - 1) * step) > 0;
        };
    };
    hf::EnsembleFitOptions o1 = opts, o2 = opts;
    o1.row_filter = filter_for(good_targets);
    o2.row_filter = filter_for(bad_targets);
    const hf::EnsembleWeights es1 = hf::fit_weights(ptrs, measured, fw, o1);
    const hf::EnsembleWeights es2 = hf::fit_weights(ptrs, measured, fw, o2);
    hf::save_weights(es1, a.out + ".es1");
    hf::save_weights(es2, a.out + ".es2");
    std::printf("ensemble-fit: gated %s pair (%zu good rows, %zu bad rows)\n", a.framework.c_str(),
                good_targets.size(), bad_targets.size());
    std::printf("  J(es1) = %.6f -> %s.es1\n",
                hf::training_objective(ptrs, measured, es1, o1), a.out.c_str());
    std::printf("  J(es2) = %.6f -> %s.es2\n",
                hf::training_objective(ptrs, measured, es2, o2), a.out.c_str());
    return 0;
}

// -------------------------------------------------------------- predict ---

struct PredictArgs {
    std::string predictor, store, sr, gp, service, out;
    std::vector<std::string> origins;
    int horizon = 0;
    double snap = 1.0;
};

int run_predict(const PredictArgs& a) {
    const hf::PredictorStore store = hf::load_store(a.store);
    const hf::TimeSeries sr = hf::read_series_csv(a.sr, a.snap);
    hf::TimeSeries gp;
    const bool uses_gp = hf::predictor_uses_gp(a.predictor);
    if (uses_gp) {
        if (a.gp.empty()) throw std::runtime_error(a.predictor + " needs --gp");
        gp = hf::read_series_csv(a.gp, a.snap);
        if (!gp.same_grid(sr)) throw std::runtime_error("sr and gp grids differ");
    }
    hf::ServiceFeed feed;
    if (!a.service.empty()) feed = hf::read_service_csv(a.service);

    const int horizon = a.horizon > 0 ? a.horizon : store.horizon;
    const hf::PredictorFn fn = hf::make_predictor(store, feed, sr, a.predictor, horizon);
    const hf::TimeSeries& base = uses_gp ? gp : sr;

    hf::ForecastMatrix fm;
    fm.predictor_id = a.predictor;
    fm.step = base.step;
    fm.horizon = horizon;
    for (const std::string& s : a.origins) {
        const hf::UnixTime origin = parse_time_arg(s, "--origin");
        const std::int64_t idx = base.index_of(origin);
        if (idx < 0) throw std::runtime_error("origin off the measurement grid: " + s);
        fm.add_row(origin, fn(base.prefix(static_cast<std::size_t>(idx)), origin));
    }
    hf::write_forecast_csv(a.out, fm);
    std::printf("predict: %s, %zu origin(s), horizon %d -> %s\n", a.predictor.c_str(), fm.size(),
                horizon, a.out.c_str());
    return 0;
}

// ------------------------------------------------------------- evaluate ---

struct EvaluateArgs {
    std::vector<std::string> predictors;
    std::string store, sr, gp, service, from, to, report, profile;
    int stride = 1;
    int short_h = 12;
    int medium_h = 96;
    bool daylight_only = false;
    double snap = 1.0;
};

int run_evaluate(const EvaluateArgs& a) {
    const hf::PredictorStore store = hf::load_store(a.store);
    const hf::TimeSeries sr = hf::read_series_csv(a.sr, a.snap);
    hf::TimeSeries gp;
    if (!a.gp.empty()) {
        gp = hf::read_series_csv(a.gp, a.snap);
        if (!gp.same_grid(sr)) throw std::runtime_error("sr and gp grids differ");
    }
    hf::ServiceFeed feed;
    if (!a.service.empty()) feed = hf::read_service_csv(a.service);

    struct Row {
        std::string id;
        hf::BacktestResult short_r, medium_r;
    };
    std::vector<Row> rows;
    for (const std::string& id : a.predictors) {
        const bool uses_gp = hf::predictor_uses_gp(id);
        if (uses_gp && gp.empty()) throw std::runtime_error(id + " needs --gp");
        const hf::TimeSeries& measured = uses_gp ? gp : sr;

        hf::IndexRange range;
        const std::int64_t i_from = measured.index_of(parse_time_arg(a.from, "--from"));
        if (i_from < 0) throw std::runtime_error("--from is off the measurement grid");
        range.begin = static_cast<std::size_t>(i_from);
        if (a.to.empty()) {
            range.end = measured.size() >= static_cast<std::size_t>(a.medium_h)
                            ? measured.size() - static_cast<std::size_t>(a.medium_h) + 1
                            : range.begin;
        } else {
            const std::int64_t i_to = measured.index_of(parse_time_arg(a.to, "--to"));
            if (i_to < 0) throw std::runtime_error("--to is off the measurement grid");
            range.end = static_cast<std::size_t>(i_to);
        }

        Row row;
        row.id = id;
        for (const int h : {a.short_h, a.medium_h}) {
            hf::BacktestOptions opts;
            opts.horizon = h;
            opts.stride = a.stride;
            opts.daylight_only = a.daylight_only;
            opts.normalization_peak = measured.peak();
            opts.predictor_id = id;
            const hf::PredictorFn fn = hf::make_predictor(store, feed, sr, id, h);
            hf::BacktestResult r = hf::rolling_backtest(fn, measured, range, opts);
            (h == a.short_h ? row.short_r : row.medium_r) = std::move(r);
        }
        rows.push_back(std::move(row));
        std::printf("%-6s rmse_s %7.3f%%  rmse_m %7.3f%%  (%zu origins)  %s\n", id.c_str(),
                    rows.back().short_r.mean_rmse, rows.back().medium_r.mean_rmse,
                    rows.back().medium_r.origins.size(), hf::predictor_description(id).c_str());
    }

    if (!a.report.empty()) {
        std::ofstream out(a.report);
        if (!out) throw std::runtime_error("cannot write " + a.report);
        out << "predictor,description,rmse_short_pct,rmse_medium_pct,origins\n";
        for (const Row& r : rows)
            out << r.id << ",\"" << hf::predictor_description(r.id) << "\"," << r.short_r.mean_rmse
                << ',' << r.medium_r.mean_rmse << ',' << r.medium_r.origins.size() << '\n';
    }
    if (!a.profile.empty()) {
        std::ofstream out(a.profile);
        if (!out) throw std::runtime_error("cannot write " + a.profile);
        out << "predictor,lead,rmse_pct\n";
        for (const Row& r : rows)
            for (std::size_t k = 0; k < r.medium_r.lead_rmse.size(); ++k)
                out << r.id << ',' << k + 1 << ',' << r.medium_r.lead_rmse[k] << '\n';
    }
    return 0;
}

// --------------------------------------------------------------- impact ---

struct ImpactArgs {
    std::string in, day, config, summary, trace_dir;
    hf::ImpactStudyConfig cfg;
    bool targets_given = false;
    double snap = 1.0;
};

std::vector<double> impact_day_values(const ImpactArgs& a) {
    if (a.in.empty()) {
        // Built-in fallback: the first clear day of the default synthetic
        // world, so the study runs without external data.
        hf::SynthConfig scfg;
        scfg.days = 30;
        const hf::SynthData data = hf::generate(scfg);
        const int per_day = static_cast<int>(86400 / scfg.step);
        for (std::size_t d = 0; d < data.day_regimes.size(); ++d) {
            if (data.day_regimes[d] != hf::Regime::Clear) continue;
            std::vector<double> day(static_cast<std::size_t>(per_day));
            for (int i = 0; i < per_day; ++i)
                day[static_cast<std::size_t>(i)] =
                    data.gp.values[d * static_cast<std::size_t>(per_day) +
                                   static_cast<std::size_t>(i)];
            std::printf("impact: no --in, using synthetic clear day %zu\n", d);
            return day;
        }
        throw std::runtime_error("synthetic fallback produced no clear day");
    }
    hf::TimeSeries gp = hf::read_series_csv(a.in, a.snap);
    std::size_t begin = 0, end = gp.size();
    if (!a.day.empty()) {
        const hf::UnixTime t0 = parse_time_arg(a.day, "--day");
        const std::int64_t i0 = gp.index_of(t0);
        if (i0 < 0) throw std::runtime_error("--day is off the measurement grid");
        begin = static_cast<std::size_t>(i0);
        end = std::min(gp.size(), begin + static_cast<std::size_t>(86400 / gp.step));
    }
    std::vector<double> day;
    for (std::size_t i = begin; i < end; ++i)
        day.push_back(gp.usable(i) ? gp.values[i] : 0.0);
    if (day.empty()) throw std::runtime_error("empty input");
    return day;
}

int run_impact(ImpactArgs a) {
    if (!a.config.empty()) {
        const hf::KvDoc doc = hf::KvDoc::load(a.config);
        hf::EssState& e = a.cfg.ess;
        e.energy = doc.get_double_or("ess_energy", e.energy);
        e.power_limit = doc.get_double_or("ess_power_limit", e.power_limit);
        e.e_min = doc.get_double_or("ess_e_min", e.e_min);
        e.e_max = doc.get_double_or("ess_e_max", e.e_max);
        e.efficiency = doc.get_double_or("ess_efficiency", e.efficiency);
        a.cfg.tariff = doc.get_double_or("tariff", a.cfg.tariff);
        a.cfg.penalty_rate = doc.get_double_or("penalty_rate", a.cfg.penalty_rate);
        a.cfg.step_hours = doc.get_double_or("step_hours", a.cfg.step_hours);
        a.cfg.seeds = static_cast<int>(doc.get_int_or("seeds", a.cfg.seeds));
        a.cfg.seed_base = static_cast<std::uint64_t>(doc.get_int_or("seed_base", 1));
        a.cfg.normalization_peak =
            doc.get_double_or("normalization_peak", a.cfg.normalization_peak);
    }
    const std::vector<double> actual = impact_day_values(a);
    const std::vector<hf::ImpactScenarioResult> results = hf::run_impact_study(actual, a.cfg);

    std::printf("impact: %d seeds per target, %zu steps/day\n", a.cfg.seeds, actual.size());
    std::printf("%10s %10s %12s %10s %10s %10s\n", "target_pct", "snr_db", "achieved_pct",
                "trading", "charge", "benefit");
    for (const auto& r : results)
        std::printf("%10.2f %10.2f %12.2f %10.2f %10.2f %10.2f\n", r.target_rmse, r.snr_db,
                    r.achieved_rmse, r.mean.trading, r.mean.charge, r.mean.benefit);

    if (!a.summary.empty()) {
        std::ofstream out(a.summary);
        if (!out) throw std::runtime_error("cannot write " + a.summary);
        out << "target_rmse_pct,snr_db,achieved_rmse_pct,trading,charge,benefit\n";
        for (const auto& r : results)
            out << r.target_rmse << ',' << r.snr_db << ',' << r.achieved_rmse << ','
                << r.mean.trading << ',' << r.mean.charge << ',' << r.mean.benefit << '\n';
    }
    if (!a.trace_dir.empty()) {
        fs::create_directories(a.trace_dir);
        for (const auto& r : results) {
            hf::ImpactScenario sc;
            sc.actual_gp = actual;
            sc.dayahead_gp = hf::emulate_prediction(actual, r.snr_db, a.cfg.seed_base);
            sc.load = a.cfg.load;
            sc.tariff = a.cfg.tariff;
            sc.penalty_rate = a.cfg.penalty_rate;
            sc.step_hours = a.cfg.step_hours;
            const std::vector<hf::TrackStep> trace = hf::track_reference(sc, a.cfg.ess);
            char name[64];
            std::snprintf(name, sizeof name, "trace_%.2f.csv", r.target_rmse);
            std::ofstream out((fs::path(a.trace_dir) / name).string());
            out << "step,pcc,ess_power,ess_energy,imbalance\n";
            for (std::size_t i = 0; i < trace.size(); ++i)
                out << i << ',' << trace[i].pcc << ',' << trace[i].ess_power << ','
                    << trace[i].ess_energy << ',' << trace[i].imbalance << '\n';
        }
        std::printf("  traces (seed %llu) -> %s\n",
                    static_cast<unsigned long long>(a.cfg.seed_base), a.trace_dir.c_str());
    }
    return 0;
}

// ------------------------------------------------------------- diagnose ---

int run_diagnose(const std::string& in, int max_lag, int diff_lag, const std::string& out,
                 double snap) {
    hf::TimeSeries ts = hf::read_series_csv(in, snap);
    if (diff_lag > 0) ts = hf::seasonal_diff(ts, diff_lag);
    std::vector<double> x;
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (ts.usable(i)) x.push_back(ts.values[i]);
    const hf::AcfPacf res = hf::acf_pacf(x, max_lag);
    const double band = 1.96 / std::sqrt(static_cast<double>(x.size()));

    std::printf("diagnose: %zu usable samples%s, +-%.4f white-noise band\n", x.size(),
                diff_lag > 0 ? " (seasonally differenced)" : "", band);
    const int show = std::min(max_lag, 12);
    std::printf("%5s %9s %9s\n", "lag", "acf", "pacf");
    for (int k = 0; k <= show; ++k)
        std::printf("%5d %9.4f %9.4f\n", k, res.acf[static_cast<std::size_t>(k)],
                    res.pacf[static_cast<std::size_t>(k)]);
    if (!out.empty()) {
        std::ofstream f(out);
        if (!f) throw std::runtime_error("cannot write " + out);
        f << "lag,acf,pacf\n";
        for (int k = 0; k <= max_lag; ++k)
            f << k << ',' << res.acf[static_cast<std::size_t>(k)] << ','
              << res.pacf[static_cast<std::size_t>(k)] << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- serve ---

hf::HttpFetcher make_http_fetcher() {
    return [](const std::string& url, int timeout_seconds) -> std::string {
        const std::size_t scheme = url.find("://");
        if (scheme == std::string::npos) throw std::runtime_error("bad url: " + url);
        const std::size_t path_pos = url.find('/', scheme + 3);
        const std::string base = path_pos == std::string::npos ? url : url.substr(0, path_pos);
        const std::string path = path_pos == std::string::npos ? "/" : url.substr(path_pos);
        httplib::Client client(base);
        client.set_connection_timeout(timeout_seconds, 0);
        client.set_read_timeout(timeout_seconds, 0);
        auto res = client.Get(path);
        if (!res) throw std::runtime_error("http error: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw std::runtime_error("http status " + std::to_string(res->status) + ": " + url);
        return res->body;
    };
}

struct ServeArgs {
    std::string config, replay_from, until, output_dir;
    int cycles = 0;
};

int run_serve(const ServeArgs& a) {
    hf::ScheduleConfig cfg = hf::ScheduleConfig::load(a.config);
    if (const char* env = std::getenv("HELIOFORGE_OUTPUT_DIR"); env && *env)
        cfg.output_dir = env;
    if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
    cfg.validate();

    const bool replay = !a.replay_from.empty();
    if (replay && a.until.empty())
        throw CLI::ValidationError("--replay-from requires --until");
    const hf::UnixTime until = a.until.empty() ? std::numeric_limits<hf::UnixTime>::max()
                                               : parse_time_arg(a.until, "--until");

    hf::ManualClock manual(replay ? parse_time_arg(a.replay_from, "--replay-from") : 0);
    hf::SystemClock system;
    system.interrupted = [] { return g_stop != 0; };
    hf::Clock& clock = replay ? static_cast<hf::Clock&>(manual) : system;

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    try {
        hf::ServiceLoop loop(cfg, clock);
        loop.http_fetcher = make_http_fetcher();
        std::printf("serve: store %s, output %s, cycle %d min (lead %d s)%s\n",
                    cfg.store_dir.c_str(), cfg.output_dir.c_str(), cfg.cycle_minutes,
                    cfg.lead_seconds, replay ? ", replay mode" : "");

        int done = 0;
        while (!g_stop && (a.cycles == 0 || done < a.cycles)) {
            const hf::UnixTime origin = loop.next_origin();
            const hf::UnixTime fire = origin - cfg.lead_seconds;
            if (fire > until) break;
            clock.sleep_until(fire);
            if (g_stop) break;
            const hf::CycleResult r = loop.run_cycle_at(origin);
            ++done;
            std::printf("[%s] sr=%s gp=%s degraded=%d new=%zu%s%s\n",
                        hf::format_iso8601(r.origin).c_str(), r.sr_path.c_str(),
                        r.gp_path.c_str(), static_cast<int>(r.degraded), r.new_records,
                        r.output_file.empty() ? "" : " -> ",
                        r.output_file.c_str());
            for (const std::string& n : r.notes) std::printf("    note: %s\n", n.c_str());
            std::fflush(stdout);
        }
        std::printf("serve: %d cycle(s), shutting down\n", done);
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "serve: unrecoverable: %s\n", e.what());
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"helioforge: solar radiation and PV power forecasting toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "helioforge 1.0.0");

    // synth
    hf::SynthConfig synth_cfg;
    std::string synth_out = "data";
    std::string synth_start;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic SR/GP/service dataset");
    synth->add_option("--days", synth_cfg.days, "Number of days")->capture_default_str();
    synth->add_option("--seed", synth_cfg.seed, "RNG seed")->capture_default_str();
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--peak", synth_cfg.clear_sky_peak, "Clear-sky SR peak, W/m^2")
        ->capture_default_str();
    synth->add_option("--capacity", synth_cfg.pv_capacity, "PV capacity, kW")
        ->capture_default_str();
    synth->add_option("--skill", synth_cfg.service_skill, "Service forecast skill in [0,1]")
        ->capture_default_str();
    synth->add_option("--regime-persistence", synth_cfg.regime_persistence,
                      "Markov chain self-transition probability")
        ->capture_default_str();
    synth->add_option("--start", synth_start, "Start time (ISO-8601 UTC)");

    // clean
    CleanArgs clean_args;
    auto* clean = app.add_subcommand("clean", "Outlier-flag, gap-fill, and resample a series");
    clean->add_option("--in", clean_args.in, "Input CSV (timestamp,value[,flag])")->required();
    clean->add_option("--out", clean_args.out, "Output CSV")->required();
    clean->add_option("--snap", clean_args.snap, "Timestamp snap tolerance, seconds")
        ->capture_default_str();
    clean->add_option("--step-hint", clean_args.step_hint, "Grid step when one row only");
    clean->add_option("--window", clean_args.window, "Neighbor window per side")
        ->capture_default_str();
    clean->add_option("--threshold", clean_args.threshold, "Relative deviation threshold")
        ->capture_default_str();
    clean->add_option("--max-gap", clean_args.max_gap, "Longest gap to interpolate, steps")
        ->capture_default_str();
    clean->add_option("--resample", clean_args.resample_step, "Target step, seconds (0 keeps)");
    clean->add_option("--cross-sr", clean_args.cross_sr,
                      "SR series CSV to cross-match this GP series against");
    clean->add_option("--gp-high", clean_args.gp_high, "Cross-match: high-GP bound");
    clean->add_option("--sr-low", clean_args.sr_low, "Cross-match: near-zero SR bound");
    clean->add_option("--gp-low", clean_args.gp_low, "Cross-match: low-GP bound");
    clean->add_option("--sr-high", clean_args.sr_high, "Cross-match: high-SR bound");

    // fit
    std::string fit_target, fit_spec, fit_in, fit_exo, fit_out;
    double fit_snap = 1.0;
    auto* fit = app.add_subcommand("fit", "Fit a seasonal AR model");
    fit->add_option("--target", fit_target, "sr or gp")
        ->required()
        ->check(CLI::IsMember({"sr", "gp"}));
    fit->add_option("--spec", fit_spec,
                    "Lag preset (sr-long, sr-short, gp-ari, gp-arix) or spec file");
    fit->add_option("--in", fit_in, "Measurement CSV")->required();
    fit->add_option("--exo", fit_exo, "Exogenous series CSV (gp-arix)");
    fit->add_option("--out", fit_out, "Model file")->required();
    fit->add_option("--snap", fit_snap, "Timestamp snap tolerance")->capture_default_str();

    // fit-store
    FitStoreArgs fst;
    auto* fit_store_cmd =
        app.add_subcommand("fit-store", "Fit the full predictor store (models, gate, ensembles)");
    fit_store_cmd->add_option("--sr", fst.sr, "SR measurement CSV")->required();
    fit_store_cmd->add_option("--gp", fst.gp, "GP measurement CSV")->required();
    fit_store_cmd->add_option("--service", fst.service, "Service forecast CSV")->required();
    fit_store_cmd->add_option("--out", fst.out, "Store directory")->required();
    fit_store_cmd->add_option("--cal-frac", fst.cal_frac, "Calibration fraction")
        ->capture_default_str();
    fit_store_cmd->add_option("--ens-frac", fst.ens_frac, "Ensemble-calibration fraction")
        ->capture_default_str();
    fit_store_cmd->add_option("--stride", fst.cfg.stride, "Backtest origin stride, steps")
        ->capture_default_str();
    fit_store_cmd->add_option("--horizon", fst.cfg.horizon, "Prediction horizon, steps")
        ->capture_default_str();
    fit_store_cmd->add_option("--gate-c", fst.cfg.gate_c, "Gate SVM C")->capture_default_str();
    fit_store_cmd->add_option("--gate-gamma", fst.cfg.gate_gamma, "Gate SVM gamma")
        ->capture_default_str();
    fit_store_cmd->add_flag("--tune-gate", fst.cfg.tune_gate,
                            "Cross-validated grid search for (C, gamma)");
    fit_store_cmd->add_option("--tune-seed", fst.cfg.tune_seed, "Fold-shuffle seed")
        ->capture_default_str();
    fit_store_cmd->add_option("--night-threshold", fst.cfg.night_threshold,
                              "Night-row exclusion bound on |measured|")
        ->capture_default_str();
    fit_store_cmd->add_option("--snap", fst.snap, "Timestamp snap tolerance")
        ->capture_default_str();

    // gate-train
    GateTrainArgs gt;
    auto* gate_train = app.add_subcommand("gate-train", "Train the Good/Bad switching gate");
    gate_train->add_option("--service", gt.service, "Service forecast CSV")->required();
    gate_train->add_option("--reference", gt.reference, "Reference forecast CSV")->required();
    gate_train->add_option("--measured", gt.measured, "Measurement CSV")->required();
    gate_train->add_option("--out", gt.out, "Gate model file")->required();
    gate_train->add_option("--c", gt.c, "SVM C")->capture_default_str();
    gate_train->add_option("--gamma", gt.gamma, "RBF gamma")->capture_default_str();
    gate_train->add_flag("--tune", gt.tune, "Grid-search (C, gamma) by cross-validation");
    gate_train->add_option("--folds", gt.folds, "CV folds")->capture_default_str();
    gate_train->add_option("--tune-seed", gt.tune_seed, "Fold-shuffle seed")
        ->capture_default_str();
    gate_train->add_option("--fc-step", gt.fc_step, "Forecast grid step, seconds")
        ->capture_default_str();
    gate_train->add_option("--snap", gt.snap, "Timestamp snap tolerance")->capture_default_str();

    // gate-eval
    GateTrainArgs ge;
    std::string ge_gate, ge_report;
    auto* gate_eval = app.add_subcommand("gate-eval", "Score a trained gate on labeled data");
    gate_eval->add_option("--gate", ge_gate, "Gate model file")->required();
    gate_eval->add_option("--service", ge.service, "Service forecast CSV")->required();
    gate_eval->add_option("--reference", ge.reference, "Reference forecast CSV")->required();
    gate_eval->add_option("--measured", ge.measured, "Measurement CSV")->required();
    gate_eval->add_option("--report", ge_report, "Summary CSV");
    gate_eval->add_option("--fc-step", ge.fc_step, "Forecast grid step, seconds")
        ->capture_default_str();
    gate_eval->add_option("--snap", ge.snap, "Timestamp snap tolerance")->capture_default_str();

    // ensemble-fit
    EnsembleFitArgs ef;
    auto* ens_fit = app.add_subcommand("ensemble-fit", "Fit least-squares ensemble weights");
    ens_fit->add_option("--framework", ef.framework, "basic or time-order")
        ->check(CLI::IsMember({"basic", "time-order"}))
        ->capture_default_str();
    ens_fit->add_option("--measured", ef.measured, "Measurement CSV")->required();
    ens_fit->add_option("--components", ef.components, "Component forecast CSVs")
        ->required()
        ->delimiter(',');
    ens_fit->add_option("--out", ef.out, "Weights file (gated: writes .es1/.es2)")->required();
    ens_fit->add_flag("--gated", ef.gated,
                      "Fit the ES1/ES2 pair split by gate labels (two components)");
    ens_fit->add_flag("--include-night", ef.include_night, "Keep night rows in the fit");
    ens_fit->add_option("--night-threshold", ef.night_threshold,
                        "Night-row bound on |measured|")
        ->capture_default_str();
    ens_fit->add_option("--fc-step", ef.fc_step, "Forecast grid step, seconds")
        ->capture_default_str();
    ens_fit->add_option("--snap", ef.snap, "Timestamp snap tolerance")->capture_default_str();

    // predict
    PredictArgs pr;
    auto* predict = app.add_subcommand("predict", "Predict from a fitted store at given origins");
    predict->add_option("--predictor", pr.predictor, "SR-1..SR-5 or GP-1..GP-4")->required();
    predict->add_option("--store", pr.store, "Predictor store directory")->required();
    predict->add_option("--sr", pr.sr, "SR measurement CSV")->required();
    predict->add_option("--gp", pr.gp, "GP measurement CSV (GP predictors)");
    predict->add_option("--service", pr.service, "Service forecast CSV");
    predict->add_option("--origin", pr.origins, "Forecast origin, ISO-8601 UTC (repeatable)")
        ->required();
    predict->add_option("--horizon", pr.horizon, "Steps ahead (0 = store default)")
        ->capture_default_str();
    predict->add_option("--out", pr.out, "Forecast CSV")->required();
    predict->add_option("--snap", pr.snap, "Timestamp snap tolerance")->capture_default_str();

    // evaluate
    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Rolling-origin backtest of predictors");
    evaluate->add_option("--predictors", ev.predictors, "Predictor ids")
        ->required()
        ->delimiter(',');
    evaluate->add_option("--store", ev.store, "Predictor store directory")->required();
    evaluate->add_option("--sr", ev.sr, "SR measurement CSV")->required();
    evaluate->add_option("--gp", ev.gp, "GP measurement CSV (GP predictors)");
    evaluate->add_option("--service", ev.service, "Service forecast CSV");
    evaluate->add_option("--from", ev.from, "First origin, ISO-8601 UTC")->required();
    evaluate->add_option("--to", ev.to, "End of origin range, exclusive");
    evaluate->add_option("--stride", ev.stride, "Origin stride, steps")->capture_default_str();
    evaluate->add_option("--short", ev.short_h, "Short horizon, steps")->capture_default_str();
    evaluate->add_option("--medium", ev.medium_h, "Medium horizon, steps")->capture_default_str();
    evaluate->add_flag("--daylight-only", ev.daylight_only, "Skip night-only windows");
    evaluate->add_option("--report", ev.report, "Per-predictor summary CSV");
    evaluate->add_option("--profile", ev.profile, "Per-lead RMSE profile CSV");
    evaluate->add_option("--snap", ev.snap, "Timestamp snap tolerance")->capture_default_str();

    // impact
    ImpactArgs im;
    auto* impact = app.add_subcommand("impact", "ESS reference-tracking benefit study");
    impact->add_option("--in", im.in, "GP measurement CSV (default: built-in synthetic day)");
    impact->add_option("--day", im.day, "Day start within --in, ISO-8601 UTC");
    impact->add_option("--config", im.config, "Scenario config file (key = value)");
    auto* topt = impact->add_option("--rmse-targets", im.cfg.rmse_targets,
                                    "Normalized RMSE targets, percent")
                     ->delimiter(',');
    impact->add_option("--seeds", im.cfg.seeds, "Monte-Carlo seeds per target")
        ->capture_default_str();
    impact->add_option("--seed-base", im.cfg.seed_base, "First seed")->capture_default_str();
    impact->add_option("--peak", im.cfg.normalization_peak,
                       "Normalization peak (0 = day peak)");
    impact->add_option("--summary", im.summary, "Summary CSV");
    impact->add_option("--trace-dir", im.trace_dir, "Per-target trace CSV directory");
    impact->add_option("--snap", im.snap, "Timestamp snap tolerance")->capture_default_str();

    // diagnose
    std::string dg_in, dg_out;
    int dg_max_lag = 120, dg_diff = 0;
    double dg_snap = 1.0;
    auto* diagnose = app.add_subcommand("diagnose", "ACF/PACF of a series");
    diagnose->add_option("--in", dg_in, "Measurement CSV")->required();
    diagnose->add_option("--max-lag", dg_max_lag, "Largest lag")->capture_default_str();
    diagnose->add_option("--seasonal-diff", dg_diff, "Difference at this lag first (0 = none)")
        ->capture_default_str();
    diagnose->add_option("--out", dg_out, "ACF/PACF CSV");
    diagnose->add_option("--snap", dg_snap, "Timestamp snap tolerance")->capture_default_str();

    // serve
    ServeArgs sv;
    auto* serve = app.add_subcommand("serve", "Run the online prediction service");
    serve->add_option("--config", sv.config, "Schedule config file")->required();
    serve->add_option("--replay-from", sv.replay_from,
                      "Replay with a manual clock from this time");
    serve->add_option("--until", sv.until, "Stop once the next cycle would fire after this");
    serve->add_option("--cycles", sv.cycles, "Stop after this many cycles (0 = unlimited)")
        ->capture_default_str();
    serve->add_option("--output-dir", sv.output_dir,
                      "Override output directory (also HELIOFORGE_OUTPUT_DIR)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            if (!synth_start.empty())
                synth_cfg.start_time = parse_time_arg(synth_start, "--start");
            return run_synth(synth_cfg, synth_out);
        }
        if (clean->parsed()) return run_clean(clean_args);
        if (fit->parsed()) return run_fit(fit_target, fit_spec, fit_in, fit_exo, fit_out, fit_snap);
        if (fit_store_cmd->parsed()) return run_fit_store(fst);
        if (gate_train->parsed()) return run_gate_train(gt);
        if (gate_eval->parsed()) return run_gate_eval(ge_gate, ge, ge_report);
        if (ens_fit->parsed()) return run_ensemble_fit(ef);
        if (predict->parsed()) return run_predict(pr);
        if (evaluate->parsed()) return run_evaluate(ev);
        if (impact->parsed()) {
            im.targets_given = topt->count() > 0;
            return run_impact(std::move(im));
        }
        if (diagnose->parsed()) return run_diagnose(dg_in, dg_max_lag, dg_diff, dg_out, dg_snap);
        if (serve->parsed()) return run_serve(sv);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "helioforge: %s\n", e.what());
        return 1;
    }
    return 0;
}
