#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "helioforge/calendar.hpp"
#include "helioforge/forecast_matrix.hpp"
#include "helioforge/rng.hpp"
#include "helioforge/time_series.hpp"

namespace helioforge {

enum class Regime { Clear = 0, Cloudy = 1, Mixed = 2 };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Clear: return "clear";
        case Regime::Cloudy: return "cloudy";
        default: return "mixed";
    }
}

/// Daily attenuation distribution of one weather regime; draws are clamped
/// to [atten_min, atten_max], keeping the regimes' daily integrals ordered.
struct RegimeSpec {
    double atten_mean = 1.0;
    double atten_spread = 0.0;
    double atten_min = 0.0;
    double atten_max = 1.0;
};

struct SynthConfig {
    int days = 120;
    double clear_sky_peak = 800.0;  // W/m^2
    double regime_persistence = 0.75;
    Regime start_regime = Regime::Clear;
    RegimeSpec clear{0.95, 0.02, 0.85, 1.0};
    RegimeSpec cloudy{0.35, 0.08, 0.15, 0.50};
    RegimeSpec mixed{0.65, 0.10, 0.50, 0.85};
    double service_skill = 0.85;  // 1 = service equals coarse truth
    double pv_capacity = 400.0;   // kW
    double sr_noise = 0.05;       // stationary sd of the smooth AR(1) factor
    double gp_noise = 0.02;
    double outlier_rate = 0.0;  // per-sample spike probability (SR and GP)
    double gap_rate = 0.0;      // per-sample probability of starting a gap
    std::uint64_t seed = 1;
    UnixTime start_time = make_utc(2017, 6, 1, 0, 0, 0);
    int step = 900;
    int sunrise_instant = 24;  // daylight strictly between sunrise and sunset
    int sunset_instant = 72;
    int service_issue_steps = 24;    // issue cadence: every 6 hours
    int service_block_steps = 12;    // 3-hour blocks
    int service_coverage_blocks = 16;  // 48 hours ahead

    void validate() const {
        if (days < 1) throw std::invalid_argument("synth: days must be >= 1");
        if (!(clear_sky_peak > 0.0)) throw std::invalid_argument("synth: peak must be positive");
        if (regime_persistence < 0.0 || regime_persistence > 1.0)
            throw std::invalid_argument("synth: regime persistence must be in [0, 1]");
        if (service_skill < 0.0 || service_skill > 1.0)
            throw std::invalid_argument("synth: service skill must be in [0, 1]");
        if (!(pv_capacity > 0.0)) throw std::invalid_argument("synth: pv capacity must be positive");
        if (step < 1 || 86400 % step != 0)
            throw std::invalid_argument("synth: step must divide one day");
        const int per_day = static_cast<int>(86400 / step);
        if (sunrise_instant < 0 || sunset_instant <= sunrise_instant || sunset_instant > per_day)
            throw std::invalid_argument("synth: invalid daylight window");
        if (service_issue_steps < 1 || service_block_steps < 1 || service_coverage_blocks < 1)
            throw std::invalid_argument("synth: invalid service cadence");
        if (outlier_rate < 0.0 || outlier_rate > 1.0 || gap_rate < 0.0 || gap_rate > 1.0)
            throw std::invalid_argument("synth: rates must be in [0, 1]");
    }
};

struct SynthData {
    TimeSeries sr;
    TimeSeries gp;
    ServiceFeed service;
    std::vector<Regime> day_regimes;
    std::vector<double> day_attenuations;
};

/// Deterministic synthetic world: half-sine clear-sky diurnal SR shaped by
/// a first-order Markov regime chain and a smooth multiplicative AR(1)
/// factor; GP is a capacity-saturated linear map of SR; the service feed
/// blends the coarse-grid truth with climatology at (1 - skill).
inline SynthData generate(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const int per_day = static_cast<int>(86400 / config.step);
    const std::size_t n = static_cast<std::size_t>(config.days) * static_cast<std::size_t>(per_day);

    SynthData data;
    data.day_regimes.resize(static_cast<std::size_t>(config.days));
    data.day_attenuations.resize(static_cast<std::size_t>(config.days));
    for (int d = 0; d < config.days; ++d) {
        Regime r;
        if (d == 0) {
            r = config.start_regime;
        } else {
            const Regime prev = data.day_regimes[static_cast<std::size_t>(d - 1)];
            if (rng.uniform() < config.regime_persistence) {
                r = prev;
            } else {
                const int other = static_cast<int>(rng.uniform_int(0, 1));
                int idx = (static_cast<int>(prev) + 1 + other) % 3;
                r = static_cast<Regime>(idx);
            }
        }
        const RegimeSpec& spec = r == Regime::Clear    ? config.clear
                                 : r == Regime::Cloudy ? config.cloudy
                                                       : config.mixed;
        const double a = std::clamp(spec.atten_mean + spec.atten_spread * rng.normal(),
                                    spec.atten_min, spec.atten_max);
        data.day_regimes[static_cast<std::size_t>(d)] = r;
        data.day_attenuations[static_cast<std::size_t>(d)] = a;
    }

    // clear-sky template over one day
    std::vector<double> clear_sky(static_cast<std::size_t>(per_day), 0.0);
    const double width = static_cast<double>(config.sunset_instant - config.sunrise_instant);
    for (int i = config.sunrise_instant + 1; i < config.sunset_instant; ++i)
        clear_sky[static_cast<std::size_t>(i)] =
            config.clear_sky_peak *
            std::sin(3.14159265358979323846 * (i - config.sunrise_instant) / width);

    const double phi = 0.9;
    const double sr_innov = config.sr_noise * std::sqrt(1.0 - phi * phi);
    const double gp_innov = config.gp_noise * std::sqrt(1.0 - phi * phi);
    double m = config.sr_noise * rng.normal();
    double g = config.gp_noise * rng.normal();
    const double slope = config.pv_capacity / (0.85 * config.clear_sky_peak);

    data.sr.start_time = config.start_time;
    data.sr.step = config.step;
    data.gp.start_time = config.start_time;
    data.gp.step = config.step;
    for (std::size_t t = 0; t < n; ++t) {
        m = phi * m + sr_innov * rng.normal();
        g = phi * g + gp_innov * rng.normal();
        const std::size_t d = t / static_cast<std::size_t>(per_day);
        const std::size_t i = t % static_cast<std::size_t>(per_day);
        const double sr = clear_sky[i] * data.day_attenuations[d] * std::max(0.0, 1.0 + m);
        const double gp = std::min(config.pv_capacity, slope * sr * std::max(0.0, 1.0 + g));
        data.sr.push_back(sr);
        data.gp.push_back(gp);
    }

    // service feed: issued on a fixed cadence, forecasting coarse-block
    // means; climatology (mean-attenuated clear sky) fills the unskilled
    // share, plus noise scaled by (1 - skill)
    const double climatology_atten =
        (config.clear.atten_mean + config.cloudy.atten_mean + config.mixed.atten_mean) / 3.0;
    const int block = config.service_block_steps;
    for (std::size_t t0 = 0; t0 < n; t0 += static_cast<std::size_t>(config.service_issue_steps)) {
        ForecastIssue issue;
        issue.issue_time = data.sr.time_at(t0);
        issue.values.start_time = issue.issue_time;
        issue.values.step = config.step * block;
        for (int b = 0; b < config.service_coverage_blocks; ++b) {
            const std::size_t bs = t0 + static_cast<std::size_t>(b * block);
            if (bs + static_cast<std::size_t>(block) > n) break;
            double truth = 0.0, clim = 0.0;
            for (int j = 0; j < block; ++j) {
                const std::size_t idx = bs + static_cast<std::size_t>(j);
                truth += data.sr.values[idx];
                clim += clear_sky[idx % static_cast<std::size_t>(per_day)] * climatology_atten;
            }
            truth /= static_cast<double>(block);
            clim /= static_cast<double>(block);
            const double noise = 0.10 * config.clear_sky_peak * rng.normal();
            const double v = config.service_skill * truth +
                             (1.0 - config.service_skill) * (clim + noise);
            issue.values.push_back(std::max(0.0, v));
        }
        if (!issue.values.empty()) data.service.issues.push_back(std::move(issue));
    }
    data.service.sort_issues();

    if (config.outlier_rate > 0.0) {
        for (std::size_t t = 0; t < n; ++t) {
            if (rng.uniform() < config.outlier_rate && data.sr.values[t] > 0.0) {
                data.sr.values[t] += 8.0 * config.clear_sky_peak;
                data.gp.values[t] += 8.0 * config.pv_capacity;
            }
        }
    }
    if (config.gap_rate > 0.0) {
        for (std::size_t t = 0; t < n; ++t) {
            if (rng.uniform() < config.gap_rate) {
                const std::size_t len = 1 + static_cast<std::size_t>(rng.uniform_int(0, 2));
                for (std::size_t j = t; j < std::min(n, t + len); ++j) {
                    data.sr.mark_missing(j);
                    data.gp.mark_missing(j);
                }
            }
        }
    }
    return data;
}

}  // namespace helioforge
