#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "helioforge/synth.hpp"

using namespace helioforge;
using Catch::Matchers::ContainsSubstring;

namespace {

std::vector<double> day_integrals(const TimeSeries& sr, int per_day) {
    std::vector<double> out;
    for (std::size_t d = 0; d * per_day < sr.size(); ++d) {
        double acc = 0.0;
        for (int i = 0; i < per_day; ++i) acc += sr.values[d * static_cast<std::size_t>(per_day) + static_cast<std::size_t>(i)];
        out.push_back(acc);
    }
    return out;
}

}  // namespace

TEST_CASE("generation is seed-deterministic", "[synth]") {
    SynthConfig cfg;
    cfg.days = 10;
    const SynthData a = generate(cfg);
    const SynthData b = generate(cfg);
    REQUIRE(a.sr.values == b.sr.values);
    REQUIRE(a.gp.values == b.gp.values);
    REQUIRE(a.day_regimes == b.day_regimes);
    REQUIRE(a.service.issues.size() == b.service.issues.size());
    for (std::size_t i = 0; i < a.service.issues.size(); ++i)
        REQUIRE(a.service.issues[i].values.values == b.service.issues[i].values.values);

    cfg.seed = 2;
    const SynthData c = generate(cfg);
    REQUIRE(a.sr.values != c.sr.values);
}

TEST_CASE("series shape, sign, and capacity bounds", "[synth]") {
    SynthConfig cfg;
    cfg.days = 30;
    const SynthData data = generate(cfg);
    REQUIRE(data.sr.size() == 30u * 96u);
    REQUIRE(data.gp.size() == data.sr.size());
    REQUIRE(data.sr.start_time == cfg.start_time);
    REQUIRE(data.sr.step == cfg.step);
    REQUIRE(data.day_regimes.size() == 30u);
    REQUIRE(data.day_attenuations.size() == 30u);
    for (std::size_t t = 0; t < data.sr.size(); ++t) {
        REQUIRE(data.sr.values[t] >= 0.0);
        REQUIRE(data.gp.values[t] >= 0.0);
        REQUIRE(data.gp.values[t] <= cfg.pv_capacity);
        const std::size_t i = t % 96;
        if (i <= static_cast<std::size_t>(cfg.sunrise_instant) ||
            i >= static_cast<std::size_t>(cfg.sunset_instant)) {
            REQUIRE(data.sr.values[t] == 0.0);
            REQUIRE(data.gp.values[t] == 0.0);
        }
    }
    REQUIRE(data.sr.peak() > 0.5 * cfg.clear_sky_peak);
}

TEST_CASE("attenuations respect regime bounds and order the day integrals", "[synth]") {
    SynthConfig cfg;
    const SynthData data = generate(cfg);
    const std::vector<double> integrals = day_integrals(data.sr, 96);

    double clear_min = 1e300, clear_sum = 0.0, cloudy_max = -1.0, cloudy_sum = 0.0, mixed_sum = 0.0;
    int n_clear = 0, n_cloudy = 0, n_mixed = 0;
    for (std::size_t d = 0; d < data.day_regimes.size(); ++d) {
        const RegimeSpec& spec = data.day_regimes[d] == Regime::Clear    ? cfg.clear
                                 : data.day_regimes[d] == Regime::Cloudy ? cfg.cloudy
                                                                         : cfg.mixed;
        REQUIRE(data.day_attenuations[d] >= spec.atten_min);
        REQUIRE(data.day_attenuations[d] <= spec.atten_max);
        switch (data.day_regimes[d]) {
            case Regime::Clear:
                clear_min = std::min(clear_min, integrals[d]);
                clear_sum += integrals[d];
                ++n_clear;
                break;
            case Regime::Cloudy:
                cloudy_max = std::max(cloudy_max, integrals[d]);
                cloudy_sum += integrals[d];
                ++n_cloudy;
                break;
            default:
                mixed_sum += integrals[d];
                ++n_mixed;
                break;
        }
    }
    REQUIRE(n_clear > 0);
    REQUIRE(n_cloudy > 0);
    REQUIRE(n_mixed > 0);
    REQUIRE(clear_min > cloudy_max);
    REQUIRE(clear_sum / n_clear > mixed_sum / n_mixed);
    REQUIRE(mixed_sum / n_mixed > cloudy_sum / n_cloudy);
}

TEST_CASE("a perfectly skilled service reproduces coarse-block means", "[synth]") {
    SynthConfig cfg;
    cfg.days = 5;
    cfg.service_skill = 1.0;
    const SynthData data = generate(cfg);
    const std::size_t n = data.sr.size();
    REQUIRE(data.service.issues.size() == 5u * 4u);

    for (const ForecastIssue& issue : data.service.issues) {
        const std::ptrdiff_t t0 = data.sr.index_of(issue.issue_time);
        REQUIRE(t0 >= 0);
        REQUIRE(issue.values.step == cfg.step * cfg.service_block_steps);
        REQUIRE(issue.values.size() <= static_cast<std::size_t>(cfg.service_coverage_blocks));
        for (std::size_t b = 0; b < issue.values.size(); ++b) {
            const std::size_t bs = static_cast<std::size_t>(t0) + b * 12;
            REQUIRE(bs + 12 <= n);
            double truth = 0.0;
            for (std::size_t j = 0; j < 12; ++j) truth += data.sr.values[bs + j];
            truth /= 12.0;
            REQUIRE(issue.values.values[b] == Catch::Approx(truth).margin(1e-9));
        }
    }
    // the trailing issue covers only what remains of the record
    REQUIRE(data.service.issues.back().values.size() == 2u);
    REQUIRE(data.service.issues.front().values.size() == 16u);
}

TEST_CASE("issue cadence and values are nonnegative at partial skill", "[synth]") {
    SynthConfig cfg;
    cfg.days = 8;
    cfg.service_skill = 0.6;
    const SynthData data = generate(cfg);
    REQUIRE(data.service.issues.size() == 8u * 4u);
    for (std::size_t i = 1; i < data.service.issues.size(); ++i)
        REQUIRE(data.service.issues[i].issue_time - data.service.issues[i - 1].issue_time ==
                cfg.step * cfg.service_issue_steps);
    for (const ForecastIssue& issue : data.service.issues)
        for (double v : issue.values.values) REQUIRE(v >= 0.0);
}

TEST_CASE("outlier and gap rates inject defects", "[synth]") {
    SynthConfig cfg;
    cfg.days = 20;
    cfg.outlier_rate = 0.01;
    cfg.gap_rate = 0.01;
    const SynthData data = generate(cfg);

    int spikes = 0;
    for (double v : data.sr.values)
        if (v > 2.0 * cfg.clear_sky_peak) ++spikes;
    REQUIRE(spikes > 0);
    REQUIRE(data.sr.usable_count() < data.sr.size());
    REQUIRE(data.gp.usable_count() < data.gp.size());

    SynthConfig clean = cfg;
    clean.outlier_rate = 0.0;
    clean.gap_rate = 0.0;
    const SynthData pristine = generate(clean);
    REQUIRE(pristine.sr.usable_count() == pristine.sr.size());
}

TEST_CASE("regime names", "[synth]") {
    REQUIRE(std::string(regime_name(Regime::Clear)) == "clear");
    REQUIRE(std::string(regime_name(Regime::Cloudy)) == "cloudy");
    REQUIRE(std::string(regime_name(Regime::Mixed)) == "mixed");
}

TEST_CASE("config validation", "[synth]") {
    SynthConfig cfg;
    cfg.days = 0;
    REQUIRE_THROWS_WITH(generate(cfg), ContainsSubstring("days must be >= 1"));
    cfg = SynthConfig{};
    cfg.step = 7;
    REQUIRE_THROWS_WITH(generate(cfg), ContainsSubstring("step must divide one day"));
    cfg = SynthConfig{};
    cfg.sunset_instant = cfg.sunrise_instant;
    REQUIRE_THROWS_WITH(generate(cfg), ContainsSubstring("invalid daylight window"));
    cfg = SynthConfig{};
    cfg.service_skill = 1.5;
    REQUIRE_THROWS_WITH(generate(cfg), ContainsSubstring("service skill"));
    cfg = SynthConfig{};
    cfg.regime_persistence = -0.1;
    REQUIRE_THROWS_WITH(generate(cfg), ContainsSubstring("regime persistence"));
    cfg = SynthConfig{};
    cfg.outlier_rate = 2.0;
    REQUIRE_THROWS_WITH(generate(cfg), ContainsSubstring("rates must be in [0, 1]"));
    cfg = SynthConfig{};
    cfg.pv_capacity = 0.0;
    REQUIRE_THROWS_WITH(generate(cfg), ContainsSubstring("pv capacity"));
}
