#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <vector>

#include "helioforge/calendar.hpp"
#include "helioforge/csv.hpp"
#include "helioforge/kvdoc.hpp"
#include "helioforge/model_io.hpp"
#include "helioforge/rng.hpp"
#include "helioforge/time_series.hpp"

using namespace helioforge;
using Catch::Matchers::ContainsSubstring;

namespace {

std::filesystem::path temp_file(const char* stem) {
    return std::filesystem::temp_directory_path() /
           (std::string("helioforge_test_") + stem + ".tmp");
}

}  // namespace

TEST_CASE("time series constructor flags NaN values as missing", "[timeseries]") {
    const TimeSeries ts(0, 900, {1.0, kMissingValue, 3.0});
    REQUIRE(ts.flags[0] == Flag::Valid);
    REQUIRE(ts.flags[1] == Flag::Missing);
    REQUIRE(ts.usable_count() == 2);
}

TEST_CASE("index_of resolves grid points and rejects off-grid times", "[timeseries]") {
    const TimeSeries ts(1000, 900, {1, 2, 3});
    REQUIRE(ts.index_of(1000) == 0);
    REQUIRE(ts.index_of(1900) == 1);
    REQUIRE(ts.index_of(1001) == -1);
    REQUIRE(ts.index_of(100) == -1);
    REQUIRE(ts.index_of(1000 + 3 * 900) == -1);
    REQUIRE(ts.end_time() == 1000 + 3 * 900);
}

TEST_CASE("prefix and slice preserve the grid", "[timeseries]") {
    const TimeSeries ts(0, 900, {1, 2, 3, 4, 5});
    const TimeSeries p = ts.prefix(3);
    REQUIRE(p.size() == 3);
    REQUIRE(p.start_time == 0);
    const TimeSeries s = ts.slice({2, 5});
    REQUIRE(s.size() == 3);
    REQUIRE(s.start_time == 2 * 900);
    REQUIRE(s.values[0] == 3.0);
    REQUIRE_THROWS_AS(ts.slice({3, 6}), std::out_of_range);
}

TEST_CASE("peak ignores non-usable samples", "[timeseries]") {
    TimeSeries ts(0, 900, {5.0, 900.0, 7.0});
    ts.flags[1] = Flag::Outlier;
    REQUIRE(ts.peak() == Catch::Approx(7.0));
}

TEST_CASE("dataset split fractions are disjoint, ordered, exhaustive", "[timeseries]") {
    const DatasetSplit s = DatasetSplit::by_fraction(1000, 0.5, 0.25);
    REQUIRE(s.calibration.begin == 0);
    REQUIRE(s.calibration.end == 500);
    REQUIRE(s.ensemble_calibration.begin == 500);
    REQUIRE(s.ensemble_calibration.end == 750);
    REQUIRE(s.validation.begin == 750);
    REQUIRE(s.validation.end == 1000);
    REQUIRE_THROWS_AS(DatasetSplit::by_fraction(100, 0.8, 0.3), std::invalid_argument);
}

TEST_CASE("calendar round-trips civil dates and ISO-8601 text", "[timeseries]") {
    const UnixTime t = make_utc(2017, 6, 1, 12, 30, 45);
    REQUIRE(format_iso8601(t) == "2017-06-01T12:30:45Z");
    REQUIRE(parse_iso8601("2017-06-01T12:30:45Z") == t);
    REQUIRE(parse_iso8601("2017-06-01") == make_utc(2017, 6, 1, 0, 0, 0));
    REQUIRE(format_iso8601(0) == "1970-01-01T00:00:00Z");

    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const UnixTime u = rng.uniform_int(0, 4102444800LL);
        REQUIRE(parse_iso8601(format_iso8601(u)) == u);
    }
}

TEST_CASE("instant_of_day is one-based on the sample grid", "[timeseries]") {
    REQUIRE(instant_of_day(make_utc(2017, 6, 1, 0, 0, 0), 900) == 1);
    REQUIRE(instant_of_day(make_utc(2017, 6, 1, 0, 15, 0), 900) == 2);
    REQUIRE(instant_of_day(make_utc(2017, 6, 1, 23, 45, 0), 900) == 96);
    REQUIRE(seconds_of_day(make_utc(2017, 6, 1, 1, 2, 3)) == 3723);
}

TEST_CASE("measurement csv round-trips values and flags", "[timeseries]") {
    TimeSeries ts(make_utc(2017, 6, 1, 0, 0, 0), 900, {1.5, kMissingValue, 3.25, 900.0});
    ts.flags[3] = Flag::Outlier;

    std::ostringstream out;
    write_series_csv(out, ts);
    std::istringstream in(out.str());
    const TimeSeries back = series_from_rows(read_measurement_rows(in, "test"));

    REQUIRE(back.same_grid(ts));
    for (std::size_t i = 0; i < ts.size(); ++i) {
        REQUIRE(back.flags[i] == ts.flags[i]);
        if (ts.usable(i)) REQUIRE(back.values[i] == ts.values[i]);
    }
}

TEST_CASE("csv assembly snaps near-grid stamps and fills holes", "[timeseries]") {
    std::vector<CsvRow> rows = {{0, 1.0, Flag::Valid},
                                {901, 2.0, Flag::Valid},
                                {2700, 4.0, Flag::Valid}};
    const TimeSeries ts = series_from_rows(rows, 1, 900);
    REQUIRE(ts.size() == 4);
    REQUIRE(ts.values[1] == 2.0);
    REQUIRE(ts.flags[2] == Flag::Missing);

    std::vector<CsvRow> off = {{0, 1.0, Flag::Valid}, {1200, 2.0, Flag::Valid}};
    REQUIRE_THROWS_WITH(series_from_rows(off, 1, 900),
                        ContainsSubstring("irregular timestamps"));
}

TEST_CASE("csv assembly keeps the first of duplicate timestamps", "[timeseries]") {
    std::vector<CsvRow> rows = {{0, 1.0, Flag::Valid},
                                {900, 2.0, Flag::Valid},
                                {900, 99.0, Flag::Valid}};
    const TimeSeries ts = series_from_rows(rows, 1, 900);
    REQUIRE(ts.size() == 2);
    REQUIRE(ts.values[1] == 2.0);
}

TEST_CASE("forecast csv round-trips a matrix", "[timeseries]") {
    ForecastMatrix fm;
    fm.predictor_id = "SR-2";
    fm.step = 900;
    fm.horizon = 3;
    fm.add_row(make_utc(2017, 6, 1, 0, 0, 0), {1.0, kMissingValue, 3.0});
    fm.add_row(make_utc(2017, 6, 1, 1, 0, 0), {4.0, 5.0, 6.0});

    const auto path = temp_file("forecast");
    write_forecast_csv(path.string(), fm);
    const ForecastMatrix back = read_forecast_csv(path.string(), 900);
    std::filesystem::remove(path);

    REQUIRE(back.size() == 2);
    REQUIRE(back.horizon == 3);
    REQUIRE(back.origins == fm.origins);
    REQUIRE(back.at(0, 1) == 1.0);
    REQUIRE(is_missing(back.at(0, 2)));
    REQUIRE(back.at(1, 3) == 6.0);
}

TEST_CASE("service csv round-trips a feed", "[timeseries]") {
    ServiceFeed feed;
    for (int k = 0; k < 2; ++k) {
        ForecastIssue iss;
        iss.issue_time = make_utc(2017, 6, 1, 6 * k, 0, 0);
        iss.values.start_time = iss.issue_time;
        iss.values.step = 10800;
        iss.values.push_back(100.0 + k);
        iss.values.push_back(200.0 + k);
        feed.issues.push_back(std::move(iss));
    }

    std::ostringstream out;
    write_service_csv(out, feed);
    std::istringstream in(out.str());
    const ServiceFeed back = service_feed_from_rows(read_service_rows(in, "test"), 10800);

    REQUIRE(back.issues.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        REQUIRE(back.issues[k].issue_time == feed.issues[k].issue_time);
        REQUIRE(back.issues[k].values.values == feed.issues[k].values.values);
        REQUIRE(back.issues[k].values.step == 10800);
    }
}

TEST_CASE("service feed predicts by zero-order hold from the latest issue", "[timeseries]") {
    ServiceFeed feed;
    ForecastIssue iss;
    iss.issue_time = 0;
    iss.values.start_time = 0;
    iss.values.step = 10800;
    iss.values.push_back(50.0);
    iss.values.push_back(80.0);
    feed.issues.push_back(std::move(iss));

    const std::vector<double> row = feed.predict(900, 24, 900);
    REQUIRE(row.size() == 24);
    for (int h = 1; h <= 24; ++h) {
        const UnixTime t = 900 + static_cast<UnixTime>(h - 1) * 900;
        const double expect = t < 10800 ? 50.0 : (t < 21600 ? 80.0 : kMissingValue);
        if (is_missing(expect))
            REQUIRE(is_missing(row[static_cast<std::size_t>(h - 1)]));
        else
            REQUIRE(row[static_cast<std::size_t>(h - 1)] == expect);
    }
    REQUIRE(feed.latest_before(0) == nullptr);
}

TEST_CASE("kvdoc round-trips typed values and tolerates comments", "[timeseries]") {
    KvDoc doc;
    doc.set("name", "example");
    doc.set_int("count", -42);
    doc.set_double("pi", 3.141592653589793);
    doc.set_vector("weights", std::vector<double>{0.25, -1.5, 3.0});

    const auto path = temp_file("kvdoc");
    doc.save(path.string());
    const KvDoc back = KvDoc::load(path.string());
    std::filesystem::remove(path);

    REQUIRE(back.get("name") == "example");
    REQUIRE(back.get_int("count") == -42);
    REQUIRE(back.get_double("pi") == 3.141592653589793);
    REQUIRE(back.get_doubles("weights") == std::vector<double>{0.25, -1.5, 3.0});
    REQUIRE_THROWS_AS(back.get("absent"), std::exception);

    const KvDoc parsed = KvDoc::parse("a = 1  # trailing comment\n\n# full line\nb = two\n");
    REQUIRE(parsed.get_int("a") == 1);
    REQUIRE(parsed.get("b") == "two");
}

TEST_CASE("model params round-trip exactly through kvdoc files", "[timeseries]") {
    ModelParams m;
    m.spec.ar_lags = {1, 2, 3, 4, 94, 95, 96, 97};
    m.spec.exo_lags = {1, 2, 96};
    m.spec.seasonal_lag = 96;
    Rng rng(9);
    for (std::size_t i = 0; i < m.spec.ar_lags.size(); ++i)
        m.ar_coeffs.push_back(rng.uniform(-1.0, 1.0));
    for (std::size_t i = 0; i < m.spec.exo_lags.size(); ++i)
        m.exo_coeffs.push_back(rng.uniform(-1.0, 1.0));
    m.fit_residual_rms = 12.3456789012345;
    m.fit_rows = 777;

    const auto path = temp_file("model");
    save_model(m, path.string());
    const ModelParams back = load_model(path.string());
    std::filesystem::remove(path);

    REQUIRE(back.spec.ar_lags == m.spec.ar_lags);
    REQUIRE(back.spec.exo_lags == m.spec.exo_lags);
    REQUIRE(back.spec.seasonal_lag == m.spec.seasonal_lag);
    REQUIRE(back.ar_coeffs == m.ar_coeffs);
    REQUIRE(back.exo_coeffs == m.exo_coeffs);
    REQUIRE(back.fit_residual_rms == m.fit_residual_rms);
    REQUIRE(back.fit_rows == m.fit_rows);
}

TEST_CASE("ensemble weights round-trip through kvdoc files", "[timeseries]") {
    EnsembleWeights w;
    w.framework = EnsembleFramework::TimeOrder;
    w.boundaries = kTimeOrderBoundaries;
    Rng rng(13);
    for (std::size_t g = 0; g < w.boundaries.size(); ++g)
        w.weights.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    w.diagnostics.assign(w.boundaries.size(), {});
    w.validate();

    const auto path = temp_file("weights");
    save_weights(w, path.string());
    const EnsembleWeights back = load_weights(path.string());
    std::filesystem::remove(path);

    REQUIRE(back.framework == w.framework);
    REQUIRE(back.boundaries == w.boundaries);
    REQUIRE(back.weights == w.weights);
}
