#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "helioforge/forecast_matrix.hpp"
#include "helioforge/time_series.hpp"

namespace helioforge {

// CSV formats used across the toolkit:
//   measurement series   timestamp,value[,flag]
//   forecast matrix      origin,lead_step,value
//   service feed         issue_time,target_time,value
// Timestamps are ISO-8601 UTC. Numeric fields are written with %.10g, which
// keeps output byte-stable across runs.

namespace csv_detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string format_value(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline bool looks_like_header(const std::string& first_field) {
    return !first_field.empty() && !(first_field[0] >= '0' && first_field[0] <= '9');
}

}  // namespace csv_detail

struct CsvRow {
    UnixTime timestamp;
    double value;
    Flag flag;
};

/// Parse measurement rows (timestamp,value[,flag]). Tolerates a header line.
inline std::vector<CsvRow> read_measurement_rows(std::istream& in, const std::string& name) {
    std::vector<CsvRow> rows;
    std::string line;
    bool first = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = csv_detail::split_line(line);
        if (first && csv_detail::looks_like_header(fields[0])) {
            first = false;
            continue;
        }
        first = false;
        if (fields.size() < 2)
            throw std::runtime_error(name + ": line " + std::to_string(lineno) + ": need timestamp,value");
        CsvRow row;
        row.timestamp = parse_iso8601(fields[0]);
        if (fields[1].empty()) {
            row.value = kMissingValue;
            row.flag = Flag::Missing;
        } else {
            row.value = std::stod(fields[1]);
            row.flag = Flag::Valid;
        }
        if (fields.size() >= 3 && !fields[2].empty()) row.flag = flag_from_name(fields[2]);
        if (row.flag == Flag::Missing) row.value = kMissingValue;
        rows.push_back(row);
    }
    return rows;
}

/// Assemble rows into a uniform series. The step is inferred from the first
/// two rows unless given. Off-grid timestamps within `snap_tolerance` seconds
/// are snapped to the grid; anything farther off is rejected. Grid holes
/// become missing samples.
inline TimeSeries series_from_rows(std::vector<CsvRow> rows, std::int64_t snap_tolerance = 1,
                                   std::int64_t step_hint = 0) {
    if (rows.empty()) throw std::runtime_error("empty input");
    std::sort(rows.begin(), rows.end(),
              [](const CsvRow& a, const CsvRow& b) { return a.timestamp < b.timestamp; });
    std::int64_t step = step_hint;
    if (step <= 0) {
        if (rows.size() < 2) throw std::runtime_error("cannot infer step from a single row");
        step = rows[1].timestamp - rows[0].timestamp;
        if (step <= 0) throw std::runtime_error("duplicate leading timestamps");
    }
    TimeSeries ts;
    ts.start_time = rows[0].timestamp;
    ts.step = step;
    for (const CsvRow& row : rows) {
        const std::int64_t d = row.timestamp - ts.start_time;
        std::int64_t idx = (d + step / 2) / step;  // nearest grid point
        if (idx < 0) idx = 0;
        const std::int64_t off = d - idx * step;
        if (off > snap_tolerance || off < -snap_tolerance)
            throw std::runtime_error("irregular timestamps: " + format_iso8601(row.timestamp) +
                                     " is " + std::to_string(off) + "s off the grid");
        while (static_cast<std::int64_t>(ts.size()) < idx)
            ts.push_back(kMissingValue, Flag::Missing);
        if (static_cast<std::int64_t>(ts.size()) == idx) {
            ts.push_back(row.value, row.flag);
        }
        // duplicate timestamp: first row wins
    }
    ts.validate();
    return ts;
}

inline TimeSeries read_series_csv(const std::string& path, std::int64_t snap_tolerance = 1,
                                  std::int64_t step_hint = 0) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return series_from_rows(read_measurement_rows(in, path), snap_tolerance, step_hint);
}

inline void write_series_csv(std::ostream& out, const TimeSeries& ts) {
    out << "timestamp,value,flag\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        out << format_iso8601(ts.time_at(i)) << ',' << csv_detail::format_value(ts.values[i])
            << ',' << flag_name(ts.flags[i]) << '\n';
    }
}

inline void write_series_csv(const std::string& path, const TimeSeries& ts) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_series_csv(out, ts);
}

inline void write_forecast_csv(std::ostream& out, const ForecastMatrix& fm) {
    out << "origin,lead_step,value\n";
    for (std::size_t i = 0; i < fm.size(); ++i) {
        const std::string origin = format_iso8601(fm.origins[i]);
        for (int h = 1; h <= fm.horizon; ++h)
            out << origin << ',' << h << ',' << csv_detail::format_value(fm.at(i, h)) << '\n';
    }
}

inline void write_forecast_csv(const std::string& path, const ForecastMatrix& fm) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_forecast_csv(out, fm);
}

inline ForecastMatrix read_forecast_csv(const std::string& path, std::int64_t step = 900) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    ForecastMatrix fm;
    fm.step = step;
    fm.horizon = 0;
    std::string line;
    bool first = true;
    UnixTime cur_origin = 0;
    std::vector<double> cur_row;
    auto flush = [&] {
        if (!cur_row.empty()) {
            if (fm.horizon == 0) fm.horizon = static_cast<int>(cur_row.size());
            fm.add_row(cur_origin, cur_row);
            cur_row.clear();
        }
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = csv_detail::split_line(line);
        if (first && csv_detail::looks_like_header(fields[0])) {
            first = false;
            continue;
        }
        first = false;
        if (fields.size() < 3) throw std::runtime_error(path + ": need origin,lead_step,value");
        const UnixTime origin = parse_iso8601(fields[0]);
        if (cur_row.empty())
            cur_origin = origin;
        else if (origin != cur_origin) {
            flush();
            cur_origin = origin;
        }
        cur_row.push_back(fields[2].empty() ? kMissingValue : std::stod(fields[2]));
    }
    flush();
    fm.validate();
    return fm;
}

struct ServiceRow {
    UnixTime issue_time;
    UnixTime target_time;
    double value;
};

inline std::vector<ServiceRow> read_service_rows(std::istream& in, const std::string& name) {
    std::vector<ServiceRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = csv_detail::split_line(line);
        if (first && csv_detail::looks_like_header(fields[0])) {
            first = false;
            continue;
        }
        first = false;
        if (fields.size() < 3)
            throw std::runtime_error(name + ": need issue_time,target_time,value");
        rows.push_back({parse_iso8601(fields[0]), parse_iso8601(fields[1]),
                        fields[2].empty() ? kMissingValue : std::stod(fields[2])});
    }
    return rows;
}

/// Group (issue,target,value) rows into per-issue coarse series.
inline ServiceFeed service_feed_from_rows(std::vector<ServiceRow> rows,
                                          std::int64_t coarse_step = 10800) {
    std::sort(rows.begin(), rows.end(), [](const ServiceRow& a, const ServiceRow& b) {
        return a.issue_time != b.issue_time ? a.issue_time < b.issue_time
                                            : a.target_time < b.target_time;
    });
    ServiceFeed feed;
    for (std::size_t i = 0; i < rows.size();) {
        const UnixTime issue = rows[i].issue_time;
        ForecastIssue fi;
        fi.issue_time = issue;
        fi.values.start_time = rows[i].target_time;
        fi.values.step = coarse_step;
        for (; i < rows.size() && rows[i].issue_time == issue; ++i) {
            const std::int64_t idx = (rows[i].target_time - fi.values.start_time) / coarse_step;
            while (static_cast<std::int64_t>(fi.values.size()) < idx)
                fi.values.push_back(kMissingValue, Flag::Missing);
            if (static_cast<std::int64_t>(fi.values.size()) == idx)
                fi.values.push_back(rows[i].value,
                                    is_missing(rows[i].value) ? Flag::Missing : Flag::Valid);
        }
        feed.issues.push_back(std::move(fi));
    }
    return feed;
}

inline ServiceFeed read_service_csv(const std::string& path, std::int64_t coarse_step = 10800) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return service_feed_from_rows(read_service_rows(in, path), coarse_step);
}

inline void write_service_csv(std::ostream& out, const ServiceFeed& feed) {
    out << "issue_time,target_time,value\n";
    for (const auto& iss : feed.issues) {
        const std::string issue = format_iso8601(iss.issue_time);
        for (std::size_t i = 0; i < iss.values.size(); ++i)
            out << issue << ',' << format_iso8601(iss.values.time_at(i)) << ','
                << csv_detail::format_value(iss.values.values[i]) << '\n';
    }
}

inline void write_service_csv(const std::string& path, const ServiceFeed& feed) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_service_csv(out, feed);
}

}  // namespace helioforge
