#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace helioforge {

// Unix time in whole seconds, UTC. All timestamps in the toolkit use this.
using UnixTime = std::int64_t;

namespace detail {

// Days since 1970-01-01 for a proleptic Gregorian civil date.
constexpr std::int64_t days_from_civil(std::int64_t y, int m, int d) noexcept {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
    std::int64_t year;
    int month;
    int day;
};

constexpr CivilDate civil_from_days(std::int64_t z) noexcept {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

}  // namespace detail

constexpr UnixTime make_utc(std::int64_t year, int month, int day, int hour = 0, int minute = 0,
                            int second = 0) noexcept {
    return detail::days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
}

/// Format as ISO-8601 UTC, e.g. "2017-06-01T00:15:00Z".
inline std::string format_iso8601(UnixTime t) {
    std::int64_t days = t / 86400;
    std::int64_t sod = t % 86400;
    if (sod < 0) {
        sod += 86400;
        days -= 1;
    }
    const auto cd = detail::civil_from_days(days);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02d-%02dT%02d:%02d:%02dZ",
                  static_cast<long long>(cd.year), cd.month, cd.day, static_cast<int>(sod / 3600),
                  static_cast<int>((sod / 60) % 60), static_cast<int>(sod % 60));
    return buf;
}

/// Filesystem-safe variant (colons replaced by dashes).
inline std::string format_iso8601_file(UnixTime t) {
    std::string s = format_iso8601(t);
    for (char& c : s)
        if (c == ':') c = '-';
    return s;
}

/// Parse "YYYY-MM-DDTHH:MM:SS[Z]" or "YYYY-MM-DD HH:MM:SS" (UTC assumed).
/// A bare date "YYYY-MM-DD" parses as midnight.
inline UnixTime parse_iso8601(std::string_view s) {
    auto bad = [&] { throw std::invalid_argument("bad timestamp: " + std::string(s)); };
    auto digits = [&](std::size_t pos, int n) -> std::int64_t {
        std::int64_t v = 0;
        if (pos + n > s.size()) bad();
        for (int i = 0; i < n; ++i) {
            const char c = s[pos + i];
            if (c < '0' || c > '9') bad();
            v = v * 10 + (c - '0');
        }
        return v;
    };
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') bad();
    const std::int64_t year = digits(0, 4);
    const int month = static_cast<int>(digits(5, 2));
    const int day = static_cast<int>(digits(8, 2));
    if (month < 1 || month > 12 || day < 1 || day > 31) bad();
    int hour = 0, minute = 0, second = 0;
    if (s.size() > 10) {
        if ((s[10] != 'T' && s[10] != ' ') || s.size() < 19 || s[13] != ':' || s[16] != ':') bad();
        hour = static_cast<int>(digits(11, 2));
        minute = static_cast<int>(digits(14, 2));
        second = static_cast<int>(digits(17, 2));
        if (hour > 23 || minute > 59 || second > 60) bad();
        if (s.size() > 19 && !(s.size() == 20 && s[19] == 'Z')) bad();
    }
    return make_utc(year, month, day, hour, minute, second);
}

/// Seconds past midnight UTC.
inline std::int64_t seconds_of_day(UnixTime t) noexcept {
    std::int64_t sod = t % 86400;
    if (sod < 0) sod += 86400;
    return sod;
}

/// Time-of-day index in 1..(86400/step) for a grid of the given step.
inline int instant_of_day(UnixTime t, std::int64_t step) noexcept {
    return static_cast<int>(seconds_of_day(t) / step) + 1;
}

}  // namespace helioforge
