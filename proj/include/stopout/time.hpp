#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace stopout {

// Seconds since the Unix epoch, UTC, second resolution.
using Timestamp = std::int64_t;

constexpr std::int64_t seconds_per_day = 86400;

namespace detail {

// Howard Hinnant's days-from-civil algorithm (public domain).
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

}  // namespace detail

// Parses an RFC-3339 timestamp such as "2013-11-10T08:46:21Z".
// A space is accepted in place of 'T', fractional seconds are truncated,
// and a missing offset is read as UTC.
inline std::optional<Timestamp> parse_rfc3339(std::string_view s) {
    auto digit = [&](size_t i) -> int {
        if (i >= s.size() || s[i] < '0' || s[i] > '9') return -1;
        return s[i] - '0';
    };
    auto num2 = [&](size_t i) -> int {
        int a = digit(i), b = digit(i + 1);
        if (a < 0 || b < 0) return -1;
        return a * 10 + b;
    };
    if (s.size() < 19) return std::nullopt;
    int y = 0;
    for (size_t i = 0; i < 4; ++i) {
        int d = digit(i);
        if (d < 0) return std::nullopt;
        y = y * 10 + d;
    }
    if (s[4] != '-' || s[7] != '-') return std::nullopt;
    int mo = num2(5), dy = num2(8);
    if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') return std::nullopt;
    int hh = num2(11), mi = num2(14), ss = num2(17);
    if (s[13] != ':' || s[16] != ':') return std::nullopt;
    if (mo < 1 || mo > 12 || dy < 1 || dy > 31) return std::nullopt;
    if (hh < 0 || hh > 23 || mi < 0 || mi > 59 || ss < 0 || ss > 60) return std::nullopt;

    size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        size_t frac = 0;
        while (pos < s.size() && digit(pos) >= 0) {
            ++pos;
            ++frac;
        }
        if (frac == 0) return std::nullopt;
    }
    std::int64_t offset = 0;
    if (pos < s.size()) {
        char c = s[pos];
        if (c == 'Z' || c == 'z') {
            ++pos;
        } else if (c == '+' || c == '-') {
            int oh = num2(pos + 1);
            if (pos + 5 >= s.size() || s[pos + 3] != ':') return std::nullopt;
            int om = num2(pos + 4);
            if (oh < 0 || oh > 23 || om < 0 || om > 59) return std::nullopt;
            offset = (c == '+' ? 1 : -1) * (oh * 3600 + om * 60);
            pos += 6;
        }
    }
    if (pos != s.size()) return std::nullopt;

    std::int64_t days = detail::days_from_civil(y, mo, dy);
    return days * seconds_per_day + hh * 3600 + mi * 60 + ss - offset;
}

inline std::string format_rfc3339(Timestamp t) {
    std::int64_t days = t >= 0 ? t / seconds_per_day : (t - seconds_per_day + 1) / seconds_per_day;
    std::int64_t sod = t - days * seconds_per_day;
    int y, m, d;
    detail::civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                  static_cast<int>(sod / 3600), static_cast<int>(sod / 60 % 60),
                  static_cast<int>(sod % 60));
    return buf;
}

inline std::int64_t seconds_after_midnight(Timestamp t) {
    std::int64_t r = t % seconds_per_day;
    return r < 0 ? r + seconds_per_day : r;
}

}  // namespace stopout
