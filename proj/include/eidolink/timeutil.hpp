#pragma once

// ISO 8601 instants with an explicit UTC offset.
//
// An Instant keeps the offset it was written with, so a record issued at
// "2026-01-01T12:20:00-08:00" round-trips verbatim instead of being folded
// into UTC. Equality is structural (same moment AND same offset spelling);
// ordering helpers compare the underlying moment.

#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace eidolink {

struct TimeParseError : std::runtime_error {
    explicit TimeParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Days since 1970-01-01 for a proleptic Gregorian civil date.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    unsigned yoe = static_cast<unsigned>(y - era * 400);
    unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    unsigned doe = static_cast<unsigned>(z - era * 146097);
    unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = yr + (m <= 2);
}

inline bool valid_civil_date(std::int64_t y, unsigned m, unsigned d) {
    if (m < 1 || m > 12 || d < 1) return false;
    static const unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    unsigned dim = kDays[m - 1];
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) dim = 29;
    return d <= dim;
}

struct Instant {
    std::int64_t epoch_micros = 0;  // microseconds since the Unix epoch, UTC
    std::int32_t offset_minutes = 0;
    bool zulu = false;  // written as "Z" rather than "+00:00"

    bool operator==(const Instant&) const = default;

    std::chrono::microseconds since_epoch() const {
        return std::chrono::microseconds(epoch_micros);
    }

    static Instant from_civil(std::int64_t year, unsigned month, unsigned day, unsigned hour,
                              unsigned minute, unsigned second, std::int32_t offset_minutes,
                              std::int64_t micros = 0) {
        if (!valid_civil_date(year, month, day))
            throw TimeParseError("invalid calendar date");
        if (hour > 23 || minute > 59 || second > 59)
            throw TimeParseError("invalid time of day");
        std::int64_t days = days_from_civil(year, month, day);
        std::int64_t local_secs = days * 86400 + hour * 3600 + minute * 60 + second;
        std::int64_t utc_secs = local_secs - static_cast<std::int64_t>(offset_minutes) * 60;
        Instant out;
        out.epoch_micros = utc_secs * 1000000 + micros;
        out.offset_minutes = offset_minutes;
        return out;
    }

    std::string to_string() const {
        std::int64_t local_micros =
            epoch_micros + static_cast<std::int64_t>(offset_minutes) * 60 * 1000000;
        std::int64_t micros = local_micros % 1000000;
        std::int64_t secs = local_micros / 1000000;
        if (micros < 0) {
            micros += 1000000;
            secs -= 1;
        }
        std::int64_t days = secs / 86400;
        std::int64_t rem = secs % 86400;
        if (rem < 0) {
            rem += 86400;
            days -= 1;
        }
        std::int64_t y;
        unsigned mo, d;
        civil_from_days(days, y, mo, d);
        unsigned h = static_cast<unsigned>(rem / 3600);
        unsigned mi = static_cast<unsigned>((rem % 3600) / 60);
        unsigned s = static_cast<unsigned>(rem % 60);

        char buf[48];
        std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02u:%02u:%02u",
                      static_cast<long long>(y), mo, d, h, mi, s);
        std::string out(buf);
        if (micros != 0) {
            std::snprintf(buf, sizeof buf, ".%06lld", static_cast<long long>(micros));
            std::string frac(buf);
            while (frac.back() == '0') frac.pop_back();
            out += frac;
        }
        if (zulu && offset_minutes == 0) {
            out += 'Z';
        } else {
            std::int32_t off = offset_minutes;
            char sign = off < 0 ? '-' : '+';
            if (off < 0) off = -off;
            std::snprintf(buf, sizeof buf, "%c%02d:%02d", sign, off / 60, off % 60);
            out += buf;
        }
        return out;
    }
};

inline bool instant_before(const Instant& a, const Instant& b) {
    return a.epoch_micros < b.epoch_micros;
}

// Parses "YYYY-MM-DDThh:mm:ss[.frac](Z|±hh:mm|±hhmm)". The offset designator
// is mandatory.
inline Instant parse_instant(std::string_view s) {
    auto fail = [&](const char* why) {
        throw TimeParseError(std::string(why) + ": '" + std::string(s) + "'");
    };
    auto digit = [&](size_t i) -> int {
        if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
            fail("malformed timestamp");
        return s[i] - '0';
    };
    if (s.size() < 20) fail("timestamp too short");
    std::int64_t year = digit(0) * 1000 + digit(1) * 100 + digit(2) * 10 + digit(3);
    if (s[4] != '-') fail("malformed timestamp");
    unsigned month = static_cast<unsigned>(digit(5) * 10 + digit(6));
    if (s[7] != '-') fail("malformed timestamp");
    unsigned day = static_cast<unsigned>(digit(8) * 10 + digit(9));
    if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') fail("malformed timestamp");
    unsigned hour = static_cast<unsigned>(digit(11) * 10 + digit(12));
    if (s[13] != ':') fail("malformed timestamp");
    unsigned minute = static_cast<unsigned>(digit(14) * 10 + digit(15));
    if (s[16] != ':') fail("malformed timestamp");
    unsigned second = static_cast<unsigned>(digit(17) * 10 + digit(18));
    size_t pos = 19;

    std::int64_t micros = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::int64_t scale = 100000;
        size_t ndig = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            if (ndig < 6) micros += (s[pos] - '0') * scale;
            scale /= 10;
            ++ndig;
            ++pos;
        }
        if (ndig == 0) fail("empty fraction");
    }

    if (pos >= s.size()) fail("missing UTC offset");
    bool zulu = false;
    std::int32_t offset_minutes = 0;
    char c = s[pos];
    if (c == 'Z' || c == 'z') {
        zulu = true;
        ++pos;
    } else if (c == '+' || c == '-') {
        int sign = c == '-' ? -1 : 1;
        ++pos;
        int oh = digit(pos) * 10 + digit(pos + 1);
        pos += 2;
        if (pos < s.size() && s[pos] == ':') ++pos;
        int om = digit(pos) * 10 + digit(pos + 1);
        pos += 2;
        if (oh > 18 || om > 59) fail("offset out of range");
        offset_minutes = sign * (oh * 60 + om);
    } else {
        fail("missing UTC offset");
    }
    if (pos != s.size()) fail("trailing characters after timestamp");

    Instant out = Instant::from_civil(year, month, day, hour, minute, second, offset_minutes,
                                      micros);
    out.zulu = zulu;
    return out;
}

inline std::optional<Instant> try_parse_instant(std::string_view s) {
    try {
        return parse_instant(s);
    } catch (const TimeParseError&) {
        return std::nullopt;
    }
}

// Durations in "H:MM:SS", "<n> min", or bare integer minutes.
inline std::chrono::seconds parse_duration(std::string_view raw) {
    std::string s;
    for (char c : raw) s.push_back(c);
    // trim
    size_t b = s.find_first_not_of(" \t\r\n");
    size_t e = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) throw TimeParseError("empty duration");
    s = s.substr(b, e - b + 1);

    size_t c1 = s.find(':');
    if (c1 != std::string::npos) {
        size_t c2 = s.find(':', c1 + 1);
        if (c2 == std::string::npos) throw TimeParseError("duration must be H:MM:SS");
        try {
            long h = std::stol(s.substr(0, c1));
            long m = std::stol(s.substr(c1 + 1, c2 - c1 - 1));
            long sec = std::stol(s.substr(c2 + 1));
            if (h < 0 || m < 0 || m > 59 || sec < 0 || sec > 59)
                throw TimeParseError("duration component out of range");
            return std::chrono::seconds(h * 3600 + m * 60 + sec);
        } catch (const std::invalid_argument&) {
            throw TimeParseError("malformed duration: '" + s + "'");
        }
    }

    std::string digits;
    size_t i = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        digits.push_back(s[i]);
        ++i;
    }
    if (digits.empty()) throw TimeParseError("malformed duration: '" + s + "'");
    std::string rest = s.substr(i);
    size_t rb = rest.find_first_not_of(" \t");
    rest = rb == std::string::npos ? "" : rest.substr(rb);
    std::string rest_lower;
    for (char c : rest) rest_lower.push_back(std::tolower(static_cast<unsigned char>(c)));
    if (!rest_lower.empty() && rest_lower != "min" && rest_lower != "mins" &&
        rest_lower != "minutes" && rest_lower != "minute" && rest_lower != "m")
        throw TimeParseError("malformed duration: '" + s + "'");
    return std::chrono::minutes(std::stol(digits));
}

}  // namespace eidolink
