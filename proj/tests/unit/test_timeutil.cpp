#include <doctest.h>

#include "eidolink/timeutil.hpp"

using namespace eidolink;

TEST_CASE("parse and format keep the original offset") {
    Instant t = parse_instant("2026-01-01T12:20:00-08:00");
    CHECK(t.offset_minutes == -480);
    CHECK(t.to_string() == "2026-01-01T12:20:00-08:00");
    // 20:20 UTC
    CHECK(t.epoch_micros == 1767298800LL * 1000000);
}

TEST_CASE("zulu designator round-trips as Z") {
    Instant t = parse_instant("2026-01-01T00:00:00Z");
    CHECK(t.zulu);
    CHECK(t.offset_minutes == 0);
    CHECK(t.to_string() == "2026-01-01T00:00:00Z");

    Instant u = parse_instant("2026-01-01T00:00:00+00:00");
    CHECK_FALSE(u.zulu);
    CHECK(u.to_string() == "2026-01-01T00:00:00+00:00");
    CHECK(u.epoch_micros == t.epoch_micros);
    CHECK(t != u);  // structural equality keeps the spelling
}

TEST_CASE("fractional seconds survive") {
    Instant t = parse_instant("2026-03-05T08:30:15.25+01:00");
    CHECK(t.to_string() == "2026-03-05T08:30:15.25+01:00");
    Instant u = parse_instant(t.to_string());
    CHECK(u == t);
}

TEST_CASE("missing offset is rejected") {
    CHECK_THROWS_AS(parse_instant("2026-01-01T12:20:00"), TimeParseError);
    CHECK_THROWS_AS(parse_instant("2026-01-01 12:20"), TimeParseError);
    CHECK_THROWS_AS(parse_instant("not a timestamp"), TimeParseError);
}

TEST_CASE("calendar validation") {
    CHECK_THROWS_AS(Instant::from_civil(2026, 2, 30, 0, 0, 0, 0), TimeParseError);
    CHECK_THROWS_AS(Instant::from_civil(2026, 13, 1, 0, 0, 0, 0), TimeParseError);
    CHECK_NOTHROW(Instant::from_civil(2024, 2, 29, 0, 0, 0, 0));   // leap year
    CHECK_THROWS_AS(Instant::from_civil(2026, 2, 29, 0, 0, 0, 0), TimeParseError);
    CHECK_THROWS_AS(Instant::from_civil(2026, 1, 1, 24, 0, 0, 0), TimeParseError);
}

TEST_CASE("offset arithmetic crosses midnight correctly") {
    Instant t = parse_instant("2026-01-01T01:30:00+05:30");
    // 2025-12-31T20:00:00Z
    CHECK(t.to_string() == "2026-01-01T01:30:00+05:30");
    Instant utc = parse_instant("2025-12-31T20:00:00Z");
    CHECK(t.epoch_micros == utc.epoch_micros);
}

TEST_CASE("duration formats") {
    CHECK(parse_duration("0:45:00") == std::chrono::minutes(45));
    CHECK(parse_duration("1:05:30") == std::chrono::seconds(3930));
    CHECK(parse_duration("45 min") == std::chrono::minutes(45));
    CHECK(parse_duration("45") == std::chrono::minutes(45));
    CHECK(parse_duration(" 20 minutes ") == std::chrono::minutes(20));
    CHECK_THROWS_AS(parse_duration("abc"), TimeParseError);
    CHECK_THROWS_AS(parse_duration(""), TimeParseError);
    CHECK_THROWS_AS(parse_duration("1:99:00"), TimeParseError);
}
