#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace evgr {

// All timestamps in the library are UTC milliseconds since the Unix epoch.
using Instant = int64_t;

// Parses an ISO-8601 instant: "YYYY-MM-DD", optionally followed by
// "T" or " " and "HH:MM:SS", an optional fractional part (first three
// digits kept as milliseconds) and an optional zone ("Z" or +-HH:MM).
// Throws Error{ParseError} on malformed input.
Instant parse_iso8601(std::string_view text);

// Formats as "YYYY-MM-DDTHH:MM:SS.mmmZ" (always UTC, always milliseconds).
std::string format_iso8601(Instant ms);

// Parses a timestamp according to a strftime-like pattern. Supported
// tokens: %Y %m %d %H %M %S %f (fractional seconds, 1..9 digits, kept at
// millisecond precision), %z (zone: Z or +-HH:MM or +-HHMM), %% for a
// literal percent. Any other character must match literally.
// The pattern "iso8601" selects parse_iso8601.
Instant parse_timestamp(std::string_view text, std::string_view pattern);

// Parses durations of the form "<n><unit>" with unit one of
// d, h, m, s, ms. Returns milliseconds.
int64_t parse_duration_ms(std::string_view text);

// Closed interval of instants; an absent bound is unbounded on that side.
struct TimeWindow {
  std::optional<Instant> start;
  std::optional<Instant> end;

  bool contains(Instant t) const {
    return (!start || t >= *start) && (!end || t <= *end);
  }
  // Throws Error{InvalidWindow} when start > end.
  void validate() const;

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

// Calendar helpers (proleptic Gregorian, no leap seconds).
int64_t days_from_civil(int year, unsigned month, unsigned day);
void civil_from_days(int64_t days, int& year, unsigned& month, unsigned& day);

}  // namespace evgr
