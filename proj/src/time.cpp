#include "evgr/time.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

#include "evgr/error.hpp"

namespace evgr {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

int64_t to_int(std::string_view s, std::string_view what) {
  int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw_error(Errc::ParseError, "bad " + std::string(what) + " '" + std::string(s) + "'");
  return value;
}

constexpr std::array<unsigned, 12> kDaysInMonth = {31, 28, 31, 30, 31, 30,
                                                   31, 31, 30, 31, 30, 31};

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned last_day(int y, unsigned m) {
  return (m == 2 && is_leap(y)) ? 29u : kDaysInMonth[m - 1];
}

struct Fields {
  int year = 1970;
  unsigned month = 1, day = 1;
  int hour = 0, minute = 0, second = 0, milli = 0;
  int offset_min = 0;  // zone offset to subtract
};

Instant assemble(const Fields& f, std::string_view original) {
  if (f.month < 1 || f.month > 12 || f.day < 1 || f.day > last_day(f.year, f.month) ||
      f.hour > 23 || f.minute > 59 || f.second > 60)
    throw_error(Errc::ParseError, "timestamp out of range '" + std::string(original) + "'");
  int64_t days = days_from_civil(f.year, f.month, f.day);
  int64_t secs = days * 86400 + f.hour * 3600 + f.minute * 60 + f.second;
  return (secs - int64_t(f.offset_min) * 60) * 1000 + f.milli;
}

// Consumes a zone suffix if present; returns offset minutes.
int parse_zone(std::string_view& rest, std::string_view original) {
  if (rest.empty()) return 0;
  if (rest == "Z" || rest == "z") {
    rest.remove_prefix(1);
    return 0;
  }
  if (rest[0] != '+' && rest[0] != '-') return 0;
  int sign = rest[0] == '-' ? -1 : 1;
  std::string_view body = rest.substr(1);
  int hh = 0, mm = 0;
  size_t used = 0;
  if (body.size() >= 5 && body[2] == ':' && all_digits(body.substr(0, 2)) &&
      all_digits(body.substr(3, 2))) {
    hh = int(to_int(body.substr(0, 2), "zone"));
    mm = int(to_int(body.substr(3, 2), "zone"));
    used = 6;
  } else if (body.size() >= 4 && all_digits(body.substr(0, 4))) {
    hh = int(to_int(body.substr(0, 2), "zone"));
    mm = int(to_int(body.substr(2, 2), "zone"));
    used = 5;
  } else {
    throw_error(Errc::ParseError, "bad zone in '" + std::string(original) + "'");
  }
  rest.remove_prefix(used);
  return sign * (hh * 60 + mm);
}

int milli_from_fraction(std::string_view digits) {
  int ms = 0;
  for (size_t i = 0; i < 3; ++i) {
    ms *= 10;
    if (i < digits.size()) ms += digits[i] - '0';
  }
  return ms;
}

}  // namespace

int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& year, unsigned& month, unsigned& day) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = doy - (153 * mp + 2) / 5 + 1;
  month = mp + (mp < 10 ? 3 : -9);
  year = static_cast<int>(y + (month <= 2));
}

Instant parse_iso8601(std::string_view text) {
  std::string_view rest = text;
  if (rest.size() < 10 || rest[4] != '-' || rest[7] != '-' ||
      !all_digits(rest.substr(0, 4)) || !all_digits(rest.substr(5, 2)) ||
      !all_digits(rest.substr(8, 2)))
    throw_error(Errc::ParseError, "bad timestamp '" + std::string(text) + "'");

  Fields f;
  f.year = int(to_int(rest.substr(0, 4), "year"));
  f.month = unsigned(to_int(rest.substr(5, 2), "month"));
  f.day = unsigned(to_int(rest.substr(8, 2), "day"));
  rest.remove_prefix(10);

  if (!rest.empty() && (rest[0] == 'T' || rest[0] == 't' || rest[0] == ' ')) {
    rest.remove_prefix(1);
    if (rest.size() < 8 || rest[2] != ':' || rest[5] != ':' ||
        !all_digits(rest.substr(0, 2)) || !all_digits(rest.substr(3, 2)) ||
        !all_digits(rest.substr(6, 2)))
      throw_error(Errc::ParseError, "bad time in '" + std::string(text) + "'");
    f.hour = int(to_int(rest.substr(0, 2), "hour"));
    f.minute = int(to_int(rest.substr(3, 2), "minute"));
    f.second = int(to_int(rest.substr(6, 2), "second"));
    rest.remove_prefix(8);
    if (!rest.empty() && (rest[0] == '.' || rest[0] == ',')) {
      rest.remove_prefix(1);
      size_t n = 0;
      while (n < rest.size() && rest[n] >= '0' && rest[n] <= '9') ++n;
      if (n == 0)
        throw_error(Errc::ParseError, "bad fraction in '" + std::string(text) + "'");
      f.milli = milli_from_fraction(rest.substr(0, n));
      rest.remove_prefix(n);
    }
  }
  f.offset_min = parse_zone(rest, text);
  if (!rest.empty())
    throw_error(Errc::ParseError, "trailing junk in '" + std::string(text) + "'");
  return assemble(f, text);
}

std::string format_iso8601(Instant ms) {
  int64_t secs = ms / 1000;
  int64_t rem = ms % 1000;
  if (rem < 0) {
    rem += 1000;
    secs -= 1;
  }
  int64_t days = secs / 86400;
  int64_t sod = secs % 86400;
  if (sod < 0) {
    sod += 86400;
    days -= 1;
  }
  int year;
  unsigned month, day;
  civil_from_days(days, year, month, day);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                year, month, day, static_cast<long long>(sod / 3600),
                static_cast<long long>((sod / 60) % 60),
                static_cast<long long>(sod % 60), static_cast<long long>(rem));
  return buf;
}

Instant parse_timestamp(std::string_view text, std::string_view pattern) {
  if (pattern.empty() || pattern == "iso8601") return parse_iso8601(text);

  Fields f;
  std::string_view rest = text;
  auto take_digits = [&](size_t min_n, size_t max_n, std::string_view what) {
    size_t n = 0;
    while (n < rest.size() && n < max_n && rest[n] >= '0' && rest[n] <= '9') ++n;
    if (n < min_n)
      throw_error(Errc::ParseError, "expected " + std::string(what) + " in '" +
                                        std::string(text) + "'");
    std::string_view d = rest.substr(0, n);
    rest.remove_prefix(n);
    return d;
  };

  for (size_t i = 0; i < pattern.size(); ++i) {
    char c = pattern[i];
    if (c != '%') {
      if (rest.empty() || rest[0] != c)
        throw_error(Errc::ParseError, "timestamp '" + std::string(text) +
                                          "' does not match pattern '" +
                                          std::string(pattern) + "'");
      rest.remove_prefix(1);
      continue;
    }
    if (++i >= pattern.size())
      throw_error(Errc::ParseError, "dangling % in pattern");
    switch (pattern[i]) {
      case 'Y': f.year = int(to_int(take_digits(4, 4, "year"), "year")); break;
      case 'm': f.month = unsigned(to_int(take_digits(1, 2, "month"), "month")); break;
      case 'd': f.day = unsigned(to_int(take_digits(1, 2, "day"), "day")); break;
      case 'H': f.hour = int(to_int(take_digits(1, 2, "hour"), "hour")); break;
      case 'M': f.minute = int(to_int(take_digits(1, 2, "minute"), "minute")); break;
      case 'S': f.second = int(to_int(take_digits(1, 2, "second"), "second")); break;
      case 'f': f.milli = milli_from_fraction(take_digits(1, 9, "fraction")); break;
      case 'z': f.offset_min = parse_zone(rest, text); break;
      case '%':
        if (rest.empty() || rest[0] != '%')
          throw_error(Errc::ParseError, "expected literal % in '" + std::string(text) + "'");
        rest.remove_prefix(1);
        break;
      default:
        throw_error(Errc::ParseError,
                    std::string("unsupported pattern token %") + pattern[i]);
    }
  }
  if (!rest.empty())
    throw_error(Errc::ParseError, "trailing junk in '" + std::string(text) + "'");
  return assemble(f, text);
}

int64_t parse_duration_ms(std::string_view text) {
  size_t n = 0;
  while (n < text.size() && text[n] >= '0' && text[n] <= '9') ++n;
  if (n == 0)
    throw_error(Errc::ParseError, "bad duration '" + std::string(text) + "'");
  int64_t count = to_int(text.substr(0, n), "duration");
  std::string_view unit = text.substr(n);
  if (unit == "d") return count * 86400000;
  if (unit == "h") return count * 3600000;
  if (unit == "m") return count * 60000;
  if (unit == "s") return count * 1000;
  if (unit == "ms") return count;
  throw_error(Errc::ParseError, "bad duration unit '" + std::string(text) + "'");
}

void TimeWindow::validate() const {
  if (start && end && *start > *end)
    throw_error(Errc::InvalidWindow, "window start " + format_iso8601(*start) +
                                         " is after end " + format_iso8601(*end));
}

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::NonemptyRequired: return "NonemptyRequired";
    case Errc::DuplicateLog: return "DuplicateLog";
    case Errc::DuplicateCase: return "DuplicateCase";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::TimestampRegression: return "TimestampRegression";
    case Errc::SoundnessRequired: return "SoundnessRequired";
    case Errc::CorruptStore: return "CorruptStore";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::IoError: return "IoError";
    case Errc::InvalidWindow: return "InvalidWindow";
    case Errc::InvalidDicing: return "InvalidDicing";
    case Errc::ParseError: return "ParseError";
    case Errc::MissingField: return "MissingField";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::PolicyError: return "PolicyError";
    case Errc::UnknownRole: return "UnknownRole";
    case Errc::AccessDenied: return "AccessDenied";
    case Errc::BudgetExceeded: return "BudgetExceeded";
  }
  return "Unknown";
}

}  // namespace evgr
