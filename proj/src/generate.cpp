#include "evgr/generate.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <vector>

#include "evgr/error.hpp"

namespace evgr {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Bounded draw via the multiply-shift reduction; stable across platforms,
// unlike std::uniform_int_distribution.
uint64_t bounded(std::mt19937_64& rng, uint64_t n) {
  return uint64_t((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

constexpr int64_t kMinGapMs = 1000;
constexpr int64_t kMaxGapMs = 30 * 60000;

uint32_t digits(uint32_t n) {
  uint32_t d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (events_min < 1 || events_min > events_max)
    throw_error(Errc::ParseError, "events-per-trace bounds must satisfy 1 <= min <= max");
  if (alphabet < 1) throw_error(Errc::ParseError, "alphabet must be at least 1");
  if (span_ms < 1) throw_error(Errc::ParseError, "span must be positive");
}

std::string synthetic_activity_name(uint32_t ix, uint32_t alphabet) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "a%0*u", int(digits(alphabet)), ix + 1);
  return buf;
}

struct SyntheticSource::Impl {
  SyntheticSpec spec;
  // (start offset, trace index) sorted by arrival
  std::vector<std::pair<int64_t, uint64_t>> arrivals;
  uint64_t pos = 0;

  explicit Impl(const SyntheticSpec& s) : spec(s) {
    spec.validate();
    arrivals.reserve(spec.traces);
    for (uint64_t i = 0; i < spec.traces; ++i) {
      std::mt19937_64 rng(splitmix64(spec.seed ^ i));
      arrivals.emplace_back(int64_t(bounded(rng, uint64_t(spec.span_ms))), i);
    }
    std::sort(arrivals.begin(), arrivals.end());
  }

  TraceRecord make_trace(uint64_t arrival_rank) {
    auto [offset, index] = arrivals[arrival_rank];
    std::mt19937_64 rng(splitmix64(spec.seed ^ index));
    bounded(rng, uint64_t(spec.span_ms));  // the offset draw, replayed

    TraceRecord record;
    char name[24];
    std::snprintf(name, sizeof(name), "case_%06llu",
                  static_cast<unsigned long long>(arrival_rank + 1));
    record.case_name = name;

    uint64_t n = spec.events_min + bounded(rng, spec.events_max - spec.events_min + 1);
    Instant ts = spec.start + offset;
    record.events.reserve(n);
    for (uint64_t e = 0; e < n; ++e) {
      uint32_t act = uint32_t(bounded(rng, spec.alphabet));
      record.events.push_back(
          EventInput{synthetic_activity_name(act, spec.alphabet), ts});
      ts += kMinGapMs + int64_t(bounded(rng, uint64_t(kMaxGapMs - kMinGapMs + 1)));
    }
    return record;
  }
};

SyntheticSource::SyntheticSource(const SyntheticSpec& spec)
    : impl_(std::make_unique<Impl>(spec)) {}
SyntheticSource::~SyntheticSource() = default;

std::optional<TraceRecord> SyntheticSource::next() {
  if (impl_->pos >= impl_->arrivals.size()) return std::nullopt;
  return impl_->make_trace(impl_->pos++);
}

void write_synthetic_log(const SyntheticSpec& spec, LogFormat format,
                         std::ostream& out) {
  SyntheticSource source(spec);
  if (format == LogFormat::Csv) {
    out << "case,activity,timestamp\n";
    while (auto record = source.next())
      for (const EventInput& ev : record->events)
        out << record->case_name << ',' << ev.activity << ','
            << format_iso8601(ev.timestamp) << '\n';
    return;
  }

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<log xes.version=\"1.0\" xes.features=\"\">\n";
  while (auto record = source.next()) {
    out << "  <trace>\n";
    out << "    <string key=\"concept:name\" value=\""
        << xml_escape(record->case_name) << "\"/>\n";
    for (const EventInput& ev : record->events) {
      out << "    <event>\n";
      out << "      <string key=\"concept:name\" value=\""
          << xml_escape(ev.activity) << "\"/>\n";
      out << "      <date key=\"time:timestamp\" value=\""
          << format_iso8601(ev.timestamp) << "\"/>\n";
      out << "    </event>\n";
    }
    out << "  </trace>\n";
  }
  out << "</log>\n";
}

}  // namespace evgr
