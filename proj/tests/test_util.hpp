#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evgr/error.hpp"
#include "evgr/graph.hpp"
#include "evgr/ingest.hpp"
#include "evgr/store.hpp"
#include "evgr/time.hpp"

namespace evgr::test {

// The Errc a callable throws, or nullopt when it does not throw.
template <typename Fn>
std::optional<Errc> error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;

  TempDir() {
    static std::atomic<uint64_t> counter{0};
    path = fs::temp_directory_path() /
           ("evgr-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter.fetch_add(1)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;

  fs::path operator/(const std::string& name) const { return path / name; }
};

// 2020-01-01T00:00:00Z
inline constexpr Instant kT0 = 1577836800000;
inline constexpr Instant kHour = 3600000;

// The worked-example repository: one log, two traces
// t1 = a1 a2 a3 (00:00, 01:00, 02:00) and t2 = a2 a3 a4 (10:00, 11:00, 12:00).
struct Fixture {
  EventRepository repo;
  NodeId log, t1, t2;
  NodeId e[6];
};

inline Fixture make_fixture() {
  Fixture f;
  f.log = f.repo.add_log("l1");
  f.t1 = f.repo.add_trace(f.log, "t1");
  f.e[0] = f.repo.append_event(f.t1, "a1", kT0);
  f.e[1] = f.repo.append_event(f.t1, "a2", kT0 + 1 * kHour);
  f.e[2] = f.repo.append_event(f.t1, "a3", kT0 + 2 * kHour);
  f.t2 = f.repo.add_trace(f.log, "t2");
  f.e[3] = f.repo.append_event(f.t2, "a2", kT0 + 10 * kHour);
  f.e[4] = f.repo.append_event(f.t2, "a3", kT0 + 11 * kHour);
  f.e[5] = f.repo.append_event(f.t2, "a4", kT0 + 12 * kHour);
  return f;
}

inline std::vector<TraceRecord> fixture_records() {
  return {
      TraceRecord{"t1",
                  {{"a1", kT0}, {"a2", kT0 + 1 * kHour}, {"a3", kT0 + 2 * kHour}},
                  false},
      TraceRecord{"t2",
                  {{"a2", kT0 + 10 * kHour},
                   {"a3", kT0 + 11 * kHour},
                   {"a4", kT0 + 12 * kHour}},
                  false},
  };
}

inline std::string fixture_xes() {
  std::string xes = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<log>\n";
  for (const TraceRecord& trace : fixture_records()) {
    xes += "  <trace>\n    <string key=\"concept:name\" value=\"" +
           trace.case_name + "\"/>\n";
    for (const EventInput& ev : trace.events) {
      xes += "    <event>\n";
      xes += "      <string key=\"concept:name\" value=\"" + ev.activity + "\"/>\n";
      xes += "      <date key=\"time:timestamp\" value=\"" +
             format_iso8601(ev.timestamp) + "\"/>\n";
      xes += "    </event>\n";
    }
    xes += "  </trace>\n";
  }
  xes += "</log>\n";
  return xes;
}

// Repository built through the high-level API only, so it is sound by
// construction; sizes stay under the given caps.
inline EventRepository random_repo(uint64_t seed, uint64_t max_traces = 20,
                                   uint64_t max_events = 200,
                                   uint32_t max_activities = 8) {
  std::mt19937_64 rng(seed);
  auto draw = [&](uint64_t n) { return n == 0 ? 0 : rng() % n; };

  EventRepository repo;
  NodeId log = repo.add_log("log_" + std::to_string(seed));
  uint64_t traces = draw(max_traces + 1);
  uint64_t events_left = max_events;
  for (uint64_t t = 0; t < traces; ++t) {
    NodeId trace = repo.add_trace(log, "case_" + std::to_string(t));
    uint64_t n = std::min<uint64_t>(1 + draw(12), events_left);
    Instant ts = kT0 + Instant(draw(1000)) * 60000;
    for (uint64_t e = 0; e < n; ++e) {
      uint32_t act = uint32_t(draw(max_activities)) + 1;
      repo.append_event(trace, "a" + std::to_string(act), ts);
      ts += Instant(draw(90000));  // gaps of 0..90s, duplicates allowed
    }
    events_left -= n;
    if (events_left == 0) break;
  }
  return repo;
}

inline std::vector<TraceRecord> records_of(const EventRepository& repo) {
  std::vector<TraceRecord> out;
  repo.for_each_node([&](NodeId id, NodeKind kind) {
    if (kind != NodeKind::Trace) return;
    TraceRecord record;
    record.case_name = repo.attribute(id).val;
    std::vector<NodeId> events;
    for (NodeId n : repo.successors(id))
      if (repo.kind(n) == NodeKind::Event) events.push_back(n);
    std::sort(events.begin(), events.end(), [&](NodeId a, NodeId b) {
      return repo.event(a).ordinal < repo.event(b).ordinal;
    });
    for (NodeId ev : events) {
      std::string activity;
      for (NodeId n : repo.successors(ev))
        if (repo.kind(n) == NodeKind::Attribute &&
            repo.attribute(n).key == kActivityKey)
          activity = repo.attribute(n).val;
      record.events.push_back(EventInput{activity, repo.event(ev).timestamp});
    }
    out.push_back(std::move(record));
  });
  return out;
}

}  // namespace evgr::test
