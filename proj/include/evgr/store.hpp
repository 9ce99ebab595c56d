#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "evgr/graph.hpp"
#include "evgr/memory.hpp"
#include "evgr/time.hpp"

namespace evgr {

// Counts of everything resident in a store.
struct StoreStats {
  uint64_t logs = 0;
  uint64_t traces = 0;
  uint64_t events = 0;
  uint64_t attributes = 0;
  uint64_t activities = 0;  // activity dictionary size
  uint64_t log_trace_edges = 0;
  uint64_t trace_event_edges = 0;
  uint64_t event_event_edges = 0;
  uint64_t event_attr_edges = 0;

  friend bool operator==(const StoreStats&, const StoreStats&) = default;
};

// What one persist/ingest appended.
struct WriteStats {
  uint64_t logs = 0;
  uint64_t traces = 0;
  uint64_t events = 0;
  uint64_t attributes = 0;
  uint64_t lt_edges = 0;
  uint64_t te_edges = 0;
  uint64_t ee_edges = 0;
  uint64_t ea_edges = 0;
  uint64_t new_activities = 0;
};

// One EventEvent edge with the denormalized fields persisted alongside it.
struct EeEdge {
  uint64_t src = 0;
  uint64_t dst = 0;
  uint32_t src_act = 0;
  uint32_t dst_act = 0;
  Instant src_ts = 0;
  Instant dst_ts = 0;
};

struct EdgeSegment {
  RelationKind kind = RelationKind::EventEvent;
  std::vector<EeEdge> entries;
};

struct EventInput {
  std::string activity;
  Instant timestamp = 0;
};

// EventEvent records per block-summary entry; scan partitions align to it.
inline constexpr uint64_t kEventEdgeBlockRecords = 1024;

class GraphStore;

// Bounded-memory iterator over the EventEvent edge file. Yields segments
// of edges whose both endpoint timestamps lie inside the window. Block
// summaries let the scan skip regions entirely outside the window.
class EdgeScan {
 public:
  ~EdgeScan();
  EdgeScan(EdgeScan&&) noexcept;
  EdgeScan& operator=(EdgeScan&&) noexcept;

  // Returns the next nonempty segment, or nullptr at end of file.
  const EdgeSegment* next();

 private:
  friend class GraphStore;
  struct Impl;
  explicit EdgeScan(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// Streaming writer appending one log and its traces to a store. Produces
// the same bytes the persist path writes for an equivalent repository;
// the store content stays sound by construction. Holds the store's
// writer lock until finish() or destruction.
class LogWriter {
 public:
  ~LogWriter();
  LogWriter(LogWriter&&) noexcept;
  LogWriter& operator=(LogWriter&&) noexcept;

  // Appends a trace with its chained events; events must already be in
  // execution order with non-decreasing timestamps.
  void add_trace(const std::string& case_name, const std::vector<EventInput>& events);

  WriteStats finish();

 private:
  friend class GraphStore;
  struct Impl;
  explicit LogWriter(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// Disk-backed event repository: dictionary-encoded append-only files, one
// per node kind and relation kind (format documented in FORMAT.md).
// One writer at a time per directory; any number of concurrent readers.
class GraphStore {
 public:
  static GraphStore open(const std::filesystem::path& dir, MemoryBudget budget = {});

  GraphStore(GraphStore&&) noexcept;
  GraphStore& operator=(GraphStore&&) noexcept;
  ~GraphStore();

  // Appends a whole repository. The repository must pass soundness
  // validation and must not reuse a log name already in the store.
  WriteStats persist(const EventRepository& repo);

  // Streaming ingest path; errors with DuplicateLog on a known name.
  LogWriter begin_log(const std::string& log_name);

  StoreStats stats() const;

  EdgeScan scan_event_edges(std::optional<TimeWindow> window = std::nullopt) const;
  // Restricts the scan to EventEvent records [first_record, end_record);
  // used to partition work across scan workers.
  EdgeScan scan_event_edges(std::optional<TimeWindow> window, uint64_t first_record,
                            uint64_t end_record) const;

  // Full read-back into an in-memory repository (node ids preserved).
  EventRepository load() const;

  const std::vector<std::string>& activities() const;
  std::optional<uint32_t> activity_id(std::string_view name) const;
  bool has_log(std::string_view name) const;
  std::vector<std::string> log_names() const;

  // Min/max event timestamp, from the event file; nullopt when empty.
  std::optional<std::pair<Instant, Instant>> event_time_range() const;

  // Every event timestamp in file order (materialized; the bench harness
  // sorts these once to count events per window).
  std::vector<Instant> event_timestamps() const;

  uint64_t event_edge_count() const;

  const std::filesystem::path& dir() const;
  MemoryBudget budget() const;
  MemoryTracker& tracker() const;

  struct Impl;

 private:
  explicit GraphStore(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace evgr
