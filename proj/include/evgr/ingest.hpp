#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "evgr/store.hpp"
#include "evgr/time.hpp"

namespace evgr {

// One case with its events in execution order.
struct TraceRecord {
  std::string case_name;
  std::vector<EventInput> events;
  bool repaired = false;  // true when the parser had to reorder by timestamp
};

// Streaming producer of trace records; parsers implement this so ingest
// never needs the whole log in memory (the CSV path is the exception, it
// buffers to group rows by case).
class TraceSource {
 public:
  virtual ~TraceSource() = default;
  virtual std::optional<TraceRecord> next() = 0;
};

class VectorSource : public TraceSource {
 public:
  explicit VectorSource(std::vector<TraceRecord> records)
      : records_(std::move(records)) {}
  std::optional<TraceRecord> next() override {
    if (pos_ >= records_.size()) return std::nullopt;
    return records_[pos_++];
  }

 private:
  std::vector<TraceRecord> records_;
  size_t pos_ = 0;
};

// Parses the XES subset: log/trace/event elements with <string> and
// <date> children; "concept:name" names cases and activities,
// "time:timestamp" dates events. Everything else is skipped. Traces with
// non-monotone timestamps are repaired by a stable sort.
class XesParser : public TraceSource {
 public:
  explicit XesParser(std::istream& in);
  ~XesParser() override;
  std::optional<TraceRecord> next() override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ColumnMapping {
  std::string case_column;
  std::string activity_column;
  std::string timestamp_column;
  std::string time_format = "iso8601";
};

// RFC 4180 CSV with a required header row. Rows are grouped by the case
// column (groups emitted in first-appearance order), kept in file order
// within a case and stably sorted by timestamp.
class CsvParser : public TraceSource {
 public:
  CsvParser(std::istream& in, ColumnMapping mapping);
  ~CsvParser() override;
  std::optional<TraceRecord> next() override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct IngestStats {
  uint64_t traces = 0;
  uint64_t events = 0;
  uint64_t activities = 0;  // activities new to the store
  uint64_t repairs = 0;     // traces whose event order was repaired
};

// Loads every record into `store` under a new log named `log_name`.
// The stored subgraph is sound by construction.
IngestStats ingest(TraceSource& source, GraphStore& store,
                   const std::string& log_name);

// Dumps every trace in the store as "case,activity,timestamp" rows
// (ISO-8601 instants), suitable for re-ingesting via CsvParser. Loads the
// store into memory to walk the chains.
void export_csv(const GraphStore& store, std::ostream& out);

}  // namespace evgr
