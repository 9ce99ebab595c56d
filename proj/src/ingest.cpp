#include "evgr/ingest.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "evgr/error.hpp"
#include "evgr/graph.hpp"
#include "xml_reader.hpp"

namespace evgr {

namespace {

bool needs_repair(const std::vector<EventInput>& events) {
  for (size_t i = 1; i < events.size(); ++i)
    if (events[i].timestamp < events[i - 1].timestamp) return true;
  return false;
}

void repair_order(TraceRecord& record) {
  if (!needs_repair(record.events)) return;
  std::stable_sort(record.events.begin(), record.events.end(),
                   [](const EventInput& a, const EventInput& b) {
                     return a.timestamp < b.timestamp;
                   });
  record.repaired = true;
}

}  // namespace

// ---------------------------------------------------------------------------
// XES

struct XesParser::Impl {
  detail::XmlReader reader;
  bool in_log = false;
  bool done = false;
  uint64_t trace_index = 0;

  explicit Impl(std::istream& in) : reader(in) {}

  // Skips an element's whole subtree (start event already consumed).
  void skip_subtree() {
    int depth = 1;
    while (depth > 0) {
      const auto& ev = reader.next();
      switch (ev.type) {
        case detail::XmlReader::EventType::StartElement:
          if (!ev.self_closing) ++depth;
          break;
        case detail::XmlReader::EventType::EndElement:
          --depth;
          break;
        case detail::XmlReader::EventType::Eof:
          throw_error(Errc::ParseError,
                      "line " + std::to_string(reader.line()) +
                          ": unexpected end of input inside an element");
      }
    }
  }

  std::optional<TraceRecord> parse_trace() {
    TraceRecord record;
    bool have_name = false;
    uint64_t event_index = 0;
    while (true) {
      const auto& ev = reader.next();
      if (ev.type == detail::XmlReader::EventType::EndElement) break;
      if (ev.type == detail::XmlReader::EventType::Eof)
        throw_error(Errc::ParseError, "line " + std::to_string(reader.line()) +
                                          ": unterminated <trace>");
      if (ev.name == "string") {
        const std::string* key = ev.attr("key");
        const std::string* value = ev.attr("value");
        if (key && value && *key == "concept:name") {
          record.case_name = *value;
          have_name = true;
        }
        if (!ev.self_closing) skip_subtree();
      } else if (ev.name == "event") {
        record.events.push_back(parse_event(event_index++));
      } else if (!ev.self_closing) {
        skip_subtree();
      }
    }
    if (!have_name)
      throw_error(Errc::MissingField, "trace " + std::to_string(trace_index) +
                                          " has no concept:name");
    repair_order(record);
    return record;
  }

  EventInput parse_event(uint64_t event_index) {
    EventInput input;
    bool have_activity = false, have_ts = false;
    while (true) {
      const auto& ev = reader.next();
      if (ev.type == detail::XmlReader::EventType::EndElement) break;
      if (ev.type == detail::XmlReader::EventType::Eof)
        throw_error(Errc::ParseError, "line " + std::to_string(reader.line()) +
                                          ": unterminated <event>");
      const std::string* key = ev.attr("key");
      const std::string* value = ev.attr("value");
      if (ev.name == "string" && key && value && *key == "concept:name") {
        input.activity = *value;
        have_activity = true;
      } else if (ev.name == "date" && key && value && *key == "time:timestamp") {
        input.timestamp = parse_iso8601(*value);
        have_ts = true;
      }
      if (!ev.self_closing) skip_subtree();
    }
    if (!have_activity || !have_ts)
      throw_error(Errc::MissingField,
                  "trace " + std::to_string(trace_index) + " event " +
                      std::to_string(event_index) + " is missing " +
                      (have_activity ? "time:timestamp" : "concept:name"));
    return input;
  }
};

XesParser::XesParser(std::istream& in) : impl_(std::make_unique<Impl>(in)) {}
XesParser::~XesParser() = default;

std::optional<TraceRecord> XesParser::next() {
  Impl& p = *impl_;
  if (p.done) return std::nullopt;
  while (true) {
    const auto& ev = p.reader.next();
    switch (ev.type) {
      case detail::XmlReader::EventType::Eof:
        p.done = true;
        return std::nullopt;
      case detail::XmlReader::EventType::EndElement:
        break;  // leaving <log>
      case detail::XmlReader::EventType::StartElement:
        if (ev.name == "log") {
          p.in_log = true;
        } else if (ev.name == "trace" && p.in_log && !ev.self_closing) {
          auto record = p.parse_trace();
          ++p.trace_index;
          if (record && !record->events.empty()) return record;
          // traces without events are dropped
        } else if (!ev.self_closing) {
          p.skip_subtree();
        }
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

// One RFC 4180 record; returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields,
                     uint64_t& line) {
  fields.clear();
  int c = in.get();
  if (c < 0) return false;
  std::string field;
  bool quoted = false;
  while (true) {
    if (quoted) {
      if (c < 0)
        throw_error(Errc::ParseError,
                    "line " + std::to_string(line) + ": unterminated quote");
      if (c == '"') {
        int peeked = in.peek();
        if (peeked == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(char(c));
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r' && in.peek() == '\n') {
      // consumed below as '\n'
    } else if (c == '\n' || c < 0) {
      fields.push_back(std::move(field));
      ++line;
      return true;
    } else {
      field.push_back(char(c));
    }
    c = in.get();
  }
}

}  // namespace

struct CsvParser::Impl {
  std::vector<TraceRecord> records;
  size_t pos = 0;
};

CsvParser::CsvParser(std::istream& in, ColumnMapping mapping)
    : impl_(std::make_unique<Impl>()) {
  if (mapping.case_column == mapping.activity_column ||
      mapping.case_column == mapping.timestamp_column ||
      mapping.activity_column == mapping.timestamp_column)
    throw_error(Errc::MissingColumn, "case, activity and timestamp columns must be distinct");

  uint64_t line = 1;
  std::vector<std::string> fields;
  if (!read_csv_record(in, fields, line)) return;  // empty input: no traces

  auto column = [&](const std::string& name) {
    auto it = std::find(fields.begin(), fields.end(), name);
    if (it == fields.end())
      throw_error(Errc::MissingColumn, "column '" + name + "' not in header");
    return size_t(it - fields.begin());
  };
  size_t case_ix = column(mapping.case_column);
  size_t act_ix = column(mapping.activity_column);
  size_t ts_ix = column(mapping.timestamp_column);
  size_t width = fields.size();

  std::unordered_map<std::string, size_t> group_of;
  uint64_t row = 1;
  while (read_csv_record(in, fields, line)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != width)
      throw_error(Errc::ParseError, "row " + std::to_string(row) + ": expected " +
                                        std::to_string(width) + " fields, got " +
                                        std::to_string(fields.size()));
    const std::string& case_name = fields[case_ix];
    const std::string& activity = fields[act_ix];
    if (case_name.empty() || activity.empty())
      throw_error(Errc::ParseError,
                  "row " + std::to_string(row) + ": empty case or activity");
    Instant ts;
    try {
      ts = parse_timestamp(fields[ts_ix], mapping.time_format);
    } catch (const Error&) {
      throw_error(Errc::ParseError, "row " + std::to_string(row) +
                                        ": unparseable timestamp '" +
                                        fields[ts_ix] + "'");
    }
    auto [it, fresh] = group_of.try_emplace(case_name, impl_->records.size());
    if (fresh) impl_->records.push_back(TraceRecord{case_name, {}, false});
    impl_->records[it->second].events.push_back(EventInput{activity, ts});
  }
  for (TraceRecord& record : impl_->records) repair_order(record);
}

CsvParser::~CsvParser() = default;

std::optional<TraceRecord> CsvParser::next() {
  if (impl_->pos >= impl_->records.size()) return std::nullopt;
  return impl_->records[impl_->pos++];
}

// ---------------------------------------------------------------------------
// Ingest and export

IngestStats ingest(TraceSource& source, GraphStore& store,
                   const std::string& log_name) {
  LogWriter writer = store.begin_log(log_name);
  IngestStats stats;
  while (auto record = source.next()) {
    if (record->events.empty()) continue;
    writer.add_trace(record->case_name, record->events);
    ++stats.traces;
    stats.events += record->events.size();
    if (record->repaired) ++stats.repairs;
  }
  WriteStats written = writer.finish();
  stats.activities = written.new_activities;
  return stats;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void export_csv(const GraphStore& store, std::ostream& out) {
  EventRepository repo = store.load();
  out << "case,activity,timestamp\n";
  repo.for_each_node([&](NodeId id, NodeKind kind) {
    if (kind != NodeKind::Trace) return;
    const std::string& case_name = repo.attribute(id).val;

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
      out << csv_field(case_name) << ',' << csv_field(activity) << ','
          << format_iso8601(repo.event(ev).timestamp) << '\n';
    }
  });
}

}  // namespace evgr
