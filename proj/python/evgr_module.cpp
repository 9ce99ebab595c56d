#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "evgr/access.hpp"
#include "evgr/bench.hpp"
#include "evgr/dfg.hpp"
#include "evgr/error.hpp"
#include "evgr/generate.hpp"
#include "evgr/ingest.hpp"
#include "evgr/store.hpp"

namespace py = pybind11;
using namespace evgr;

namespace {

TimeWindow window_from(std::optional<std::string> start,
                       std::optional<std::string> end) {
  TimeWindow window;
  if (start) window.start = parse_iso8601(*start);
  if (end) window.end = parse_iso8601(*end);
  return window;
}

DfgFilter filter_from(std::optional<std::string> start, std::optional<std::string> end,
                      std::optional<std::vector<std::string>> allowlist) {
  DfgFilter filter;
  filter.window = window_from(std::move(start), std::move(end));
  if (allowlist)
    filter.activity_allowlist.insert(allowlist->begin(), allowlist->end());
  return filter;
}

DfgExportFormat format_from(const std::string& name) {
  if (name == "matrix") return DfgExportFormat::MatrixCsv;
  if (name == "edges") return DfgExportFormat::EdgeCsv;
  if (name == "dot") return DfgExportFormat::Dot;
  throw py::value_error("format must be 'matrix', 'edges' or 'dot'");
}

py::dict counts_dict(const DfgMatrix& m) {
  py::dict out;
  for (const auto& [key, count] : m.counts)
    out[py::make_tuple(m.activities[key.first], m.activities[key.second])] = count;
  return out;
}

}  // namespace

PYBIND11_MODULE(evgr, m) {
  m.doc() = "Event-log graph store with directly-follows-graph computation";

  py::register_exception<Error>(m, "EvgrError");

  m.def("parse_iso8601", &parse_iso8601, py::arg("text"));
  m.def("format_iso8601", &format_iso8601, py::arg("millis"));

  py::class_<NodeId>(m, "NodeId")
      .def_readonly("value", &NodeId::value)
      .def("__int__", [](NodeId id) { return id.value; })
      .def("__eq__", [](NodeId a, NodeId b) { return a == b; })
      .def("__hash__", [](NodeId id) { return id.value; })
      .def("__repr__",
           [](NodeId id) { return "NodeId(" + std::to_string(id.value) + ")"; });

  py::enum_<NodeKind>(m, "NodeKind")
      .value("Log", NodeKind::Log)
      .value("Trace", NodeKind::Trace)
      .value("Event", NodeKind::Event)
      .value("Attribute", NodeKind::Attribute);

  py::class_<SoundnessReport>(m, "SoundnessReport")
      .def_property_readonly("is_sound", &SoundnessReport::is_sound)
      .def_property_readonly("violations", [](const SoundnessReport& r) {
        py::list out;
        for (const auto& v : r.violations)
          out.append(py::make_tuple(v.rule, v.node.value, v.description));
        return out;
      });

  py::class_<EventRepository>(m, "EventRepository")
      .def(py::init<>())
      .def("add_log", &EventRepository::add_log, py::arg("name"))
      .def("add_trace", &EventRepository::add_trace, py::arg("log"),
           py::arg("case_name"))
      .def(
          "append_event",
          [](EventRepository& repo, NodeId trace, const std::string& activity,
             const std::string& ts) {
            return repo.append_event(trace, activity, parse_iso8601(ts));
          },
          py::arg("trace"), py::arg("activity"), py::arg("timestamp"))
      .def("predecessors", &EventRepository::predecessors, py::arg("node"))
      .def("successors", &EventRepository::successors, py::arg("node"))
      .def("validate_soundness", &EventRepository::validate_soundness)
      .def("node_count", &EventRepository::node_count)
      .def("relation_count", &EventRepository::relation_count);

  py::class_<DfgMatrix>(m, "DfgMatrix")
      .def_readonly("activities", &DfgMatrix::activities)
      .def("at", &DfgMatrix::at, py::arg("from_activity"), py::arg("to_activity"))
      .def("total", &DfgMatrix::total)
      .def("counts", &counts_dict)
      .def("export",
           [](const DfgMatrix& m, const std::string& format) {
             return export_dfg(m, format_from(format));
           },
           py::arg("format") = "matrix")
      .def("__eq__", [](const DfgMatrix& a, const DfgMatrix& b) { return a == b; });

  m.def("dfg_naive", &dfg_naive, py::arg("repo"),
        "Pairwise activity computation over an in-memory repository");

  py::class_<WriteStats>(m, "WriteStats")
      .def_readonly("logs", &WriteStats::logs)
      .def_readonly("traces", &WriteStats::traces)
      .def_readonly("events", &WriteStats::events)
      .def_readonly("attributes", &WriteStats::attributes)
      .def_readonly("ee_edges", &WriteStats::ee_edges)
      .def_readonly("new_activities", &WriteStats::new_activities);

  py::class_<StoreStats>(m, "StoreStats")
      .def_readonly("logs", &StoreStats::logs)
      .def_readonly("traces", &StoreStats::traces)
      .def_readonly("events", &StoreStats::events)
      .def_readonly("attributes", &StoreStats::attributes)
      .def_readonly("activities", &StoreStats::activities)
      .def_readonly("log_trace_edges", &StoreStats::log_trace_edges)
      .def_readonly("trace_event_edges", &StoreStats::trace_event_edges)
      .def_readonly("event_event_edges", &StoreStats::event_event_edges)
      .def_readonly("event_attr_edges", &StoreStats::event_attr_edges);

  py::class_<IngestStats>(m, "IngestStats")
      .def_readonly("traces", &IngestStats::traces)
      .def_readonly("events", &IngestStats::events)
      .def_readonly("activities", &IngestStats::activities)
      .def_readonly("repairs", &IngestStats::repairs);

  py::class_<GraphStore>(m, "GraphStore")
      .def_static(
          "open",
          [](const std::filesystem::path& dir, uint64_t memory_limit_mib) {
            return GraphStore::open(dir, MemoryBudget::mib(memory_limit_mib));
          },
          py::arg("dir"), py::arg("memory_limit_mib") = 256)
      .def("persist", &GraphStore::persist, py::arg("repo"),
           "Append a sound repository to the store")
      .def("stats", &GraphStore::stats)
      .def("activities", &GraphStore::activities)
      .def("load", &GraphStore::load)
      .def("event_time_range",
           [](const GraphStore& store) -> py::object {
             auto range = store.event_time_range();
             if (!range) return py::none();
             return py::make_tuple(format_iso8601(range->first),
                                   format_iso8601(range->second));
           })
      .def("peak_tracked_bytes",
           [](const GraphStore& store) { return store.tracker().peak(); });

  m.def(
      "dfg_scan",
      [](const GraphStore& store, std::optional<std::string> start,
         std::optional<std::string> end,
         std::optional<std::vector<std::string>> allowlist, unsigned threads) {
        return dfg_scan(store, filter_from(std::move(start), std::move(end),
                                           std::move(allowlist)),
                        DfgOptions{threads});
      },
      py::arg("store"), py::arg("start") = py::none(), py::arg("end") = py::none(),
      py::arg("allowlist") = py::none(), py::arg("threads") = 1,
      "Single-pass DFG over the persisted edges");

  m.def(
      "ingest_file",
      [](GraphStore& store, const std::filesystem::path& path,
         const std::string& format, const std::string& log_name,
         const std::string& case_col, const std::string& activity_col,
         const std::string& time_col, const std::string& time_format) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw_error(Errc::IoError, "cannot open " + path.string());
        if (format == "xes") {
          XesParser parser(in);
          return ingest(parser, store, log_name);
        }
        CsvParser parser(in,
                         ColumnMapping{case_col, activity_col, time_col, time_format});
        return ingest(parser, store, log_name);
      },
      py::arg("store"), py::arg("path"), py::arg("format"), py::arg("log_name"),
      py::arg("case_col") = "case", py::arg("activity_col") = "activity",
      py::arg("time_col") = "timestamp", py::arg("time_format") = "iso8601");

  m.def("export_store_csv", [](const GraphStore& store) {
    std::ostringstream out;
    export_csv(store, out);
    return out.str();
  });

  py::class_<AccessPolicy>(m, "AccessPolicy")
      .def("has_role", &AccessPolicy::has_role)
      .def_property_readonly("role_names", [](const AccessPolicy& p) {
        std::vector<std::string> names;
        for (const auto& [name, grant] : p.roles) names.push_back(name);
        return names;
      });

  m.def("load_policy", &load_policy_text, py::arg("text"));

  m.def(
      "dfg_scan_as",
      [](const GraphStore& store, const AccessPolicy& policy, const std::string& role,
         std::optional<std::string> start, std::optional<std::string> end,
         unsigned threads) {
        return dfg_scan_as(store,
                           filter_from(std::move(start), std::move(end), std::nullopt),
                           policy, role, DfgOptions{threads});
      },
      py::arg("store"), py::arg("policy"), py::arg("role"),
      py::arg("start") = py::none(), py::arg("end") = py::none(),
      py::arg("threads") = 1,
      "DFG gated by the role's aggregate-dfg grant; activity names are "
      "pseudonymized unless the concept_name property is readable");

  m.def(
      "generate_log",
      [](const std::filesystem::path& path, uint64_t traces, uint32_t events_min,
         uint32_t events_max, uint32_t alphabet, const std::string& start,
         const std::string& span, uint64_t seed, const std::string& format) {
        SyntheticSpec spec;
        spec.traces = traces;
        spec.events_min = events_min;
        spec.events_max = events_max;
        spec.alphabet = alphabet;
        spec.start = parse_iso8601(start);
        spec.span_ms = parse_duration_ms(span);
        spec.seed = seed;
        spec.validate();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw_error(Errc::IoError, "cannot write " + path.string());
        write_synthetic_log(spec, format == "csv" ? LogFormat::Csv : LogFormat::Xes,
                            out);
      },
      py::arg("path"), py::arg("traces"), py::arg("events_min") = 1,
      py::arg("events_max") = 10, py::arg("alphabet") = 10,
      py::arg("start") = "2020-01-01T00:00:00Z", py::arg("span") = "30d",
      py::arg("seed") = 0, py::arg("format") = "xes");
}
