#include "evgr/graph.hpp"

#include <algorithm>

#include "evgr/error.hpp"

namespace evgr {

namespace {

std::optional<RelationKind> infer_relation(NodeKind src, NodeKind dst) {
  if (src == NodeKind::Log && dst == NodeKind::Trace) return RelationKind::LogTrace;
  if (src == NodeKind::Trace && dst == NodeKind::Event) return RelationKind::TraceEvent;
  if (src == NodeKind::Event && dst == NodeKind::Event) return RelationKind::EventEvent;
  if (src == NodeKind::Event && dst == NodeKind::Attribute)
    return RelationKind::EventAttribute;
  return std::nullopt;
}

}  // namespace

std::string_view node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Log: return "Log";
    case NodeKind::Trace: return "Trace";
    case NodeKind::Event: return "Event";
    case NodeKind::Attribute: return "Attribute";
  }
  return "?";
}

std::string_view relation_kind_name(RelationKind kind) {
  switch (kind) {
    case RelationKind::LogTrace: return "LogTrace";
    case RelationKind::TraceEvent: return "TraceEvent";
    case RelationKind::EventEvent: return "EventEvent";
    case RelationKind::EventAttribute: return "EventAttribute";
  }
  return "?";
}

std::optional<NodeKind> node_kind_from_name(std::string_view name) {
  if (name == "Log") return NodeKind::Log;
  if (name == "Trace") return NodeKind::Trace;
  if (name == "Event") return NodeKind::Event;
  if (name == "Attribute") return NodeKind::Attribute;
  return std::nullopt;
}

std::optional<RelationKind> relation_kind_from_name(std::string_view name) {
  if (name == "LogTrace") return RelationKind::LogTrace;
  if (name == "TraceEvent") return RelationKind::TraceEvent;
  if (name == "EventEvent") return RelationKind::EventEvent;
  if (name == "EventAttribute") return RelationKind::EventAttribute;
  return std::nullopt;
}

const EventRepository::Node& EventRepository::at(NodeId n) const {
  if (n.value >= nodes_.size())
    throw_error(Errc::UnknownNode, "node " + std::to_string(n.value));
  return nodes_[n.value];
}

NodeId EventRepository::add_node(NodeKind kind, Payload payload) {
  NodeId id{nodes_.size()};
  if (kind == NodeKind::Log) {
    logs_by_name_.try_emplace(std::get<AttributeRecord>(payload).val, id.value);
  } else if (kind == NodeKind::Trace) {
    traces_by_case_.try_emplace(std::get<AttributeRecord>(payload).val, id.value);
    trace_state_.emplace(id.value, TraceState{});
  } else if (kind == NodeKind::Attribute) {
    const auto& attr = std::get<AttributeRecord>(payload);
    if (attr.key == kActivityKey) activity_attrs_.try_emplace(attr.val, id.value);
  }
  nodes_.push_back(Node{kind, std::move(payload)});
  out_.emplace_back();
  in_.emplace_back();
  return id;
}

void EventRepository::link(NodeId src, NodeId dst) {
  const Node& s = at(src);
  const Node& d = at(dst);
  auto kind = infer_relation(s.kind, d.kind);
  if (!kind)
    throw_error(Errc::KindMismatch,
                std::string(node_kind_name(s.kind)) + " -> " +
                    std::string(node_kind_name(d.kind)) + " is not a relation kind");
  out_[src.value].push_back(Edge{dst, *kind});
  in_[dst.value].push_back(Edge{src, *kind});
  ++relation_count_;
  if (*kind == RelationKind::TraceEvent) {
    // Keep the append cursor valid for repositories rebuilt via the raw API.
    TraceState& state = trace_state_[src.value];
    const EventRecord& rec = event(dst);
    if (rec.ordinal + 1 > state.next_ordinal) {
      state.next_ordinal = rec.ordinal + 1;
      state.last_event = dst;
    }
  }
}

NodeId EventRepository::add_log(const std::string& name) {
  if (name.empty()) throw_error(Errc::NonemptyRequired, "log name must be nonempty");
  if (logs_by_name_.count(name))
    throw_error(Errc::DuplicateLog, "log '" + name + "' already exists");
  return add_node(NodeKind::Log, AttributeRecord{std::string(kLogNameKey), name});
}

NodeId EventRepository::add_trace(NodeId log, const std::string& case_name) {
  if (case_name.empty())
    throw_error(Errc::NonemptyRequired, "case name must be nonempty");
  const Node& n = at(log);
  if (n.kind != NodeKind::Log)
    throw_error(Errc::KindMismatch, "node " + std::to_string(log.value) +
                                        " is not a Log");
  if (traces_by_case_.count(case_name))
    throw_error(Errc::DuplicateCase, "case '" + case_name + "' already exists");
  NodeId id = add_node(NodeKind::Trace,
                       AttributeRecord{std::string(kCaseNameKey), case_name});
  link(log, id);
  return id;
}

NodeId EventRepository::append_event(NodeId trace, const std::string& activity,
                                     Instant ts) {
  if (activity.empty())
    throw_error(Errc::NonemptyRequired, "activity name must be nonempty");
  const Node& n = at(trace);
  if (n.kind != NodeKind::Trace)
    throw_error(Errc::KindMismatch, "node " + std::to_string(trace.value) +
                                        " is not a Trace");
  TraceState state = trace_state_[trace.value];  // copy: link() updates the live one
  if (state.last_event && event(*state.last_event).timestamp > ts)
    throw_error(Errc::TimestampRegression,
                "event at " + format_iso8601(ts) + " precedes trace tail " +
                    format_iso8601(event(*state.last_event).timestamp));

  NodeId ev = add_node(NodeKind::Event, EventRecord{ts, state.next_ordinal});
  link(trace, ev);
  if (state.last_event) link(*state.last_event, ev);

  NodeId attr;
  if (auto it = activity_attrs_.find(activity); it != activity_attrs_.end()) {
    attr = NodeId{it->second};
  } else {
    attr = add_node(NodeKind::Attribute,
                    AttributeRecord{std::string(kActivityKey), activity});
  }
  link(ev, attr);
  return ev;
}

std::vector<NodeId> EventRepository::predecessors(NodeId n) const {
  at(n);
  std::vector<NodeId> result;
  result.reserve(in_[n.value].size());
  for (const Edge& e : in_[n.value]) result.push_back(e.other);
  std::sort(result.begin(), result.end());
  return result;
}

std::vector<NodeId> EventRepository::successors(NodeId n) const {
  at(n);
  std::vector<NodeId> result;
  result.reserve(out_[n.value].size());
  for (const Edge& e : out_[n.value]) result.push_back(e.other);
  std::sort(result.begin(), result.end());
  return result;
}

std::optional<NodeId> EventRepository::event_successor(NodeId e) const {
  at(e);
  std::optional<NodeId> best;
  for (const Edge& edge : out_[e.value])
    if (edge.kind == RelationKind::EventEvent && (!best || edge.other < *best))
      best = edge.other;
  return best;
}

SoundnessReport EventRepository::validate_soundness() const {
  SoundnessReport report;
  auto violate = [&](int rule, NodeId node, std::string desc) {
    report.violations.push_back(SoundnessViolation{rule, node, std::move(desc)});
  };

  for (uint64_t i = 0; i < nodes_.size(); ++i) {
    NodeId id{i};
    const Node& node = nodes_[i];
    if (node.kind == NodeKind::Trace) {
      size_t in_count = in_[i].size();
      if (in_count != 1)
        violate(1, id, "trace has " + std::to_string(in_count) +
                           " in-relations, expected exactly 1 log");
    } else if (node.kind == NodeKind::Event) {
      size_t traces = 0, ee_in = 0, ee_out = 0, activities = 0;
      for (const Edge& e : in_[i]) {
        if (e.kind == RelationKind::TraceEvent) ++traces;
        if (e.kind == RelationKind::EventEvent) ++ee_in;
      }
      for (const Edge& e : out_[i]) {
        if (e.kind == RelationKind::EventEvent) ++ee_out;
        if (e.kind == RelationKind::EventAttribute &&
            attribute(e.other).key == kActivityKey)
          ++activities;
      }
      if (traces != 1)
        violate(2, id, "event belongs to " + std::to_string(traces) +
                           " traces, expected exactly 1");
      if (ee_in > 1)
        violate(3, id, "event has " + std::to_string(ee_in) +
                           " input flows, expected at most 1");
      if (ee_out > 1)
        violate(4, id, "event has " + std::to_string(ee_out) +
                           " output flows, expected at most 1");
      if (activities != 1)
        violate(5, id, "event links to " + std::to_string(activities) +
                           " activity attributes, expected exactly 1");
    }
  }
  return report;
}

uint64_t EventRepository::count_of(NodeKind kind) const {
  uint64_t n = 0;
  for (const Node& node : nodes_)
    if (node.kind == kind) ++n;
  return n;
}

NodeKind EventRepository::kind(NodeId n) const { return at(n).kind; }

const AttributeRecord& EventRepository::attribute(NodeId n) const {
  const Node& node = at(n);
  if (!std::holds_alternative<AttributeRecord>(node.payload))
    throw_error(Errc::KindMismatch,
                "node " + std::to_string(n.value) + " has no attribute payload");
  return std::get<AttributeRecord>(node.payload);
}

const EventRecord& EventRepository::event(NodeId n) const {
  const Node& node = at(n);
  if (!std::holds_alternative<EventRecord>(node.payload))
    throw_error(Errc::KindMismatch,
                "node " + std::to_string(n.value) + " is not an Event");
  return std::get<EventRecord>(node.payload);
}

std::optional<NodeId> EventRepository::find_log(std::string_view name) const {
  auto it = logs_by_name_.find(std::string(name));
  if (it == logs_by_name_.end()) return std::nullopt;
  return NodeId{it->second};
}

std::optional<NodeId> EventRepository::find_activity_attribute(
    std::string_view activity) const {
  auto it = activity_attrs_.find(std::string(activity));
  if (it == activity_attrs_.end()) return std::nullopt;
  return NodeId{it->second};
}

void EventRepository::for_each_node(
    const std::function<void(NodeId, NodeKind)>& fn) const {
  for (uint64_t i = 0; i < nodes_.size(); ++i) fn(NodeId{i}, nodes_[i].kind);
}

void EventRepository::for_each_relation(
    const std::function<void(NodeId, NodeId, RelationKind)>& fn) const {
  for (uint64_t i = 0; i < nodes_.size(); ++i)
    for (const Edge& e : out_[i]) fn(NodeId{i}, e.other, e.kind);
}

}  // namespace evgr
