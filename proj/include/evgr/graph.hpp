#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "evgr/time.hpp"

namespace evgr {

// Identifies one node within one repository. Ids are dense, assigned in
// creation order, and never reused.
struct NodeId {
  uint64_t value = 0;

  friend bool operator==(NodeId a, NodeId b) { return a.value == b.value; }
  friend bool operator!=(NodeId a, NodeId b) { return a.value != b.value; }
  friend bool operator<(NodeId a, NodeId b) { return a.value < b.value; }
};

enum class NodeKind : uint8_t { Log, Trace, Event, Attribute };
enum class RelationKind : uint8_t { LogTrace, TraceEvent, EventEvent, EventAttribute };

std::string_view node_kind_name(NodeKind kind);
std::string_view relation_kind_name(RelationKind kind);
std::optional<NodeKind> node_kind_from_name(std::string_view name);
std::optional<RelationKind> relation_kind_from_name(std::string_view name);

// Attribute keys used by the ingestion schema. Log and trace nodes carry
// their name as a node property under these keys; activity names are
// separate Attribute nodes shared between events.
inline constexpr std::string_view kLogNameKey = "log_concept_name";
inline constexpr std::string_view kCaseNameKey = "case_concept_name";
inline constexpr std::string_view kActivityKey = "concept_name";

struct AttributeRecord {
  std::string key;
  std::string val;

  friend bool operator==(const AttributeRecord&, const AttributeRecord&) = default;
};

struct EventRecord {
  Instant timestamp = 0;  // UTC milliseconds
  uint32_t ordinal = 0;   // 0-based position within the owning trace

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct SoundnessViolation {
  int rule = 0;  // 1..5
  NodeId node;
  std::string description;
};

struct SoundnessReport {
  std::vector<SoundnessViolation> violations;

  bool is_sound() const { return violations.empty(); }
};

// In-memory event repository G = (N, R) with node kinds Log, Trace,
// Event, Attribute and relations restricted to LogTrace, TraceEvent,
// EventEvent and EventAttribute.
//
// The high-level builders (add_log, add_trace, append_event) produce
// sound repositories by construction. The low-level add_node/link pair
// is used by the storage loader and by tests that need structurally
// valid but unsound graphs; it still rejects relations whose endpoint
// kinds do not match any relation kind.
class EventRepository {
 public:
  using Payload = std::variant<AttributeRecord, EventRecord>;

  // --- high-level builders ---

  // Creates a Log node named `name` (stored under key "log_concept_name").
  NodeId add_log(const std::string& name);

  // Creates a Trace under `log` with a unique case name (key
  // "case_concept_name") and its single LogTrace in-relation.
  NodeId add_trace(NodeId log, const std::string& case_name);

  // Appends an event executing `activity` at `ts` to the end of `trace`.
  // Links it to the deduplicated activity Attribute node and chains it to
  // the previous last event of the trace, if any. Timestamps must be
  // non-decreasing along the chain.
  NodeId append_event(NodeId trace, const std::string& activity, Instant ts);

  // --- neighborhood operators ---

  // Returns the in-neighborhood of n, sorted by id.
  std::vector<NodeId> predecessors(NodeId n) const;
  // Returns the out-neighborhood of n, sorted by id.
  std::vector<NodeId> successors(NodeId n) const;

  // --- soundness ---

  // Checks the five rules:
  //   1. every trace has exactly one in-relation (its log)
  //   2. every event belongs to exactly one trace
  //   3. every event has at most one incoming event flow
  //   4. every event has at most one outgoing event flow
  //   5. every event links to exactly one activity attribute
  //      (key "concept_name"); other attribute links are unconstrained
  SoundnessReport validate_soundness() const;

  // --- low-level construction ---

  // Creates a node without the uniqueness checks of the builders (name
  // indexes are maintained first-come). Used by the storage loader.
  NodeId add_node(NodeKind kind, Payload payload);
  // Adds a relation; the kind is inferred from the endpoint kinds.
  // Throws KindMismatch when the endpoint pair is not a legal relation.
  void link(NodeId src, NodeId dst);

  // --- inspection ---

  uint64_t node_count() const { return nodes_.size(); }
  uint64_t relation_count() const { return relation_count_; }
  uint64_t count_of(NodeKind kind) const;

  NodeKind kind(NodeId n) const;
  const AttributeRecord& attribute(NodeId n) const;  // Log/Trace/Attribute payloads
  const EventRecord& event(NodeId n) const;

  std::optional<NodeId> find_log(std::string_view name) const;
  std::optional<NodeId> find_activity_attribute(std::string_view activity) const;

  void for_each_node(const std::function<void(NodeId, NodeKind)>& fn) const;
  void for_each_relation(
      const std::function<void(NodeId, NodeId, RelationKind)>& fn) const;

  // Out-neighbor restricted to EventEvent relations; at most one in a
  // sound repository (the first by id is returned otherwise).
  std::optional<NodeId> event_successor(NodeId e) const;

 private:
  struct Node {
    NodeKind kind;
    Payload payload;
  };
  struct Edge {
    NodeId other;
    RelationKind kind;
  };

  const Node& at(NodeId n) const;

  std::vector<Node> nodes_;
  std::vector<std::vector<Edge>> out_;
  std::vector<std::vector<Edge>> in_;
  uint64_t relation_count_ = 0;

  std::unordered_map<std::string, uint64_t> logs_by_name_;
  std::unordered_map<std::string, uint64_t> traces_by_case_;
  std::unordered_map<std::string, uint64_t> activity_attrs_;  // val -> node
  struct TraceState {
    std::optional<NodeId> last_event;
    uint32_t next_ordinal = 0;
  };
  std::unordered_map<uint64_t, TraceState> trace_state_;
};

}  // namespace evgr

template <>
struct std::hash<evgr::NodeId> {
  size_t operator()(evgr::NodeId id) const noexcept {
    return std::hash<uint64_t>()(id.value);
  }
};
