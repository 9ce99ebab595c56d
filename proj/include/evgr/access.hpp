#pragma once

#include <istream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <variant>

#include "evgr/dfg.hpp"
#include "evgr/graph.hpp"
#include "evgr/store.hpp"

namespace evgr {

// Per-role visibility grants. aggregate_dfg deliberately does not imply
// any node read: a role may compute pair frequencies while every event,
// trace and timestamp stays hidden.
struct RoleGrant {
  std::set<NodeKind> readable_node_kinds;
  std::set<std::pair<NodeKind, std::string>> readable_properties;
  std::set<RelationKind> traversable_relations;
  bool aggregate_dfg = false;
};

inline constexpr std::string_view kAdminRole = "admin";

// Immutable after load; "admin" always exists with every grant.
struct AccessPolicy {
  std::map<std::string, RoleGrant> roles;

  bool has_role(std::string_view name) const {
    return name == kAdminRole || roles.count(std::string(name)) > 0;
  }
};

// Parses the line-oriented policy format:
//   role <name>
//     read <NodeKind>
//     read-prop <NodeKind>.<property>
//     traverse <RelationKind>
//     aggregate-dfg
// '#' starts a comment. Unknown kinds, duplicate roles and grants outside
// a role are PolicyError with the offending line number.
AccessPolicy load_policy(std::istream& in);
AccessPolicy load_policy_text(const std::string& text);

struct ReadNodeRequest {
  NodeKind kind;
};
struct ReadPropertyRequest {
  NodeKind kind;
  std::string property;
};
struct TraverseRequest {
  RelationKind relation;
};
struct AggregateDfgRequest {};

using AccessRequest = std::variant<ReadNodeRequest, ReadPropertyRequest,
                                   TraverseRequest, AggregateDfgRequest>;

struct AccessDecision {
  bool allowed = false;
  std::string reason;  // the missing grant when denied

  static AccessDecision allow() { return {true, {}}; }
  static AccessDecision deny(std::string reason) { return {false, std::move(reason)}; }
};

// Pure decision per the role's grants; unknown roles are Error{UnknownRole}.
AccessDecision authorize(const AccessPolicy& policy, const std::string& role,
                         const AccessRequest& request);

// dfg_scan gated by the role's aggregate-dfg grant. Roles lacking the
// Attribute concept_name property grant get stable pseudonyms
// ("act_001", ...) derived from the store's activity dictionary instead
// of real activity names.
DfgMatrix dfg_scan_as(const GraphStore& store, const DfgFilter& filter,
                      const AccessPolicy& policy, const std::string& role,
                      const DfgOptions& opts = {});

// The pseudonym assigned to the activity with dictionary id `id`.
std::string activity_pseudonym(uint32_t id);

}  // namespace evgr
