#include "evgr/access.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "evgr/error.hpp"

namespace evgr {

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void policy_fail(int line, const std::string& message) {
  throw_error(Errc::PolicyError, "line " + std::to_string(line) + ": " + message);
}

}  // namespace

AccessPolicy load_policy(std::istream& in) {
  AccessPolicy policy;
  RoleGrant* current = nullptr;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;

    std::istringstream words(line);
    std::string directive;
    words >> directive;
    std::string arg;
    std::getline(words, arg);
    arg = trim(arg);

    if (directive == "role") {
      if (arg.empty()) policy_fail(line_no, "role needs a name");
      if (arg == kAdminRole)
        policy_fail(line_no, "role 'admin' is built in and cannot be redefined");
      auto [it, fresh] = policy.roles.try_emplace(arg);
      if (!fresh) policy_fail(line_no, "duplicate role '" + arg + "'");
      current = &it->second;
      continue;
    }
    if (!current) policy_fail(line_no, "grant before any 'role' line");

    if (directive == "read") {
      auto kind = node_kind_from_name(arg);
      if (!kind) policy_fail(line_no, "unknown node kind '" + arg + "'");
      current->readable_node_kinds.insert(*kind);
    } else if (directive == "read-prop") {
      size_t dot = arg.find('.');
      if (dot == std::string::npos)
        policy_fail(line_no, "read-prop needs <NodeKind>.<property>");
      auto kind = node_kind_from_name(arg.substr(0, dot));
      if (!kind)
        policy_fail(line_no, "unknown node kind '" + arg.substr(0, dot) + "'");
      std::string prop = arg.substr(dot + 1);
      if (prop.empty()) policy_fail(line_no, "empty property name");
      current->readable_properties.emplace(*kind, prop);
    } else if (directive == "traverse") {
      auto kind = relation_kind_from_name(arg);
      if (!kind) policy_fail(line_no, "unknown relation kind '" + arg + "'");
      current->traversable_relations.insert(*kind);
    } else if (directive == "aggregate-dfg") {
      if (!arg.empty()) policy_fail(line_no, "aggregate-dfg takes no argument");
      current->aggregate_dfg = true;
    } else {
      policy_fail(line_no, "unknown directive '" + directive + "'");
    }
  }
  return policy;
}

AccessPolicy load_policy_text(const std::string& text) {
  std::istringstream in(text);
  return load_policy(in);
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return out;
}

}  // namespace

AccessDecision authorize(const AccessPolicy& policy, const std::string& role,
                         const AccessRequest& request) {
  if (role == kAdminRole) return AccessDecision::allow();
  auto it = policy.roles.find(role);
  if (it == policy.roles.end())
    throw_error(Errc::UnknownRole, "role '" + role + "' is not defined");
  const RoleGrant& grant = it->second;

  return std::visit(
      [&](const auto& req) -> AccessDecision {
        using T = std::decay_t<decltype(req)>;
        if constexpr (std::is_same_v<T, ReadNodeRequest>) {
          if (grant.readable_node_kinds.count(req.kind))
            return AccessDecision::allow();
          return AccessDecision::deny(lower(node_kind_name(req.kind)) +
                                      " reads not granted");
        } else if constexpr (std::is_same_v<T, ReadPropertyRequest>) {
          if (grant.readable_node_kinds.count(req.kind) ||
              grant.readable_properties.count({req.kind, req.property}))
            return AccessDecision::allow();
          return AccessDecision::deny(lower(node_kind_name(req.kind)) +
                                      " reads not granted");
        } else if constexpr (std::is_same_v<T, TraverseRequest>) {
          if (grant.traversable_relations.count(req.relation))
            return AccessDecision::allow();
          return AccessDecision::deny(std::string(relation_kind_name(req.relation)) +
                                      " traversal not granted");
        } else {
          static_assert(std::is_same_v<T, AggregateDfgRequest>);
          if (grant.aggregate_dfg) return AccessDecision::allow();
          return AccessDecision::deny("aggregate-dfg not granted");
        }
      },
      request);
}

std::string activity_pseudonym(uint32_t id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "act_%03u", id + 1);
  return buf;
}

DfgMatrix dfg_scan_as(const GraphStore& store, const DfgFilter& filter,
                      const AccessPolicy& policy, const std::string& role,
                      const DfgOptions& opts) {
  AccessDecision gate = authorize(policy, role, AggregateDfgRequest{});
  if (!gate.allowed) throw_error(Errc::AccessDenied, gate.reason);

  DfgMatrix matrix = dfg_scan(store, filter, opts);

  AccessDecision names = authorize(
      policy, role,
      ReadPropertyRequest{NodeKind::Attribute, std::string(kActivityKey)});
  if (names.allowed) return matrix;

  // Re-key the matrix with dictionary-stable pseudonyms.
  DfgMatrix masked;
  std::vector<std::string> pseudonyms(matrix.activities.size());
  for (size_t i = 0; i < matrix.activities.size(); ++i)
    pseudonyms[i] = activity_pseudonym(*store.activity_id(matrix.activities[i]));

  std::vector<uint32_t> remap(matrix.activities.size());
  masked.activities = pseudonyms;
  std::sort(masked.activities.begin(), masked.activities.end());
  for (size_t i = 0; i < pseudonyms.size(); ++i)
    remap[i] = uint32_t(std::lower_bound(masked.activities.begin(),
                                         masked.activities.end(), pseudonyms[i]) -
                        masked.activities.begin());
  for (const auto& [key, count] : matrix.counts)
    masked.counts.emplace(std::make_pair(remap[key.first], remap[key.second]), count);
  return masked;
}

}  // namespace evgr
