#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "evgr/access.hpp"
#include "evgr/error.hpp"
#include "test_util.hpp"

using namespace evgr;
using namespace evgr::test;

namespace {

const char* kAnalystPolicy = R"(# aggregate-only analyst
role analyst
  aggregate-dfg
  read-prop Attribute.concept_name
)";

const char* kMaskedPolicy = R"(role masked
  aggregate-dfg
)";

std::multiset<uint64_t> count_multiset(const DfgMatrix& m) {
  std::multiset<uint64_t> out;
  for (const auto& [key, count] : m.counts) out.insert(count);
  return out;
}

}  // namespace

TEST_CASE("policies parse with the implicit admin role") {
  AccessPolicy policy = load_policy_text(kAnalystPolicy);
  CHECK(policy.roles.size() == 1);
  CHECK(policy.has_role("analyst"));
  CHECK(policy.has_role("admin"));
  CHECK(policy.roles.at("analyst").aggregate_dfg);
  CHECK(policy.roles.at("analyst").readable_node_kinds.empty());

  AccessPolicy empty = load_policy_text("");
  CHECK(empty.roles.empty());
  CHECK(empty.has_role("admin"));
}

TEST_CASE("a traversal-only role parses") {
  AccessPolicy policy = load_policy_text(
      "role walker\n"
      "  traverse EventEvent\n");
  const RoleGrant& grant = policy.roles.at("walker");
  CHECK(grant.traversable_relations.count(RelationKind::EventEvent) == 1);
  CHECK_FALSE(grant.aggregate_dfg);
  CHECK(grant.readable_node_kinds.empty());
  CHECK(authorize(policy, "walker", TraverseRequest{RelationKind::EventEvent}).allowed);
  CHECK_FALSE(authorize(policy, "walker", ReadNodeRequest{NodeKind::Event}).allowed);
}

TEST_CASE("policy errors name the line") {
  auto check_policy_error = [](const char* text) {
    try {
      load_policy_text(text);
      FAIL_CHECK("expected PolicyError for: " << text);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::PolicyError);
    }
  };
  check_policy_error("role a\n  read Pony\n");
  check_policy_error("role a\n  traverse Follows\n");
  check_policy_error("role a\nrole a\n");
  check_policy_error("  read Event\n");          // grant before any role
  check_policy_error("role admin\n");            // built in
  check_policy_error("role a\n  grant-all\n");   // unknown directive
  check_policy_error("role a\n  read-prop Event\n");  // missing property
}

TEST_CASE("authorization follows the grants exactly") {
  AccessPolicy policy = load_policy_text(kAnalystPolicy);

  CHECK(authorize(policy, "analyst", AggregateDfgRequest{}).allowed);
  AccessDecision deny = authorize(policy, "analyst",
                                  ReadPropertyRequest{NodeKind::Event, "timestamp"});
  CHECK_FALSE(deny.allowed);
  CHECK(deny.reason == "event reads not granted");
  CHECK(authorize(policy, "analyst",
                  ReadPropertyRequest{NodeKind::Attribute,
                                      std::string(kActivityKey)})
            .allowed);
  CHECK_FALSE(authorize(policy, "analyst", ReadNodeRequest{NodeKind::Trace}).allowed);

  // admin passes everything
  CHECK(authorize(policy, "admin", AggregateDfgRequest{}).allowed);
  CHECK(authorize(policy, "admin", ReadNodeRequest{NodeKind::Event}).allowed);
  CHECK(authorize(policy, "admin", TraverseRequest{RelationKind::LogTrace}).allowed);

  CHECK(error_code_of([&] {
          authorize(policy, "nobody", AggregateDfgRequest{});
        }) == Errc::UnknownRole);
}

TEST_CASE("a read grant on the kind implies its properties") {
  AccessPolicy policy = load_policy_text(
      "role reader\n"
      "  read Event\n");
  CHECK(authorize(policy, "reader",
                  ReadPropertyRequest{NodeKind::Event, "timestamp"})
            .allowed);
}

TEST_CASE("aggregate roles compute the exact counts") {
  TempDir dir;
  GraphStore store = GraphStore::open(dir.path);
  Fixture f = make_fixture();
  store.persist(f.repo);

  AccessPolicy policy = load_policy_text(std::string(kAnalystPolicy) + kMaskedPolicy);
  DfgMatrix admin = dfg_scan_as(store, {}, policy, "admin");
  DfgMatrix analyst = dfg_scan_as(store, {}, policy, "analyst");
  CHECK(analyst == admin);  // name grant present: identical, real names
  CHECK(analyst.at("a2", "a3") == 2);

  DfgMatrix masked = dfg_scan_as(store, {}, policy, "masked");
  CHECK(count_multiset(masked) == count_multiset(admin));
  CHECK(masked.total() == admin.total());
  CHECK(masked.activities ==
        std::vector<std::string>{"act_001", "act_002", "act_003", "act_004"});

  CHECK(error_code_of([&] {
          dfg_scan_as(store, {}, load_policy_text("role blocked\n  read Event\n"),
                      "blocked");
        }) == Errc::AccessDenied);
}

TEST_CASE("pseudonyms are stable per store") {
  TempDir dir;
  {
    GraphStore store = GraphStore::open(dir.path);
    Fixture f = make_fixture();
    store.persist(f.repo);
  }
  AccessPolicy policy = load_policy_text(kMaskedPolicy);
  GraphStore store = GraphStore::open(dir.path);
  DfgMatrix first = dfg_scan_as(store, {}, policy, "masked");
  DfgMatrix second = dfg_scan_as(store, {}, policy, "masked");
  CHECK(first == second);

  // reopening (and appending other activities) keeps the mapping
  EventRepository more;
  NodeId log = more.add_log("l2");
  NodeId t = more.add_trace(log, "t9");
  more.append_event(t, "zz", kT0);
  more.append_event(t, "a1", kT0 + 1);
  store.persist(more);
  DfgMatrix after = dfg_scan_as(store, {}, policy, "masked");
  // a1 was dictionary id 0 and stays act_001; zz appends as act_005
  CHECK(after.at("act_005", "act_001") == 1);
  CHECK(after.at("act_001", "act_002") == first.at("act_001", "act_002"));
}

// No event identifiers, case names or timestamps may appear in any
// serialized output of an aggregate-only role.
TEST_CASE("masked outputs leak nothing") {
  TempDir dir;
  GraphStore store = GraphStore::open(dir.path);
  Fixture f = make_fixture();
  store.persist(f.repo);

  AccessPolicy policy = load_policy_text(kMaskedPolicy);
  DfgMatrix masked = dfg_scan_as(store, {}, policy, "masked");
  for (DfgExportFormat format : {DfgExportFormat::MatrixCsv,
                                 DfgExportFormat::EdgeCsv, DfgExportFormat::Dot}) {
    std::string output = export_dfg(masked, format);
    CAPTURE(output);
    for (const char* secret : {"t1", "t2", "2020", "a1", "a2", "a3", "a4", "l1"})
      CHECK(output.find(secret) == std::string::npos);
  }
}
