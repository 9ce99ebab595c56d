#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "evgr/error.hpp"
#include "evgr/graph.hpp"
#include "test_util.hpp"

using namespace evgr;
using namespace evgr::test;

namespace {

std::set<uint64_t> ids(const std::vector<NodeId>& nodes) {
  std::set<uint64_t> out;
  for (NodeId n : nodes) out.insert(n.value);
  return out;
}

bool violates_rule(const SoundnessReport& report, int rule) {
  return std::any_of(report.violations.begin(), report.violations.end(),
                     [&](const SoundnessViolation& v) { return v.rule == rule; });
}

}  // namespace

TEST_CASE("add_log creates a named log node") {
  EventRepository repo;
  NodeId log = repo.add_log("l1");
  CHECK(repo.kind(log) == NodeKind::Log);
  CHECK(repo.attribute(log).key == kLogNameKey);
  CHECK(repo.attribute(log).val == "l1");
  CHECK(repo.find_log("l1") == log);

  CHECK(error_code_of([&] { repo.add_log(""); }) == Errc::NonemptyRequired);
  CHECK(error_code_of([&] { repo.add_log("l1"); }) == Errc::DuplicateLog);
}

TEST_CASE("add_trace anchors the trace to exactly one log") {
  Fixture f = make_fixture();
  CHECK(ids(f.repo.predecessors(f.t1)) == std::set<uint64_t>{f.log.value});
  CHECK(ids(f.repo.predecessors(f.t2)) == std::set<uint64_t>{f.log.value});

  CHECK(error_code_of([&] { f.repo.add_trace(f.e[0], "t3"); }) ==
        Errc::KindMismatch);
  CHECK(error_code_of([&] { f.repo.add_trace(NodeId{9999}, "t3"); }) ==
        Errc::UnknownNode);
  CHECK(error_code_of([&] { f.repo.add_trace(f.log, "t1"); }) ==
        Errc::DuplicateCase);
}

TEST_CASE("append_event chains events in order") {
  Fixture f = make_fixture();
  CHECK(f.repo.event_successor(f.e[0]) == f.e[1]);
  CHECK(f.repo.event_successor(f.e[1]) == f.e[2]);
  CHECK_FALSE(f.repo.event_successor(f.e[2]).has_value());
  CHECK(f.repo.event(f.e[0]).ordinal == 0);
  CHECK(f.repo.event(f.e[2]).ordinal == 2);

  // chain head has no incoming event flow
  for (NodeId p : f.repo.predecessors(f.e[0])) CHECK(f.repo.kind(p) != NodeKind::Event);

  // earlier than the trace tail at 02:00
  CHECK(error_code_of([&] { f.repo.append_event(f.t1, "a9", kT0); }) ==
        Errc::TimestampRegression);
  CHECK(error_code_of([&] { f.repo.append_event(NodeId{9999}, "a9", kT0); }) ==
        Errc::UnknownNode);
  // equal timestamps are fine (non-decreasing, not strictly increasing)
  CHECK_NOTHROW(f.repo.append_event(f.t1, "a9", kT0 + 2 * kHour));
}

TEST_CASE("bullet operators match the worked example") {
  Fixture f = make_fixture();
  NodeId a2 = *f.repo.find_activity_attribute("a2");
  NodeId a4 = *f.repo.find_activity_attribute("a4");

  CHECK(ids(f.repo.predecessors(a2)) == std::set<uint64_t>{f.e[1].value, f.e[3].value});
  CHECK(f.repo.predecessors(f.log).empty());
  CHECK(ids(f.repo.predecessors(f.e[1])) ==
        std::set<uint64_t>{f.t1.value, f.e[0].value});
  CHECK(ids(f.repo.successors(f.e[1])) == std::set<uint64_t>{f.e[2].value, a2.value});
  CHECK(f.repo.successors(a4).empty());
  CHECK(ids(f.repo.successors(f.t1)) ==
        std::set<uint64_t>{f.e[0].value, f.e[1].value, f.e[2].value});

  CHECK_THROWS_AS(f.repo.predecessors(NodeId{12345}), Error);
}

TEST_CASE("the worked example repository is sound") {
  Fixture f = make_fixture();
  SoundnessReport report = f.repo.validate_soundness();
  CHECK(report.is_sound());
  CHECK(report.violations.empty());
}

TEST_CASE("each soundness rule is detected with its id") {
  SUBCASE("rule 1: trace without a log") {
    EventRepository repo;
    repo.add_log("l");
    repo.add_node(NodeKind::Trace, AttributeRecord{std::string(kCaseNameKey), "t"});
    SoundnessReport report = repo.validate_soundness();
    CHECK_FALSE(report.is_sound());
    CHECK(report.violations.size() == 1);
    CHECK(report.violations[0].rule == 1);
  }
  SUBCASE("rule 1: trace under two logs") {
    EventRepository repo;
    NodeId l1 = repo.add_log("l1");
    NodeId l2 = repo.add_log("l2");
    NodeId t = repo.add_trace(l1, "t");
    repo.link(l2, t);
    CHECK(violates_rule(repo.validate_soundness(), 1));
  }
  SUBCASE("rule 2: event without a trace") {
    EventRepository repo;
    NodeId e = repo.add_node(NodeKind::Event, EventRecord{kT0, 0});
    NodeId a = repo.add_node(NodeKind::Attribute,
                             AttributeRecord{std::string(kActivityKey), "a1"});
    repo.link(e, a);
    SoundnessReport report = repo.validate_soundness();
    CHECK(report.violations.size() == 1);
    CHECK(report.violations[0].rule == 2);
  }
  SUBCASE("rule 3: event with two input flows") {
    EventRepository repo;
    NodeId log = repo.add_log("l");
    NodeId t = repo.add_trace(log, "t");
    NodeId e1 = repo.append_event(t, "a1", kT0);
    NodeId e2 = repo.append_event(t, "a2", kT0 + 1);
    NodeId e3 = repo.append_event(t, "a3", kT0 + 2);
    repo.link(e1, e3);  // second input flow into e3
    SoundnessReport report = repo.validate_soundness();
    CHECK(violates_rule(report, 3));
    CHECK(violates_rule(report, 4));  // e1 now also has two outputs
  }
  SUBCASE("rule 4: event with two output flows") {
    EventRepository repo;
    NodeId log = repo.add_log("l");
    NodeId t1 = repo.add_trace(log, "t1");
    NodeId t2 = repo.add_trace(log, "t2");
    NodeId e1 = repo.append_event(t1, "a1", kT0);
    NodeId e2 = repo.append_event(t1, "a2", kT0 + 1);
    NodeId e3 = repo.append_event(t2, "a3", kT0);
    repo.link(e1, e3);
    SoundnessReport report = repo.validate_soundness();
    CHECK(violates_rule(report, 4));
    CHECK_FALSE(violates_rule(report, 2));
    (void)e2;
  }
  SUBCASE("rule 5: event without an activity attribute") {
    EventRepository repo;
    NodeId log = repo.add_log("l");
    NodeId t = repo.add_trace(log, "t");
    NodeId e = repo.add_node(NodeKind::Event, EventRecord{kT0, 0});
    repo.link(t, e);
    SoundnessReport report = repo.validate_soundness();
    CHECK(report.violations.size() == 1);
    CHECK(report.violations[0].rule == 5);
    CHECK(report.violations[0].node == e);
  }
  SUBCASE("rule 5: event with two activity attributes") {
    Fixture f = make_fixture();
    NodeId a4 = *f.repo.find_activity_attribute("a4");
    f.repo.link(f.e[0], a4);
    CHECK(violates_rule(f.repo.validate_soundness(), 5));
  }
  SUBCASE("non-activity attributes do not count toward rule 5") {
    Fixture f = make_fixture();
    NodeId extra =
        f.repo.add_node(NodeKind::Attribute, AttributeRecord{"resource", "alice"});
    f.repo.link(f.e[0], extra);
    CHECK(f.repo.validate_soundness().is_sound());
  }
}

TEST_CASE("endpoint kinds must match a relation kind") {
  EventRepository repo;
  NodeId log = repo.add_log("l");
  NodeId t = repo.add_trace(log, "t");
  NodeId a = repo.add_node(NodeKind::Attribute,
                           AttributeRecord{std::string(kActivityKey), "x"});
  CHECK_THROWS_AS(repo.link(t, log), Error);
  CHECK_THROWS_AS(repo.link(a, t), Error);
  CHECK_THROWS_AS(repo.link(log, a), Error);
}

// Property: anything built through the high-level API alone is sound.
TEST_CASE("construction implies soundness") {
  for (uint64_t seed = 1; seed <= 60; ++seed) {
    EventRepository repo = random_repo(seed);
    SoundnessReport report = repo.validate_soundness();
    CAPTURE(seed);
    CHECK(report.is_sound());
  }
}

// Property: m in •n iff n in m•.
TEST_CASE("bullet duality") {
  EventRepository repo = random_repo(42, 15, 120, 6);
  repo.for_each_node([&](NodeId n, NodeKind) {
    for (NodeId m : repo.predecessors(n)) {
      auto succ = repo.successors(m);
      CHECK(std::find(succ.begin(), succ.end(), n) != succ.end());
    }
    for (NodeId m : repo.successors(n)) {
      auto pred = repo.predecessors(m);
      CHECK(std::find(pred.begin(), pred.end(), n) != pred.end());
    }
  });
}

// Property: every relation's endpoint kinds match its kind.
TEST_CASE("relation kind closure") {
  EventRepository repo = random_repo(7, 25, 200, 10);
  repo.for_each_relation([&](NodeId src, NodeId dst, RelationKind kind) {
    switch (kind) {
      case RelationKind::LogTrace:
        CHECK(repo.kind(src) == NodeKind::Log);
        CHECK(repo.kind(dst) == NodeKind::Trace);
        break;
      case RelationKind::TraceEvent:
        CHECK(repo.kind(src) == NodeKind::Trace);
        CHECK(repo.kind(dst) == NodeKind::Event);
        break;
      case RelationKind::EventEvent:
        CHECK(repo.kind(src) == NodeKind::Event);
        CHECK(repo.kind(dst) == NodeKind::Event);
        break;
      case RelationKind::EventAttribute:
        CHECK(repo.kind(src) == NodeKind::Event);
        CHECK(repo.kind(dst) == NodeKind::Attribute);
        break;
    }
  });
}

// Property: events of one activity share a single attribute node.
TEST_CASE("activity attributes are deduplicated") {
  Fixture f = make_fixture();
  NodeId a2 = *f.repo.find_activity_attribute("a2");
  auto succ_e2 = f.repo.successors(f.e[1]);
  auto succ_e4 = f.repo.successors(f.e[3]);
  CHECK(std::find(succ_e2.begin(), succ_e2.end(), a2) != succ_e2.end());
  CHECK(std::find(succ_e4.begin(), succ_e4.end(), a2) != succ_e4.end());
  CHECK(f.repo.count_of(NodeKind::Attribute) == 4);

  EventRepository repo = random_repo(11, 20, 150, 5);
  std::set<std::string> names;
  uint64_t attr_nodes = 0;
  repo.for_each_node([&](NodeId id, NodeKind kind) {
    if (kind == NodeKind::Attribute && repo.attribute(id).key == kActivityKey) {
      names.insert(repo.attribute(id).val);
      ++attr_nodes;
    }
  });
  CHECK(names.size() == attr_nodes);
}
