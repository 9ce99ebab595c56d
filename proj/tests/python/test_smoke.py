"""Smoke tests for the evgr Python module."""

import sys
import tempfile
import unittest
from pathlib import Path

import evgr

T0 = "2020-01-01T00:00:00Z"


def build_fixture_repo():
    repo = evgr.EventRepository()
    log = repo.add_log("l1")
    t1 = repo.add_trace(log, "t1")
    repo.append_event(t1, "a1", "2020-01-01T00:00:00Z")
    repo.append_event(t1, "a2", "2020-01-01T01:00:00Z")
    repo.append_event(t1, "a3", "2020-01-01T02:00:00Z")
    t2 = repo.add_trace(log, "t2")
    repo.append_event(t2, "a2", "2020-01-01T10:00:00Z")
    repo.append_event(t2, "a3", "2020-01-01T11:00:00Z")
    repo.append_event(t2, "a4", "2020-01-01T12:00:00Z")
    return repo


class SmokeTest(unittest.TestCase):
    def test_time_round_trip(self):
        ms = evgr.parse_iso8601(T0)
        self.assertEqual(ms, 1577836800000)
        self.assertEqual(evgr.format_iso8601(ms), "2020-01-01T00:00:00.000Z")

    def test_repository_and_naive_dfg(self):
        repo = build_fixture_repo()
        self.assertTrue(repo.validate_soundness().is_sound)
        matrix = evgr.dfg_naive(repo)
        self.assertEqual(matrix.activities, ["a1", "a2", "a3", "a4"])
        self.assertEqual(matrix.at("a2", "a3"), 2)
        self.assertEqual(matrix.total(), 4)
        self.assertEqual(
            matrix.counts(),
            {("a1", "a2"): 1, ("a2", "a3"): 2, ("a3", "a4"): 1},
        )

    def test_store_round_trip_and_scan(self):
        repo = build_fixture_repo()
        with tempfile.TemporaryDirectory() as tmp:
            store = evgr.GraphStore.open(Path(tmp) / "st", memory_limit_mib=64)
            store.persist(repo)
            stats = store.stats()
            self.assertEqual(stats.events, 6)
            self.assertEqual(stats.activities, 4)

            scanned = evgr.dfg_scan(store)
            self.assertEqual(scanned, evgr.dfg_naive(repo))

            windowed = evgr.dfg_scan(
                store, start=T0, end="2020-01-01T02:00:00Z"
            )
            self.assertEqual(windowed.total(), 2)

            grid = scanned.export("matrix")
            self.assertTrue(grid.startswith(",a1,a2,a3,a4\n"))

    def test_generate_ingest_and_policy(self):
        with tempfile.TemporaryDirectory() as tmp:
            log_path = Path(tmp) / "synthetic.xes"
            evgr.generate_log(log_path, traces=25, alphabet=5, seed=3)
            store = evgr.GraphStore.open(Path(tmp) / "st")
            stats = evgr.ingest_file(store, log_path, "xes", "synthetic")
            self.assertEqual(stats.traces, 25)
            self.assertLessEqual(stats.activities, 5)

            policy = evgr.load_policy("role masked\n  aggregate-dfg\n")
            self.assertTrue(policy.has_role("admin"))
            masked = evgr.dfg_scan_as(store, policy, "masked")
            admin = evgr.dfg_scan(store)
            self.assertEqual(masked.total(), admin.total())
            self.assertTrue(all(a.startswith("act_") for a in masked.activities))

            with self.assertRaises(evgr.EvgrError):
                evgr.dfg_scan_as(
                    store, evgr.load_policy("role r\n  read Event\n"), "r"
                )

    def test_errors_surface(self):
        repo = evgr.EventRepository()
        repo.add_log("l")
        with self.assertRaises(evgr.EvgrError):
            repo.add_log("l")


if __name__ == "__main__":
    sys.exit(unittest.main())
