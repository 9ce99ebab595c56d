#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evgr/graph.hpp"
#include "evgr/store.hpp"
#include "evgr/time.hpp"

namespace evgr {

// Directly Follows Graph: frequency of "b immediately follows a" per
// ordered activity pair. Activities are kept sorted lexicographically and
// counts are keyed by indices into that list; absent keys mean zero.
struct DfgMatrix {
  std::vector<std::string> activities;
  std::map<std::pair<uint32_t, uint32_t>, uint64_t> counts;

  uint64_t at(std::string_view from, std::string_view to) const;
  uint64_t total() const;

  friend bool operator==(const DfgMatrix&, const DfgMatrix&) = default;
};

struct DfgFilter {
  TimeWindow window;
  // Empty set means "all activities"; otherwise an edge contributes only
  // when both endpoint activities are listed.
  std::set<std::string> activity_allowlist;
};

struct DfgOptions {
  unsigned threads = 1;
};

// Literal pairwise computation over an in-memory repository: for every
// ordered pair of activity attributes (a, b), counts the event pairs
// e in •a, e' in •b with (e, e') a relation. Serves as the oracle for
// the edge-scan engine; requires a sound repository.
DfgMatrix dfg_naive(const EventRepository& repo);

// Production path: one pass over the persisted EventEvent edges, counting
// (source activity, target activity) per edge that passes the filter.
// The distinct-pair table lives within the store's memory budget and
// spills to sorted on-disk runs merged at the end, so the edge file may
// be far larger than the budget. Matrix rows cover every dictionary
// activity passing the allowlist, including zero rows.
DfgMatrix dfg_scan(const GraphStore& store, const DfgFilter& filter = {},
                   const DfgOptions& opts = {});

struct DiceEntry {
  TimeWindow window;
  DfgMatrix matrix;
  double elapsed_ms = 0;
};

// Runs dfg_scan per window with wall-clock timing. Windows must be
// accumulative: identical starts, non-decreasing ends.
std::vector<DiceEntry> dice(const GraphStore& store,
                            const std::vector<TimeWindow>& windows,
                            const DfgOptions& opts = {});

enum class DfgExportFormat { MatrixCsv, EdgeCsv, Dot };

// MatrixCsv: dense grid with a leading empty cell and zeros spelled out.
// EdgeCsv: "dfg_from,dfg_to,dfg_freq" rows for nonzero cells.
// Dot: digraph with quoted node names and label="<count>" edges.
std::string export_dfg(const DfgMatrix& matrix, DfgExportFormat format);

}  // namespace evgr
