#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evgr/store.hpp"
#include "evgr/time.hpp"

namespace evgr {

struct BenchRow {
  Instant window_end = 0;
  uint64_t events = 0;          // events with a timestamp inside the window
  double dfg_ms = 0;            // median over the timed repeats
  uint64_t peak_mem_bytes = 0;  // tracked high-water mark
};

struct BenchReport {
  std::vector<BenchRow> rows;

  // Header: window_end,events,dfg_ms,peak_mem_bytes
  std::string to_csv() const;
};

struct BenchOptions {
  int64_t window_step_ms = 86400000;
  unsigned repeat = 3;
  unsigned threads = 1;
};

// Accumulative dicing benchmark: windows start at the store's earliest
// event and grow by window_step_ms until everything is covered. Each row
// reports the median wall clock of `repeat` runs after one discarded
// warm-up. Errors with IoError on a store without events.
BenchReport run_bench(const GraphStore& store, const BenchOptions& opts);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace evgr
