#include "evgr/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "evgr/dfg.hpp"
#include "evgr/error.hpp"

namespace evgr {

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::vector<double> ranks(std::span<const double> values) {
  size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> rank(n);
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = (double(i) + double(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  size_t n = x.size();
  if (n < 2 || y.size() != n) return 0.0;
  std::vector<double> rx = ranks(x), ry = ranks(y);
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / double(n);
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / double(n);
  double cov = 0, vx = 0, vy = 0;
  for (size_t i = 0; i < n; ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0 || vy == 0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

BenchReport run_bench(const GraphStore& store, const BenchOptions& opts) {
  auto range = store.event_time_range();
  if (!range) throw_error(Errc::IoError, "store has no events to benchmark");
  if (opts.window_step_ms < 1)
    throw_error(Errc::ParseError, "window step must be positive");
  auto [lo, hi] = *range;

  std::vector<Instant> timestamps = store.event_timestamps();
  std::sort(timestamps.begin(), timestamps.end());

  DfgOptions dfg_opts{opts.threads};
  unsigned repeat = std::max(1u, opts.repeat);

  BenchReport report;
  for (Instant end = lo + opts.window_step_ms;; end += opts.window_step_ms) {
    TimeWindow window{lo, end};
    DfgFilter filter{window, {}};

    dfg_scan(store, filter, dfg_opts);  // warm-up, discarded

    std::vector<double> times;
    times.reserve(repeat);
    uint64_t peak = 0;
    for (unsigned r = 0; r < repeat; ++r) {
      store.tracker().reset_peak();
      auto t0 = std::chrono::steady_clock::now();
      dfg_scan(store, filter, dfg_opts);
      auto t1 = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      peak = std::max(peak, store.tracker().peak());
    }
    uint64_t events = uint64_t(
        std::upper_bound(timestamps.begin(), timestamps.end(), end) -
        timestamps.begin());
    report.rows.push_back(BenchRow{end, events, median(std::move(times)), peak});
    if (end >= hi) break;
  }
  return report;
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out << "window_end,events,dfg_ms,peak_mem_bytes\n";
  for (const BenchRow& row : rows) {
    char ms[32];
    std::snprintf(ms, sizeof(ms), "%.3f", row.dfg_ms);
    out << format_iso8601(row.window_end) << ',' << row.events << ',' << ms << ','
        << row.peak_mem_bytes << '\n';
  }
  return out.str();
}

}  // namespace evgr
