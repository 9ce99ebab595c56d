#include "evgr/dfg.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <queue>
#include <random>
#include <sstream>
#include <thread>

#include "evgr/error.hpp"
#include "evgr/memory.hpp"

namespace evgr {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kEmptySlot = ~0ull;
constexpr uint64_t kRecordsPerPartition = kEventEdgeBlockRecords;
constexpr size_t kRunReaderBytes = 64 << 10;
constexpr size_t kRunWriterBytes = 16 << 10;

uint64_t pair_key(uint32_t a, uint32_t b) { return uint64_t(a) << 32 | b; }

struct Slot {
  uint64_t key;
  uint64_t count;
};

// Temporary spill area removed with all runs on destruction.
struct SpillArea {
  fs::path dir;
  uint64_t next_run = 0;
  std::vector<fs::path> runs;

  SpillArea() = default;
  ~SpillArea() {
    if (dir.empty()) return;
    std::error_code ec;
    fs::remove_all(dir, ec);
  }

  fs::path new_run() {
    if (dir.empty()) {
      std::random_device rd;
      dir = fs::temp_directory_path() /
            ("evgr-spill-" + std::to_string(::getpid()) + "-" +
             std::to_string(rd()));
      fs::create_directories(dir);
    }
    fs::path p = dir / ("run" + std::to_string(next_run++));
    runs.push_back(p);
    return p;
  }
};

void write_run(const fs::path& path, const Slot* slots, size_t n,
               MemoryTracker& tracker) {
  TrackedBytes guard(tracker, kRunWriterBytes);
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw_error(Errc::IoError, "cannot create spill run " + path.string());
  for (size_t i = 0; i < n; ++i) {
    unsigned char rec[16];
    for (int b = 0; b < 8; ++b) rec[b] = (slots[i].key >> (8 * b)) & 0xff;
    for (int b = 0; b < 8; ++b) rec[8 + b] = (slots[i].count >> (8 * b)) & 0xff;
    if (std::fwrite(rec, 1, 16, f) != 16) {
      std::fclose(f);
      throw_error(Errc::IoError, "short write to spill run");
    }
  }
  std::fclose(f);
}

// Open-addressed (key, count) table with a fixed byte footprint; sorting
// in place for spilling keeps the working set at exactly its capacity.
// Capacity is the budget share, shrunk when the dictionary bounds the
// number of distinct pairs below it.
class AggTable {
 public:
  AggTable(MemoryTracker& tracker, uint64_t byte_cap, uint64_t max_distinct,
           SpillArea& spill)
      : tracker_(tracker), spill_(spill) {
    // largest power of two within the budget share...
    uint64_t budget_slots = 1;
    while (budget_slots * 2 <= std::max<uint64_t>(byte_cap / sizeof(Slot), 64))
      budget_slots *= 2;
    // ...shrunk when the dictionary bounds the distinct pairs below it
    // (with headroom so a full-universe table never hits the threshold)
    uint64_t wanted_slots = 64;
    while (wanted_slots < max_distinct * 2 && wanted_slots < budget_slots)
      wanted_slots *= 2;
    capacity_ = std::min(budget_slots, wanted_slots);
    tracked_ = TrackedBytes(tracker_, capacity_ * sizeof(Slot));
    slots_.assign(capacity_, Slot{kEmptySlot, 0});
    threshold_ = capacity_ * 7 / 10;
  }

  void add(uint64_t key, uint64_t amount) {
    size_t mask = capacity_ - 1;
    size_t ix = size_t((key * 0x9e3779b97f4a7c15ull) >> 32) & mask;
    while (true) {
      Slot& slot = slots_[ix];
      if (slot.key == key) {
        slot.count += amount;
        return;
      }
      if (slot.key == kEmptySlot) {
        slot = Slot{key, amount};
        if (++occupied_ >= threshold_) spill_to_run();
        return;
      }
      ix = (ix + 1) & mask;
    }
  }

  struct Leftover {
    TrackedBytes tracked;
    std::vector<Slot> slots;
  };

  // Sorts the remaining entries and either hands them over (no runs yet,
  // keeping their tracked registration) or flushes them as a final run so
  // the merge works from files alone.
  Leftover finish(bool force_spill) {
    sort_occupied();
    if (occupied_ == 0) return {};
    if (spill_.runs.empty() && !force_spill) {
      slots_.resize(occupied_);  // capacity (and accounting) unchanged
      return Leftover{std::move(tracked_), std::move(slots_)};
    }
    write_run(spill_.new_run(), slots_.data(), occupied_, tracker_);
    return {};
  }

  bool spilled() const { return !spill_.runs.empty(); }

 private:
  void sort_occupied() {
    // kEmptySlot sorts last, leaving the live entries as a sorted prefix.
    std::sort(slots_.begin(), slots_.end(),
              [](const Slot& a, const Slot& b) { return a.key < b.key; });
  }

  void spill_to_run() {
    sort_occupied();
    write_run(spill_.new_run(), slots_.data(), occupied_, tracker_);
    std::fill(slots_.begin(), slots_.end(), Slot{kEmptySlot, 0});
    occupied_ = 0;
  }

  MemoryTracker& tracker_;
  SpillArea& spill_;
  TrackedBytes tracked_;
  std::vector<Slot> slots_;
  size_t capacity_ = 0;
  size_t occupied_ = 0;
  size_t threshold_ = 0;
};

// Buffered sequential reader over one sorted spill run.
class RunReader {
 public:
  RunReader(const fs::path& path, MemoryTracker& tracker)
      : tracked_(tracker, kRunReaderBytes) {
    file_ = std::fopen(path.c_str(), "rb");
    if (!file_) throw_error(Errc::IoError, "cannot open spill run " + path.string());
    buf_.resize(kRunReaderBytes / 16 * 16);
    refill();
  }
  ~RunReader() {
    if (file_) std::fclose(file_);
  }
  RunReader(const RunReader&) = delete;
  RunReader(RunReader&& o) noexcept
      : tracked_(std::move(o.tracked_)),
        file_(std::exchange(o.file_, nullptr)),
        buf_(std::move(o.buf_)),
        pos_(o.pos_),
        len_(o.len_),
        eof_(o.eof_) {}

  bool done() const { return pos_ >= len_ && eof_; }
  Slot current() const {
    const unsigned char* p = buf_.data() + pos_;
    uint64_t key = 0, count = 0;
    for (int b = 7; b >= 0; --b) key = key << 8 | p[b];
    for (int b = 7; b >= 0; --b) count = count << 8 | p[8 + b];
    return Slot{key, count};
  }
  void advance() {
    pos_ += 16;
    if (pos_ >= len_ && !eof_) refill();
  }

 private:
  void refill() {
    len_ = std::fread(buf_.data(), 1, buf_.size(), file_);
    len_ -= len_ % 16;
    pos_ = 0;
    if (len_ == 0) eof_ = true;
  }

  TrackedBytes tracked_;
  FILE* file_ = nullptr;
  std::vector<unsigned char> buf_;
  size_t pos_ = 0, len_ = 0;
  bool eof_ = false;
};

// Merges sorted (key, count) sources, summing counts per key.
template <typename Emit>
void merge_sorted(std::vector<RunReader>& files, std::vector<AggTable::Leftover>& arrays,
                  Emit&& emit) {
  struct Cursor {
    uint64_t key;
    size_t source;  // files first, then arrays
  };
  auto cmp = [](const Cursor& a, const Cursor& b) { return a.key > b.key; };
  std::priority_queue<Cursor, std::vector<Cursor>, decltype(cmp)> heap(cmp);

  std::vector<size_t> array_pos(arrays.size(), 0);
  for (size_t i = 0; i < files.size(); ++i)
    if (!files[i].done()) heap.push({files[i].current().key, i});
  for (size_t i = 0; i < arrays.size(); ++i)
    if (!arrays[i].slots.empty()) heap.push({arrays[i].slots[0].key, files.size() + i});

  while (!heap.empty()) {
    uint64_t key = heap.top().key;
    uint64_t total = 0;
    while (!heap.empty() && heap.top().key == key) {
      size_t source = heap.top().source;
      heap.pop();
      if (source < files.size()) {
        RunReader& r = files[source];
        total += r.current().count;
        r.advance();
        if (!r.done()) heap.push({r.current().key, source});
      } else {
        size_t ix = source - files.size();
        total += arrays[ix].slots[array_pos[ix]].count;
        if (++array_pos[ix] < arrays[ix].slots.size())
          heap.push({arrays[ix].slots[array_pos[ix]].key, source});
      }
    }
    emit(key, total);
  }
}

std::vector<std::string> sorted_unique(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

uint32_t index_of(const std::vector<std::string>& sorted, const std::string& name) {
  return uint32_t(std::lower_bound(sorted.begin(), sorted.end(), name) -
                  sorted.begin());
}

}  // namespace

uint64_t DfgMatrix::at(std::string_view from, std::string_view to) const {
  auto find = [&](std::string_view name) -> std::optional<uint32_t> {
    auto it = std::lower_bound(activities.begin(), activities.end(), name);
    if (it == activities.end() || *it != name) return std::nullopt;
    return uint32_t(it - activities.begin());
  };
  auto f = find(from), t = find(to);
  if (!f || !t) return 0;
  auto it = counts.find({*f, *t});
  return it == counts.end() ? 0 : it->second;
}

uint64_t DfgMatrix::total() const {
  uint64_t sum = 0;
  for (const auto& [key, count] : counts) sum += count;
  return sum;
}

DfgMatrix dfg_naive(const EventRepository& repo) {
  SoundnessReport report = repo.validate_soundness();
  if (!report.is_sound())
    throw_error(Errc::SoundnessRequired,
                "repository has " + std::to_string(report.violations.size()) +
                    " soundness violations");

  // activity attribute nodes and their event in-neighborhoods
  std::vector<NodeId> attrs;
  repo.for_each_node([&](NodeId id, NodeKind kind) {
    if (kind == NodeKind::Attribute && repo.attribute(id).key == kActivityKey)
      attrs.push_back(id);
  });

  std::vector<std::string> names;
  names.reserve(attrs.size());
  for (NodeId a : attrs) names.push_back(repo.attribute(a).val);

  DfgMatrix matrix;
  matrix.activities = sorted_unique(names);

  // (e, e') in R restricted to events reduces to "e' is e's unique
  // event successor"; soundness guarantees at most one.
  std::vector<uint64_t> succ(repo.node_count(), kEmptySlot);
  repo.for_each_relation([&](NodeId src, NodeId dst, RelationKind kind) {
    if (kind == RelationKind::EventEvent) succ[src.value] = dst.value;
  });

  std::vector<std::vector<NodeId>> preds(attrs.size());
  for (size_t i = 0; i < attrs.size(); ++i) preds[i] = repo.predecessors(attrs[i]);

  for (size_t i = 0; i < attrs.size(); ++i) {
    for (size_t j = 0; j < attrs.size(); ++j) {
      uint64_t c = 0;
      for (NodeId e : preds[i])
        for (NodeId ep : preds[j])
          if (succ[e.value] == ep.value) ++c;
      if (c > 0) {
        uint32_t from = index_of(matrix.activities, repo.attribute(attrs[i]).val);
        uint32_t to = index_of(matrix.activities, repo.attribute(attrs[j]).val);
        matrix.counts[{from, to}] += c;
      }
    }
  }
  return matrix;
}

DfgMatrix dfg_scan(const GraphStore& store, const DfgFilter& filter,
                   const DfgOptions& opts) {
  filter.window.validate();
  MemoryTracker& tracker = store.tracker();
  const std::vector<std::string>& dict = store.activities();

  // Matrix universe: dictionary activities passing the allowlist.
  DfgMatrix matrix;
  std::vector<uint32_t> dict_to_index(dict.size(), UINT32_MAX);
  {
    std::vector<std::string> names;
    for (const std::string& name : dict)
      if (filter.activity_allowlist.empty() || filter.activity_allowlist.count(name))
        names.push_back(name);
    matrix.activities = sorted_unique(names);
    for (uint32_t id = 0; id < dict.size(); ++id)
      if (filter.activity_allowlist.empty() ||
          filter.activity_allowlist.count(dict[id]))
        dict_to_index[id] = index_of(matrix.activities, dict[id]);
  }

  std::optional<TimeWindow> window;
  if (filter.window.start || filter.window.end) window = filter.window;

  uint64_t total_records = store.event_edge_count();
  unsigned threads = std::max(1u, opts.threads);
  uint64_t per_worker =
      (total_records / threads + kRecordsPerPartition) / kRecordsPerPartition *
      kRecordsPerPartition;
  if (per_worker == 0) per_worker = kRecordsPerPartition;

  uint64_t table_bytes = tracker.limit() / 2 / threads;
  uint64_t max_distinct = dict.size() < (1u << 16)
                              ? uint64_t(dict.size()) * dict.size()
                              : UINT64_MAX;

  std::vector<SpillArea> spills(threads);
  std::vector<AggTable::Leftover> leftovers(threads);
  std::vector<std::exception_ptr> errors(threads);

  auto run_worker = [&](unsigned w) {
    try {
      uint64_t first = w * per_worker;
      uint64_t end = std::min(total_records, first + per_worker);
      if (first >= end) return;
      AggTable table(tracker, table_bytes, max_distinct, spills[w]);
      EdgeScan scan = store.scan_event_edges(window, first, end);
      while (const EdgeSegment* seg = scan.next()) {
        for (const EeEdge& edge : seg->entries) {
          if (edge.src_act >= dict_to_index.size() ||
              edge.dst_act >= dict_to_index.size())
            throw_error(Errc::CorruptStore, "edge references unknown activity id");
          if (dict_to_index[edge.src_act] == UINT32_MAX ||
              dict_to_index[edge.dst_act] == UINT32_MAX)
            continue;
          table.add(pair_key(edge.src_act, edge.dst_act), 1);
        }
      }
      leftovers[w] = table.finish(table.spilled());
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (threads == 1) {
    run_worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(run_worker, w);
    for (std::thread& t : pool) t.join();
  }
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);

  // Cascade run files down to a mergeable fan-in.
  std::vector<fs::path> runs;
  SpillArea cascade_area;
  for (SpillArea& s : spills)
    runs.insert(runs.end(), s.runs.begin(), s.runs.end());
  size_t fan_in =
      std::max<size_t>(2, tracker.limit() / 4 / (kRunReaderBytes + kRunWriterBytes));
  while (runs.size() > fan_in) {
    std::vector<fs::path> next;
    for (size_t i = 0; i < runs.size(); i += fan_in) {
      size_t group = std::min(fan_in, runs.size() - i);
      std::vector<RunReader> readers;
      readers.reserve(group);
      for (size_t j = 0; j < group; ++j) readers.emplace_back(runs[i + j], tracker);
      fs::path out = cascade_area.new_run();
      TrackedBytes guard(tracker, kRunWriterBytes);
      FILE* f = std::fopen(out.c_str(), "wb");
      if (!f) throw_error(Errc::IoError, "cannot create merge run");
      std::vector<AggTable::Leftover> none;
      bool short_write = false;
      merge_sorted(readers, none, [&](uint64_t key, uint64_t count) {
        unsigned char rec[16];
        for (int b = 0; b < 8; ++b) rec[b] = (key >> (8 * b)) & 0xff;
        for (int b = 0; b < 8; ++b) rec[8 + b] = (count >> (8 * b)) & 0xff;
        if (std::fwrite(rec, 1, 16, f) != 16) short_write = true;
      });
      std::fclose(f);
      if (short_write) throw_error(Errc::IoError, "short write to merge run");
      next.push_back(out);
    }
    runs = std::move(next);
  }

  {
    std::vector<RunReader> readers;
    readers.reserve(runs.size());
    for (const fs::path& p : runs) readers.emplace_back(p, tracker);
    merge_sorted(readers, leftovers, [&](uint64_t key, uint64_t count) {
      uint32_t from = dict_to_index[uint32_t(key >> 32)];
      uint32_t to = dict_to_index[uint32_t(key & 0xffffffff)];
      matrix.counts.emplace(std::make_pair(from, to), count);
    });
  }
  return matrix;
}

std::vector<DiceEntry> dice(const GraphStore& store,
                            const std::vector<TimeWindow>& windows,
                            const DfgOptions& opts) {
  for (size_t i = 1; i < windows.size(); ++i) {
    if (windows[i].start != windows[0].start)
      throw_error(Errc::InvalidDicing, "windows must share one start");
    const auto& prev_end = windows[i - 1].end;
    const auto& cur_end = windows[i].end;
    bool ok = !prev_end || (cur_end ? *cur_end >= *prev_end : true);
    if (!ok)
      throw_error(Errc::InvalidDicing, "window ends must be non-decreasing");
  }

  std::vector<DiceEntry> out;
  out.reserve(windows.size());
  for (const TimeWindow& w : windows) {
    auto t0 = std::chrono::steady_clock::now();
    DfgMatrix m = dfg_scan(store, DfgFilter{w, {}}, opts);
    auto t1 = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.push_back(DiceEntry{w, std::move(m), ms});
  }
  return out;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string export_dfg(const DfgMatrix& matrix, DfgExportFormat format) {
  std::ostringstream out;
  switch (format) {
    case DfgExportFormat::MatrixCsv: {
      for (const std::string& name : matrix.activities) out << ',' << csv_escape(name);
      out << '\n';
      for (uint32_t row = 0; row < matrix.activities.size(); ++row) {
        out << csv_escape(matrix.activities[row]);
        for (uint32_t col = 0; col < matrix.activities.size(); ++col) {
          auto it = matrix.counts.find({row, col});
          out << ',' << (it == matrix.counts.end() ? 0 : it->second);
        }
        out << '\n';
      }
      break;
    }
    case DfgExportFormat::EdgeCsv: {
      out << "dfg_from,dfg_to,dfg_freq\n";
      for (const auto& [key, count] : matrix.counts) {
        if (count == 0) continue;
        out << csv_escape(matrix.activities[key.first]) << ','
            << csv_escape(matrix.activities[key.second]) << ',' << count << '\n';
      }
      break;
    }
    case DfgExportFormat::Dot: {
      out << "digraph dfg {\n";
      for (const std::string& name : matrix.activities)
        out << "  \"" << dot_escape(name) << "\";\n";
      for (const auto& [key, count] : matrix.counts) {
        if (count == 0) continue;
        out << "  \"" << dot_escape(matrix.activities[key.first]) << "\" -> \""
            << dot_escape(matrix.activities[key.second]) << "\" [label=\"" << count
            << "\"];\n";
      }
      out << "}\n";
      break;
    }
  }
  return out.str();
}

}  // namespace evgr
