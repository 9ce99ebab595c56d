#include "evgr/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <limits>
#include <unordered_set>

#include "evgr/error.hpp"

namespace evgr {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'E', 'V', 'G', 'R'};
constexpr uint16_t kFormatVersion = 1;
constexpr size_t kHeaderSize = 6;
constexpr uint64_t kEeBlockRecords = kEventEdgeBlockRecords;

constexpr size_t kLogRecord = 12;
constexpr size_t kTraceRecord = 12;
constexpr size_t kEventRecord = 20;
constexpr size_t kAttrRecord = 16;
constexpr size_t kRelRecord = 16;
constexpr size_t kEeRecord = 40;
constexpr size_t kIdxRecord = 16;

// --- little-endian encoding ---

void put_u16(std::string& out, uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char(v >> 8));
}
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void put_i64(std::string& out, int64_t v) { put_u64(out, uint64_t(v)); }

uint16_t get_u16(const unsigned char* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }
uint32_t get_u32(const unsigned char* p) {
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
uint64_t get_u64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
int64_t get_i64(const unsigned char* p) { return int64_t(get_u64(p)); }

struct FileSpec {
  const char* name;
  size_t record_size;  // 0 = variable width (dictionary)
};

enum FileIx : size_t {
  kDictActivity = 0,
  kDictString,
  kNodesLog,
  kNodesTrace,
  kNodesEvent,
  kNodesAttr,
  kRelLogTrace,
  kRelTraceEvent,
  kRelEventEvent,
  kRelEventAttr,
  kEeIndex,
  kFileCount,
};

constexpr FileSpec kFiles[kFileCount] = {
    {"dict_activity.evgr", 0},
    {"dict_string.evgr", 0},
    {"nodes_log.evgr", kLogRecord},
    {"nodes_trace.evgr", kTraceRecord},
    {"nodes_event.evgr", kEventRecord},
    {"nodes_attribute.evgr", kAttrRecord},
    {"rel_log_trace.evgr", kRelRecord},
    {"rel_trace_event.evgr", kRelRecord},
    {"rel_event_event.evgr", kEeRecord},
    {"rel_event_attr.evgr", kRelRecord},
    {"rel_event_event.idx", kIdxRecord},
};

[[noreturn]] void io_fail(const std::string& what) {
  throw_error(Errc::IoError, what + ": " + std::strerror(errno));
}

// RAII read-only descriptor with pread access.
class Fd {
 public:
  Fd() = default;
  explicit Fd(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd_ < 0) io_fail("open " + path.string());
  }
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      close_now();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { close_now(); }

  void read_at(uint64_t offset, void* buf, size_t len) const {
    size_t done = 0;
    while (done < len) {
      ssize_t n = ::pread(fd_, static_cast<char*>(buf) + done, len - done,
                          off_t(offset + done));
      if (n < 0) {
        if (errno == EINTR) continue;
        io_fail("pread");
      }
      if (n == 0) throw_error(Errc::CorruptStore, "unexpected end of file");
      done += size_t(n);
    }
  }

 private:
  void close_now() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  int fd_ = -1;
};

uint64_t size_of_file(const fs::path& path) {
  std::error_code ec;
  auto n = fs::file_size(path, ec);
  if (ec) io_fail("stat " + path.string());
  return n;
}

void write_header(const fs::path& path) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) io_fail("create " + path.string());
  std::string header(kMagic, 4);
  put_u16(header, kFormatVersion);
  if (std::fwrite(header.data(), 1, header.size(), f) != header.size()) {
    std::fclose(f);
    io_fail("write header " + path.string());
  }
  std::fclose(f);
}

void check_header(const fs::path& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) io_fail("open " + path.string());
  unsigned char header[kHeaderSize];
  size_t n = std::fread(header, 1, kHeaderSize, f);
  std::fclose(f);
  if (n != kHeaderSize || std::memcmp(header, kMagic, 4) != 0)
    throw_error(Errc::CorruptStore, path.string() + " has a bad header");
  uint16_t version = get_u16(header + 4);
  if (version != kFormatVersion)
    throw_error(Errc::VersionMismatch,
                path.string() + " is format version " + std::to_string(version) +
                    ", expected " + std::to_string(kFormatVersion));
}

// Buffered append handle flushing through to disk on finish().
class Appender {
 public:
  Appender() = default;
  explicit Appender(const fs::path& path) : path_(path) {
    file_ = std::fopen(path.c_str(), "ab");
    if (!file_) io_fail("append " + path.string());
  }
  Appender(Appender&& o) noexcept
      : path_(std::move(o.path_)), file_(std::exchange(o.file_, nullptr)) {}
  Appender& operator=(Appender&& o) noexcept {
    if (this != &o) {
      close_now();
      path_ = std::move(o.path_);
      file_ = std::exchange(o.file_, nullptr);
    }
    return *this;
  }
  ~Appender() { close_now(); }

  void write(const std::string& bytes) {
    if (std::fwrite(bytes.data(), 1, bytes.size(), file_) != bytes.size())
      io_fail("write " + path_.string());
  }

  void sync() {
    if (std::fflush(file_) != 0) io_fail("flush " + path_.string());
    if (::fsync(fileno(file_)) != 0) io_fail("fsync " + path_.string());
  }

 private:
  void close_now() {
    if (file_) std::fclose(file_);
    file_ = nullptr;
  }
  fs::path path_;
  FILE* file_ = nullptr;
};

// Exclusive writer lock on <dir>/lock, released on destruction.
class WriterLock {
 public:
  explicit WriterLock(const fs::path& dir) {
    fd_ = ::open((dir / "lock").c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) io_fail("open lock file");
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      throw_error(Errc::IoError, "store at " + dir.string() +
                                     " is locked by another writer");
    }
  }
  WriterLock(WriterLock&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  ~WriterLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

 private:
  int fd_ = -1;
};

struct Dictionary {
  std::vector<std::string> values;
  std::unordered_map<std::string, uint32_t> ids;

  uint32_t intern(const std::string& value, std::string* appended) {
    if (auto it = ids.find(value); it != ids.end()) return it->second;
    uint32_t id = uint32_t(values.size());
    values.push_back(value);
    ids.emplace(value, id);
    if (appended) {
      put_u16(*appended, uint16_t(value.size()));
      appended->append(value);
    }
    return id;
  }

  const std::string& resolve(uint32_t id, const char* what) const {
    if (id >= values.size())
      throw_error(Errc::CorruptStore, std::string(what) + " id " +
                                          std::to_string(id) + " out of range");
    return values[id];
  }
};

// Returns the number of bytes holding complete records.
uint64_t load_dictionary(const fs::path& path, Dictionary& dict) {
  uint64_t size = size_of_file(path);
  Fd fd(path);
  std::vector<unsigned char> bytes(size - kHeaderSize);
  if (!bytes.empty()) fd.read_at(kHeaderSize, bytes.data(), bytes.size());
  size_t pos = 0;
  while (pos + 2 <= bytes.size()) {
    uint16_t len = get_u16(bytes.data() + pos);
    if (pos + 2 + len > bytes.size()) break;  // torn tail record
    std::string value(reinterpret_cast<const char*>(bytes.data() + pos + 2), len);
    uint32_t id = uint32_t(dict.values.size());
    dict.ids.emplace(value, id);
    dict.values.push_back(std::move(value));
    pos += 2 + size_t(len);
  }
  return kHeaderSize + pos;
}

}  // namespace

// ---------------------------------------------------------------------------
// GraphStore::Impl

struct GraphStore::Impl {
  fs::path dir;
  MemoryBudget budget;
  mutable MemoryTracker tracker;

  Dictionary activities;
  Dictionary strings;
  uint64_t counts[kFileCount] = {0};
  uint64_t valid_bytes[kFileCount] = {0};  // header + complete records
  std::vector<std::string> logs;  // log names in store order

  explicit Impl(fs::path d, MemoryBudget b) : dir(std::move(d)), budget(b), tracker(b) {}

  fs::path path_of(size_t ix) const { return dir / kFiles[ix].name; }

  uint64_t next_node_id() const {
    return counts[kNodesLog] + counts[kNodesTrace] + counts[kNodesEvent] +
           counts[kNodesAttr];
  }

  bool has_log(std::string_view name) const {
    return std::find(logs.begin(), logs.end(), name) != logs.end();
  }
};

namespace {

// All appends from one writer (persist or LogWriter) funnel through this
// session so the two paths produce identical bytes.
struct WriteSession {
  GraphStore::Impl& store;
  WriterLock lock;
  Appender appenders[kFileCount];
  std::string pending[kFileCount];
  uint64_t appended[kFileCount] = {0};
  uint64_t new_activities = 0;
  uint64_t new_strings = 0;

  // running summary of the current (partial) EventEvent index block
  Instant block_min = std::numeric_limits<Instant>::max();
  Instant block_max = std::numeric_limits<Instant>::min();

  explicit WriteSession(GraphStore::Impl& s) : store(s), lock(s.dir) {
    // Drop torn tail records left by an interrupted writer so appends
    // stay record-aligned.
    for (size_t i = 0; i < kFileCount; ++i) {
      fs::path p = s.path_of(i);
      if (size_of_file(p) > s.valid_bytes[i] &&
          ::truncate(p.c_str(), off_t(s.valid_bytes[i])) != 0)
        io_fail("truncate " + p.string());
    }
    for (size_t i = 0; i < kFileCount; ++i) appenders[i] = Appender(s.path_of(i));
    seed_partial_block();
  }

  // Re-derive min/max of the EventEvent records past the last complete
  // index block so a resumed store keeps its index consistent.
  void seed_partial_block() {
    uint64_t ee = store.counts[kRelEventEvent];
    uint64_t indexed = store.counts[kEeIndex] * kEeBlockRecords;
    if (ee <= indexed) return;
    Fd fd(store.path_of(kRelEventEvent));
    std::vector<unsigned char> buf((ee - indexed) * kEeRecord);
    fd.read_at(kHeaderSize + indexed * kEeRecord, buf.data(), buf.size());
    for (size_t pos = 0; pos < buf.size(); pos += kEeRecord) {
      Instant sts = get_i64(buf.data() + pos + 24);
      Instant dts = get_i64(buf.data() + pos + 32);
      block_min = std::min({block_min, sts, dts});
      block_max = std::max({block_max, sts, dts});
    }
  }

  uint32_t intern_activity(const std::string& name) {
    size_t before = store.activities.values.size();
    uint32_t id = store.activities.intern(name, &pending[kDictActivity]);
    if (store.activities.values.size() > before) ++new_activities;
    return id;
  }

  uint32_t intern_string(const std::string& value) {
    size_t before = store.strings.values.size();
    uint32_t id = store.strings.intern(value, &pending[kDictString]);
    if (store.strings.values.size() > before) ++new_strings;
    return id;
  }

  void append_log(uint64_t node, const std::string& name) {
    put_u64(pending[kNodesLog], node);
    put_u32(pending[kNodesLog], intern_string(name));
    ++appended[kNodesLog];
    store.logs.push_back(name);
  }

  void append_trace(uint64_t node, const std::string& case_name) {
    put_u64(pending[kNodesTrace], node);
    put_u32(pending[kNodesTrace], intern_string(case_name));
    ++appended[kNodesTrace];
  }

  void append_event(uint64_t node, Instant ts, uint32_t ordinal) {
    put_u64(pending[kNodesEvent], node);
    put_i64(pending[kNodesEvent], ts);
    put_u32(pending[kNodesEvent], ordinal);
    ++appended[kNodesEvent];
  }

  void append_attribute(uint64_t node, const std::string& key, const std::string& val) {
    uint32_t key_sid = intern_string(key);
    uint32_t val_ref = key == kActivityKey ? intern_activity(val) : intern_string(val);
    put_u64(pending[kNodesAttr], node);
    put_u32(pending[kNodesAttr], key_sid);
    put_u32(pending[kNodesAttr], val_ref);
    ++appended[kNodesAttr];
  }

  void append_pair(size_t file, uint64_t src, uint64_t dst) {
    put_u64(pending[file], src);
    put_u64(pending[file], dst);
    ++appended[file];
  }

  void append_ee(uint64_t src, uint64_t dst, uint32_t src_act, uint32_t dst_act,
                 Instant src_ts, Instant dst_ts) {
    std::string& out = pending[kRelEventEvent];
    put_u64(out, src);
    put_u64(out, dst);
    put_u32(out, src_act);
    put_u32(out, dst_act);
    put_i64(out, src_ts);
    put_i64(out, dst_ts);
    ++appended[kRelEventEvent];
    block_min = std::min({block_min, src_ts, dst_ts});
    block_max = std::max({block_max, src_ts, dst_ts});
    uint64_t total = store.counts[kRelEventEvent] + appended[kRelEventEvent];
    if (total % kEeBlockRecords == 0) {
      put_i64(pending[kEeIndex], block_min);
      put_i64(pending[kEeIndex], block_max);
      ++appended[kEeIndex];
      block_min = std::numeric_limits<Instant>::max();
      block_max = std::numeric_limits<Instant>::min();
    }
    // keep the pending buffer from growing without bound on large appends
    if (out.size() >= (1u << 20)) flush_file(kRelEventEvent);
  }

  void flush_file(size_t ix) {
    if (!pending[ix].empty()) {
      appenders[ix].write(pending[ix]);
      pending[ix].clear();
    }
  }

  WriteStats finish() {
    for (size_t i = 0; i < kFileCount; ++i) {
      flush_file(i);
      appenders[i].sync();
      store.counts[i] += appended[i];
      store.valid_bytes[i] = size_of_file(store.path_of(i));
    }
    WriteStats stats;
    stats.logs = appended[kNodesLog];
    stats.traces = appended[kNodesTrace];
    stats.events = appended[kNodesEvent];
    stats.attributes = appended[kNodesAttr];
    stats.lt_edges = appended[kRelLogTrace];
    stats.te_edges = appended[kRelTraceEvent];
    stats.ee_edges = appended[kRelEventEvent];
    stats.ea_edges = appended[kRelEventAttr];
    stats.new_activities = new_activities;
    return stats;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// GraphStore

GraphStore::GraphStore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
GraphStore::GraphStore(GraphStore&&) noexcept = default;
GraphStore& GraphStore::operator=(GraphStore&&) noexcept = default;
GraphStore::~GraphStore() = default;

GraphStore GraphStore::open(const fs::path& dir, MemoryBudget budget) {
  std::error_code ec;
  if (fs::exists(dir, ec) && !fs::is_directory(dir, ec))
    throw_error(Errc::IoError, dir.string() + " is not a directory");
  fs::create_directories(dir, ec);
  if (ec) throw_error(Errc::IoError, "cannot create " + dir.string());

  auto impl = std::make_unique<Impl>(dir, budget);
  for (size_t i = 0; i < kFileCount; ++i) {
    fs::path p = impl->path_of(i);
    if (!fs::exists(p)) {
      write_header(p);
      continue;
    }
    if (size_of_file(p) < kHeaderSize)
      throw_error(Errc::CorruptStore, p.string() + " is shorter than its header");
    check_header(p);
  }

  impl->valid_bytes[kDictActivity] =
      load_dictionary(impl->path_of(kDictActivity), impl->activities);
  impl->valid_bytes[kDictString] =
      load_dictionary(impl->path_of(kDictString), impl->strings);
  for (size_t i = kNodesLog; i < kFileCount; ++i) {
    impl->counts[i] = (size_of_file(impl->path_of(i)) - kHeaderSize) /
                      kFiles[i].record_size;
    impl->valid_bytes[i] = kHeaderSize + impl->counts[i] * kFiles[i].record_size;
  }
  impl->counts[kDictActivity] = impl->activities.values.size();
  impl->counts[kDictString] = impl->strings.values.size();

  // resolve log names once; the log file stays small
  if (impl->counts[kNodesLog] > 0) {
    Fd fd(impl->path_of(kNodesLog));
    std::vector<unsigned char> buf(impl->counts[kNodesLog] * kLogRecord);
    fd.read_at(kHeaderSize, buf.data(), buf.size());
    for (size_t pos = 0; pos < buf.size(); pos += kLogRecord)
      impl->logs.push_back(
          impl->strings.resolve(get_u32(buf.data() + pos + 8), "string"));
  }
  return GraphStore(std::move(impl));
}

WriteStats GraphStore::persist(const EventRepository& repo) {
  SoundnessReport report = repo.validate_soundness();
  if (!report.is_sound())
    throw_error(Errc::SoundnessRequired,
                "repository has " + std::to_string(report.violations.size()) +
                    " soundness violations (first: " +
                    report.violations.front().description + ")");

  repo.for_each_node([&](NodeId id, NodeKind kind) {
    if (kind == NodeKind::Log && impl_->has_log(repo.attribute(id).val))
      throw_error(Errc::DuplicateLog,
                  "log '" + repo.attribute(id).val + "' already in store");
  });

  WriteSession session(*impl_);
  uint64_t base = impl_->next_node_id();

  repo.for_each_node([&](NodeId id, NodeKind kind) {
    uint64_t node = base + id.value;
    switch (kind) {
      case NodeKind::Log: session.append_log(node, repo.attribute(id).val); break;
      case NodeKind::Trace: session.append_trace(node, repo.attribute(id).val); break;
      case NodeKind::Event: {
        const EventRecord& rec = repo.event(id);
        session.append_event(node, rec.timestamp, rec.ordinal);
        break;
      }
      case NodeKind::Attribute: {
        const AttributeRecord& rec = repo.attribute(id);
        session.append_attribute(node, rec.key, rec.val);
        break;
      }
    }
  });

  // activity dictionary id of every event, via its activity attribute
  std::vector<uint32_t> act_of(repo.node_count(), 0);
  repo.for_each_relation([&](NodeId src, NodeId dst, RelationKind kind) {
    if (kind == RelationKind::EventAttribute &&
        repo.attribute(dst).key == kActivityKey)
      act_of[src.value] = impl_->activities.ids.at(repo.attribute(dst).val);
  });

  repo.for_each_relation([&](NodeId src, NodeId dst, RelationKind kind) {
    switch (kind) {
      case RelationKind::LogTrace:
        session.append_pair(kRelLogTrace, base + src.value, base + dst.value);
        break;
      case RelationKind::TraceEvent:
        session.append_pair(kRelTraceEvent, base + src.value, base + dst.value);
        break;
      case RelationKind::EventAttribute:
        session.append_pair(kRelEventAttr, base + src.value, base + dst.value);
        break;
      case RelationKind::EventEvent:
        session.append_ee(base + src.value, base + dst.value, act_of[src.value],
                          act_of[dst.value], repo.event(src).timestamp,
                          repo.event(dst).timestamp);
        break;
    }
  });

  return session.finish();
}

StoreStats GraphStore::stats() const {
  StoreStats s;
  s.logs = impl_->counts[kNodesLog];
  s.traces = impl_->counts[kNodesTrace];
  s.events = impl_->counts[kNodesEvent];
  s.attributes = impl_->counts[kNodesAttr];
  s.activities = impl_->activities.values.size();
  s.log_trace_edges = impl_->counts[kRelLogTrace];
  s.trace_event_edges = impl_->counts[kRelTraceEvent];
  s.event_event_edges = impl_->counts[kRelEventEvent];
  s.event_attr_edges = impl_->counts[kRelEventAttr];
  return s;
}

const std::vector<std::string>& GraphStore::activities() const {
  return impl_->activities.values;
}

std::optional<uint32_t> GraphStore::activity_id(std::string_view name) const {
  auto it = impl_->activities.ids.find(std::string(name));
  if (it == impl_->activities.ids.end()) return std::nullopt;
  return it->second;
}

bool GraphStore::has_log(std::string_view name) const { return impl_->has_log(name); }

std::vector<std::string> GraphStore::log_names() const { return impl_->logs; }

uint64_t GraphStore::event_edge_count() const {
  return impl_->counts[kRelEventEvent];
}

const fs::path& GraphStore::dir() const { return impl_->dir; }
MemoryBudget GraphStore::budget() const { return impl_->budget; }
MemoryTracker& GraphStore::tracker() const { return impl_->tracker; }

std::vector<Instant> GraphStore::event_timestamps() const {
  uint64_t count = impl_->counts[kNodesEvent];
  std::vector<Instant> out;
  out.reserve(count);
  if (count == 0) return out;
  Fd fd(impl_->path_of(kNodesEvent));
  constexpr size_t kBatch = 4096;
  TrackedBytes guard(impl_->tracker, kBatch * kEventRecord);
  std::vector<unsigned char> buf(kBatch * kEventRecord);
  for (uint64_t done = 0; done < count;) {
    size_t n = size_t(std::min<uint64_t>(kBatch, count - done));
    fd.read_at(kHeaderSize + done * kEventRecord, buf.data(), n * kEventRecord);
    for (size_t i = 0; i < n; ++i)
      out.push_back(get_i64(buf.data() + i * kEventRecord + 8));
    done += n;
  }
  return out;
}

std::optional<std::pair<Instant, Instant>> GraphStore::event_time_range() const {
  uint64_t count = impl_->counts[kNodesEvent];
  if (count == 0) return std::nullopt;
  Fd fd(impl_->path_of(kNodesEvent));
  constexpr size_t kBatch = 4096;
  TrackedBytes guard(impl_->tracker, kBatch * kEventRecord);
  std::vector<unsigned char> buf(kBatch * kEventRecord);
  Instant lo = std::numeric_limits<Instant>::max();
  Instant hi = std::numeric_limits<Instant>::min();
  for (uint64_t done = 0; done < count;) {
    size_t n = size_t(std::min<uint64_t>(kBatch, count - done));
    fd.read_at(kHeaderSize + done * kEventRecord, buf.data(), n * kEventRecord);
    for (size_t i = 0; i < n; ++i) {
      Instant ts = get_i64(buf.data() + i * kEventRecord + 8);
      lo = std::min(lo, ts);
      hi = std::max(hi, ts);
    }
    done += n;
  }
  return std::make_pair(lo, hi);
}

// ---------------------------------------------------------------------------
// EdgeScan

struct EdgeScan::Impl {
  Fd fd;
  std::optional<TimeWindow> window;
  uint64_t cursor = 0;
  uint64_t end = 0;
  std::vector<std::pair<Instant, Instant>> index;  // per complete block
  TrackedBytes tracked;
  std::vector<unsigned char> raw;
  EdgeSegment segment;
};

EdgeScan::EdgeScan(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
EdgeScan::~EdgeScan() = default;
EdgeScan::EdgeScan(EdgeScan&&) noexcept = default;
EdgeScan& EdgeScan::operator=(EdgeScan&&) noexcept = default;

EdgeScan GraphStore::scan_event_edges(std::optional<TimeWindow> window) const {
  return scan_event_edges(window, 0, impl_->counts[kRelEventEvent]);
}

EdgeScan GraphStore::scan_event_edges(std::optional<TimeWindow> window,
                                      uint64_t first_record,
                                      uint64_t end_record) const {
  if (window) window->validate();
  auto impl = std::make_unique<EdgeScan::Impl>();
  impl->window = window;
  impl->cursor = first_record;
  impl->end = std::min(end_record, impl_->counts[kRelEventEvent]);

  uint64_t blocks = impl_->counts[kEeIndex];
  bool use_index = blocks > 0 && window && (window->start || window->end);
  uint64_t buffer_bytes = kEeBlockRecords * kEeRecord        // raw block
                          + kEeBlockRecords * sizeof(EeEdge)  // decoded segment
                          + (use_index ? blocks * kIdxRecord : 0);
  impl->tracked = TrackedBytes(impl_->tracker, buffer_bytes);
  impl->raw.resize(kEeBlockRecords * kEeRecord);
  impl->segment.entries.reserve(kEeBlockRecords);

  if (use_index) {
    Fd idx(impl_->path_of(kEeIndex));
    std::vector<unsigned char> buf(blocks * kIdxRecord);
    idx.read_at(kHeaderSize, buf.data(), buf.size());
    impl->index.reserve(blocks);
    for (uint64_t b = 0; b < blocks; ++b)
      impl->index.emplace_back(get_i64(buf.data() + b * kIdxRecord),
                               get_i64(buf.data() + b * kIdxRecord + 8));
  }

  if (impl->cursor < impl->end) impl->fd = Fd(impl_->path_of(kRelEventEvent));
  return EdgeScan(std::move(impl));
}

const EdgeSegment* EdgeScan::next() {
  Impl& s = *impl_;
  while (s.cursor < s.end) {
    // Skip whole blocks the summaries rule out.
    if (s.window && s.cursor % kEeBlockRecords == 0) {
      uint64_t block = s.cursor / kEeBlockRecords;
      while (block < s.index.size() && s.cursor + kEeBlockRecords <= s.end) {
        auto [lo, hi] = s.index[block];
        bool out = (s.window->start && hi < *s.window->start) ||
                   (s.window->end && lo > *s.window->end);
        if (!out) break;
        s.cursor += kEeBlockRecords;
        ++block;
      }
      if (s.cursor >= s.end) break;
    }

    uint64_t block_end = (s.cursor / kEeBlockRecords + 1) * kEeBlockRecords;
    size_t n = size_t(std::min(s.end, block_end) - s.cursor);
    s.fd.read_at(kHeaderSize + s.cursor * kEeRecord, s.raw.data(), n * kEeRecord);

    s.segment.entries.clear();
    for (size_t i = 0; i < n; ++i) {
      const unsigned char* p = s.raw.data() + i * kEeRecord;
      EeEdge edge{get_u64(p), get_u64(p + 8), get_u32(p + 16), get_u32(p + 20),
                  get_i64(p + 24), get_i64(p + 32)};
      if (s.window &&
          !(s.window->contains(edge.src_ts) && s.window->contains(edge.dst_ts)))
        continue;
      s.segment.entries.push_back(edge);
    }
    s.cursor += n;
    if (!s.segment.entries.empty()) return &s.segment;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// LogWriter

struct LogWriter::Impl {
  WriteSession session;
  uint64_t next_node;
  uint64_t log_node;
  std::unordered_map<std::string, uint64_t> attr_nodes;  // activity -> node id
  std::unordered_set<std::string> cases;

  Impl(GraphStore::Impl& store, const std::string& log_name)
      : session(store), next_node(store.next_node_id()) {
    log_node = next_node++;
    session.append_log(log_node, log_name);
  }
};

LogWriter::LogWriter(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
LogWriter::~LogWriter() = default;
LogWriter::LogWriter(LogWriter&&) noexcept = default;
LogWriter& LogWriter::operator=(LogWriter&&) noexcept = default;

LogWriter GraphStore::begin_log(const std::string& log_name) {
  if (log_name.empty())
    throw_error(Errc::NonemptyRequired, "log name must be nonempty");
  if (impl_->has_log(log_name))
    throw_error(Errc::DuplicateLog, "log '" + log_name + "' already in store");
  return LogWriter(std::make_unique<LogWriter::Impl>(*impl_, log_name));
}

void LogWriter::add_trace(const std::string& case_name,
                          const std::vector<EventInput>& events) {
  if (!impl_) throw_error(Errc::IoError, "writer is already finished");
  Impl& w = *impl_;
  if (case_name.empty())
    throw_error(Errc::NonemptyRequired, "case name must be nonempty");
  if (!w.cases.insert(case_name).second)
    throw_error(Errc::DuplicateCase, "case '" + case_name + "' already in log");

  uint64_t trace_node = w.next_node++;
  w.session.append_trace(trace_node, case_name);
  w.session.append_pair(kRelLogTrace, w.log_node, trace_node);

  uint64_t prev_node = 0;
  Instant prev_ts = 0;
  uint32_t prev_act = 0;
  for (uint32_t i = 0; i < events.size(); ++i) {
    const EventInput& ev = events[i];
    if (ev.activity.empty())
      throw_error(Errc::NonemptyRequired, "activity name must be nonempty");
    if (i > 0 && ev.timestamp < prev_ts)
      throw_error(Errc::TimestampRegression,
                  "case '" + case_name + "' events are out of order");

    uint64_t event_node = w.next_node++;
    w.session.append_event(event_node, ev.timestamp, i);
    w.session.append_pair(kRelTraceEvent, trace_node, event_node);
    uint32_t act = w.session.intern_activity(ev.activity);
    if (i > 0)
      w.session.append_ee(prev_node, event_node, prev_act, act, prev_ts,
                          ev.timestamp);

    auto it = w.attr_nodes.find(ev.activity);
    uint64_t attr_node;
    if (it == w.attr_nodes.end()) {
      attr_node = w.next_node++;
      w.session.append_attribute(attr_node, std::string(kActivityKey), ev.activity);
      w.attr_nodes.emplace(ev.activity, attr_node);
    } else {
      attr_node = it->second;
    }
    w.session.append_pair(kRelEventAttr, event_node, attr_node);

    prev_node = event_node;
    prev_ts = ev.timestamp;
    prev_act = act;
  }
}

WriteStats LogWriter::finish() {
  if (!impl_) throw_error(Errc::IoError, "writer is already finished");
  WriteStats stats = impl_->session.finish();
  impl_.reset();  // releases the writer lock
  return stats;
}

// ---------------------------------------------------------------------------
// Full read-back

EventRepository GraphStore::load() const {
  EventRepository repo;

  struct NodeEntry {
    uint64_t id;
    NodeKind kind;
    uint32_t a = 0;
    Instant ts = 0;
    uint32_t b = 0;
  };
  std::vector<NodeEntry> entries;
  entries.reserve(impl_->next_node_id());

  auto read_fixed = [&](size_t ix, auto&& decode) {
    uint64_t count = impl_->counts[ix];
    if (count == 0) return;
    size_t rec = kFiles[ix].record_size;
    Fd fd(impl_->path_of(ix));
    std::vector<unsigned char> buf(count * rec);
    fd.read_at(kHeaderSize, buf.data(), buf.size());
    for (uint64_t i = 0; i < count; ++i) decode(buf.data() + i * rec);
  };

  read_fixed(kNodesLog, [&](const unsigned char* p) {
    entries.push_back({get_u64(p), NodeKind::Log, get_u32(p + 8)});
  });
  read_fixed(kNodesTrace, [&](const unsigned char* p) {
    entries.push_back({get_u64(p), NodeKind::Trace, get_u32(p + 8)});
  });
  read_fixed(kNodesEvent, [&](const unsigned char* p) {
    entries.push_back(
        {get_u64(p), NodeKind::Event, 0, get_i64(p + 8), get_u32(p + 16)});
  });
  read_fixed(kNodesAttr, [&](const unsigned char* p) {
    entries.push_back({get_u64(p), NodeKind::Attribute, get_u32(p + 8), 0,
                       get_u32(p + 12)});
  });

  std::sort(entries.begin(), entries.end(),
            [](const NodeEntry& x, const NodeEntry& y) { return x.id < y.id; });

  for (const NodeEntry& e : entries) {
    NodeId created{0};
    switch (e.kind) {
      case NodeKind::Log:
        created = repo.add_node(
            NodeKind::Log, AttributeRecord{std::string(kLogNameKey),
                                           impl_->strings.resolve(e.a, "string")});
        break;
      case NodeKind::Trace:
        created = repo.add_node(
            NodeKind::Trace, AttributeRecord{std::string(kCaseNameKey),
                                             impl_->strings.resolve(e.a, "string")});
        break;
      case NodeKind::Event:
        created = repo.add_node(NodeKind::Event, EventRecord{e.ts, e.b});
        break;
      case NodeKind::Attribute: {
        const std::string& key = impl_->strings.resolve(e.a, "string");
        const std::string& val = key == kActivityKey
                                     ? impl_->activities.resolve(e.b, "activity")
                                     : impl_->strings.resolve(e.b, "string");
        created = repo.add_node(NodeKind::Attribute, AttributeRecord{key, val});
        break;
      }
    }
    if (created.value != e.id)
      throw_error(Errc::CorruptStore,
                  "node ids are not dense (found " + std::to_string(e.id) +
                      ", expected " + std::to_string(created.value) + ")");
  }

  auto link_pairs = [&](size_t ix) {
    read_fixed(ix, [&](const unsigned char* p) {
      repo.link(NodeId{get_u64(p)}, NodeId{get_u64(p + 8)});
    });
  };
  link_pairs(kRelLogTrace);
  link_pairs(kRelTraceEvent);
  link_pairs(kRelEventEvent);
  link_pairs(kRelEventAttr);
  return repo;
}

}  // namespace evgr
