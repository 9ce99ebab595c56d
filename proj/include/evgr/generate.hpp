#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>

#include "evgr/ingest.hpp"
#include "evgr/time.hpp"

namespace evgr {

// Deterministic synthetic log: same spec and seed produce byte-identical
// output. Traces are emitted in case-arrival order (ascending start
// time), the way real logs accumulate.
struct SyntheticSpec {
  uint64_t traces = 100;
  uint32_t events_min = 1;
  uint32_t events_max = 10;
  uint32_t alphabet = 10;
  Instant start = 1577836800000;  // 2020-01-01T00:00:00Z
  int64_t span_ms = 30ll * 86400000;
  uint64_t seed = 0;

  void validate() const;  // Error{ParseError} on nonsense bounds
};

// Activity name for alphabet index `ix`, zero-padded to the alphabet width
// ("a01".."a20" for alphabet 20).
std::string synthetic_activity_name(uint32_t ix, uint32_t alphabet);

// Streams the traces one at a time without materializing the whole log.
class SyntheticSource : public TraceSource {
 public:
  explicit SyntheticSource(const SyntheticSpec& spec);
  ~SyntheticSource() override;
  std::optional<TraceRecord> next() override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum class LogFormat { Xes, Csv };

void write_synthetic_log(const SyntheticSpec& spec, LogFormat format,
                         std::ostream& out);

}  // namespace evgr
