#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <utility>

namespace evgr {

struct MemoryBudget {
  uint64_t limit_bytes = 256ull << 20;

  static MemoryBudget mib(uint64_t n) { return MemoryBudget{n << 20}; }
};

// Cooperative accounting for engine buffers. Every buffer a budgeted
// computation owns is registered here; acquire fails when the sum of
// live registrations would exceed the limit. The high-water mark feeds
// the bench report.
class MemoryTracker {
 public:
  explicit MemoryTracker(MemoryBudget budget) : limit_(budget.limit_bytes) {}

  uint64_t limit() const { return limit_; }
  uint64_t live() const { return live_.load(std::memory_order_relaxed); }
  uint64_t peak() const { return peak_.load(std::memory_order_relaxed); }

  void reset_peak() { peak_.store(live(), std::memory_order_relaxed); }

  // Throws Error{BudgetExceeded} when the registration would go over the
  // limit; callers size their buffers from the budget so this firing
  // indicates an engine bug.
  void acquire(uint64_t bytes);
  void release(uint64_t bytes);

 private:
  uint64_t limit_;
  std::atomic<uint64_t> live_{0};
  std::atomic<uint64_t> peak_{0};
};

// RAII registration of one buffer's bytes with a tracker.
class TrackedBytes {
 public:
  TrackedBytes() = default;
  TrackedBytes(MemoryTracker& tracker, uint64_t bytes)
      : tracker_(&tracker), bytes_(bytes) {
    tracker_->acquire(bytes_);
  }
  TrackedBytes(TrackedBytes&& other) noexcept
      : tracker_(std::exchange(other.tracker_, nullptr)),
        bytes_(std::exchange(other.bytes_, 0)) {}
  TrackedBytes& operator=(TrackedBytes&& other) noexcept {
    if (this != &other) {
      release();
      tracker_ = std::exchange(other.tracker_, nullptr);
      bytes_ = std::exchange(other.bytes_, 0);
    }
    return *this;
  }
  TrackedBytes(const TrackedBytes&) = delete;
  TrackedBytes& operator=(const TrackedBytes&) = delete;
  ~TrackedBytes() { release(); }

  uint64_t bytes() const { return bytes_; }

  void release() {
    if (tracker_) {
      tracker_->release(bytes_);
      tracker_ = nullptr;
      bytes_ = 0;
    }
  }

 private:
  MemoryTracker* tracker_ = nullptr;
  uint64_t bytes_ = 0;
};

}  // namespace evgr
