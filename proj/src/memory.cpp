#include "evgr/memory.hpp"

#include <string>

#include "evgr/error.hpp"

namespace evgr {

void MemoryTracker::acquire(uint64_t bytes) {
  uint64_t now = live_.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  if (now > limit_) {
    live_.fetch_sub(bytes, std::memory_order_relaxed);
    throw_error(Errc::BudgetExceeded,
                "tracked allocation of " + std::to_string(bytes) +
                    " bytes would exceed the " + std::to_string(limit_) +
                    "-byte budget");
  }
  uint64_t seen = peak_.load(std::memory_order_relaxed);
  while (seen < now &&
         !peak_.compare_exchange_weak(seen, now, std::memory_order_relaxed)) {
  }
}

void MemoryTracker::release(uint64_t bytes) {
  live_.fetch_sub(bytes, std::memory_order_relaxed);
}

}  // namespace evgr
