#pragma once

#include <atomic>
#include <array>
#include <cstdint>
#include <memory>
#include <mutex>

namespace tp {

// Append-only segmented array with lock-free reads. Slots are
// zero-initialized and segments are published with release stores, so a
// reader that obtained an index through any synchronizing edge sees
// initialized memory. Readers holding an index that has not propagated to
// them yet get nullptr and treat the slot as absent.
template <class T, std::size_t SegBits = 12, std::size_t MaxSegs = 1 << 14>
class SegTable {
 public:
  static constexpr std::size_t kSegSize = std::size_t{1} << SegBits;
  static constexpr std::size_t kMask = kSegSize - 1;

  SegTable() = default;
  ~SegTable() {
    for (auto& s : segs_) delete[] s.load(std::memory_order_relaxed);
  }
  SegTable(const SegTable&) = delete;
  SegTable& operator=(const SegTable&) = delete;

  // Lock-free; nullptr if the segment is not visible to this thread.
  T* find(std::uint64_t idx) const {
    const std::size_t si = idx >> SegBits;
    if (si >= MaxSegs) return nullptr;
    T* seg = segs_[si].load(std::memory_order_acquire);
    if (!seg) return nullptr;
    return &seg[idx & kMask];
  }

  // Ensures the segment for idx exists and returns the slot.
  T& ensure(std::uint64_t idx) {
    const std::size_t si = idx >> SegBits;
    T* seg = segs_[si].load(std::memory_order_acquire);
    if (!seg) {
      std::lock_guard<std::mutex> lk(grow_mu_);
      seg = segs_[si].load(std::memory_order_relaxed);
      if (!seg) {
        seg = new T[kSegSize]();
        segs_[si].store(seg, std::memory_order_release);
      }
    }
    return seg[idx & kMask];
  }

 private:
  std::array<std::atomic<T*>, MaxSegs> segs_{};
  std::mutex grow_mu_;
};

}  // namespace tp
