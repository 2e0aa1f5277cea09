#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <new>
#include <utility>

#include "tp/errors.hpp"
#include "tp/reports.hpp"

namespace tp {

// Fulfillment state of a promise cell. Transitions once, Unset -> Fulfilled
// or Unset -> Poisoned, never back.
enum : std::uint32_t { kUnset = 0, kFulfilled = 1, kPoisoned = 2 };

// Type-erased promise core: id, fulfillment state and the parked waiters.
// The owner word does not live here; it lives in the runtime's id-indexed
// owner table so detector traversals never touch reclaimable memory.
class CellBase {
 public:
  explicit CellBase(PromiseId id) : id_(id) {}
  CellBase(const CellBase&) = delete;
  CellBase& operator=(const CellBase&) = delete;
  virtual ~CellBase() = default;

  PromiseId id() const { return id_; }

  std::uint32_t state(std::memory_order mo = std::memory_order_acquire) const {
    return state_.load(mo);
  }

  // Blocks the calling thread until the cell leaves Unset. Returns the
  // final state. `will_block` fires once, just before the first park.
  template <class F>
  std::uint32_t await(F&& will_block) {
    std::uint32_t s = state_.load(std::memory_order_acquire);
    if (s != kUnset) return s;
    will_block();
    waiters_.fetch_add(1, std::memory_order_seq_cst);
    for (;;) {
      s = state_.load(std::memory_order_seq_cst);
      if (s != kUnset) break;
      state_.wait(kUnset, std::memory_order_seq_cst);
    }
    waiters_.fetch_sub(1, std::memory_order_relaxed);
    return s;
  }

  // Exceptional completion: wakes all waiters with the blame report.
  // Caller must hold the sole fulfillment right (owner, or the runtime's
  // exit check).
  void poison(std::shared_ptr<const OmittedSetReport> report) {
    poison_ = std::move(report);
    publish(kPoisoned);
  }

  std::shared_ptr<const OmittedSetReport> poison_report() const { return poison_; }

 protected:
  // Publishing the state releases the payload (or report) written before it.
  void publish(std::uint32_t s) {
    state_.store(s, std::memory_order_seq_cst);
    if (waiters_.load(std::memory_order_seq_cst) != 0) state_.notify_all();
  }

 private:
  const PromiseId id_;
  std::atomic<std::uint32_t> state_{kUnset};
  std::atomic<std::uint32_t> waiters_{0};
  std::shared_ptr<const OmittedSetReport> poison_;
};

template <class T>
class Cell final : public CellBase {
 public:
  explicit Cell(PromiseId id) : CellBase(id) {}

  ~Cell() override {
    if (state(std::memory_order_relaxed) == kFulfilled) value_ptr()->~T();
  }

  void fulfill(T v) {
    ::new (static_cast<void*>(&storage_)) T(std::move(v));
    publish(kFulfilled);
  }

  // Valid only after observing kFulfilled.
  const T& value() const { return *value_ptr(); }

 private:
  T* value_ptr() { return std::launder(reinterpret_cast<T*>(&storage_)); }
  const T* value_ptr() const {
    return std::launder(reinterpret_cast<const T*>(&storage_));
  }
  alignas(T) unsigned char storage_[sizeof(T)];
};

using CellRef = std::shared_ptr<CellBase>;

}  // namespace tp
