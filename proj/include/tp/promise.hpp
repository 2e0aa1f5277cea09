#pragma once

#include <memory>
#include <vector>

#include "tp/cell.hpp"

namespace tp {

// Shared handle to a promise. Holding a handle allows get; fulfilling it
// requires ownership, which only the runtime tracks.
template <class T>
class Promise {
 public:
  Promise() = default;
  explicit Promise(std::shared_ptr<Cell<T>> c) : cell_(std::move(c)) {}

  bool valid() const { return cell_ != nullptr; }
  PromiseId id() const { return cell_ ? cell_->id() : 0; }

  const std::shared_ptr<Cell<T>>& cell() const { return cell_; }

 private:
  std::shared_ptr<Cell<T>> cell_;
};

// Aggregates that bundle promises implement this so the whole object can be
// moved to a new task at spawn; spawn flattens through promises_into.
struct PromiseCollection {
  virtual void promises_into(std::vector<CellRef>& out) const = 0;
  virtual ~PromiseCollection() = default;
};

// Anything spawn() can move: a single promise or a collection.
class AnyPromise {
 public:
  template <class T>
  AnyPromise(const Promise<T>& p) {  // NOLINT: implicit by design
    if (p.valid()) cells_.push_back(p.cell());
  }
  AnyPromise(const PromiseCollection& c) {  // NOLINT
    c.promises_into(cells_);
  }

  const std::vector<CellRef>& cells() const { return cells_; }

 private:
  std::vector<CellRef> cells_;
};

template <class T>
std::vector<CellRef> promises_of(const Promise<T>& p) {
  std::vector<CellRef> out;
  if (p.valid()) out.push_back(p.cell());
  return out;
}

inline std::vector<CellRef> promises_of(const PromiseCollection& c) {
  std::vector<CellRef> out;
  c.promises_into(out);
  return out;
}

}  // namespace tp
