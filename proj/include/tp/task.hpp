#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tp/cell.hpp"
#include "tp/detail/unique_fn.hpp"
#include "tp/reports.hpp"

namespace tp {

struct Unit {};

// How a task body finished, plus anything the exit check found.
struct ExitReport {
  enum class Kind {
    ok,              // body returned normally
    body_exception,  // body threw something other than a runtime error
    deadlock,        // body unwound with DeadlockDetected
    poisoned,        // body unwound with PoisonedPromise
  };
  Kind kind = Kind::ok;
  // Rule-3 violation by this task itself, if any (independent of kind).
  std::shared_ptr<const OmittedSetReport> omitted;
  DeadlockReport deadlock;                            // kind == deadlock
  std::shared_ptr<const OmittedSetReport> poison_source;  // kind == poisoned
  std::string message;

  bool clean() const { return kind == Kind::ok && !omitted; }
};

struct FinishFrame;

struct TaskRecord {
  TaskId id = 0;
  // Promise id this task is blocked on, 0 otherwise. Written with the
  // orderings the detector contract requires (seq_cst enter, release reset);
  // read by concurrent traversals with acquire.
  std::atomic<std::uint64_t> waiting_on{0};
  // Promises this task currently owns, creation/transfer order. Touched only
  // by the task itself or by its parent before the task is enqueued.
  std::vector<CellRef> owned;
  std::shared_ptr<Cell<Unit>> completion;
  detail::UniqueFn body;
  ExitReport report;
  std::vector<FinishFrame*> finish_stack;

  TaskRecord() = default;
  TaskRecord(const TaskRecord&) = delete;
  TaskRecord& operator=(const TaskRecord&) = delete;
};

}  // namespace tp
