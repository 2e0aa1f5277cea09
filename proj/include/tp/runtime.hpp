#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "tp/cell.hpp"
#include "tp/errors.hpp"
#include "tp/promise.hpp"
#include "tp/tables.hpp"
#include "tp/task.hpp"

namespace tp {

enum class Mode { verified, baseline };

struct Options {
  Mode mode = Mode::verified;
  // Maximum hops a single cycle traversal may take; 0 = unlimited.
  // Exceeding the budget commits to blocking, it never raises.
  std::uint64_t traversal_budget = 0;
  // Fault injection: publish waitingOn only after verification instead of
  // before it. This breaks detection of concurrently formed cycles and
  // exists so the stress suite can demonstrate its own sensitivity.
  bool inject_late_wait_publish = false;
};

struct RunStats {
  std::uint64_t tasks = 0;
  std::uint64_t promises = 0;
  std::uint64_t gets = 0;
  std::uint64_t sets = 0;
};

class Runtime;

// Handle returned by spawn: await completion and read the exit report.
class TaskHandle {
 public:
  TaskHandle() = default;
  TaskHandle(TaskRecord* rec, Promise<Unit> completion)
      : rec_(rec), completion_(std::move(completion)) {}

  ExitReport await() const;  // blocks via a detector-visible get
  TaskId id() const { return rec_ ? rec_->id : 0; }
  TaskRecord* record() const { return rec_; }
  const Promise<Unit>& completion() const { return completion_; }

 private:
  TaskRecord* rec_ = nullptr;
  Promise<Unit> completion_;
};

struct FinishFrame {
  std::mutex mu;
  std::vector<TaskHandle> handles;
  void add(const TaskHandle& h) {
    std::lock_guard<std::mutex> lk(mu);
    handles.push_back(h);
  }
};

class Runtime {
 public:
  explicit Runtime(Options opts = {});
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  struct Ctx {
    Runtime* rt = nullptr;
    TaskRecord* task = nullptr;
  };
  static Ctx& tls();

  bool verified() const { return opts_.mode == Mode::verified; }
  const Options& options() const { return opts_; }
  RunStats stats() const;

  // --- operations behind the public wrappers ---
  static PromiseId fresh_promise_id();
  void adopt_new_promise(const CellRef& cell);  // owner := current task
  void pre_set(CellBase& cell);                 // ownership check + clear
  void blocking_get(CellBase& cell);            // detector + park
  void require_owner(CellBase& cell) const;     // NotOwner unless caller owns
  TaskHandle spawn_core(std::vector<CellRef> moved, detail::UniqueFn body,
                        bool is_root);
  void wait_all();

  TaskId owner_of(PromiseId p) const { return owner_load(p); }
  TaskRecord* task_record(TaskId t) const { return task_find(t); }

  void count_get() { gets_.fetch_add(1, std::memory_order_relaxed); }
  void count_set() { sets_.fetch_add(1, std::memory_order_relaxed); }

 private:
  friend class TaskHandle;

  TaskId owner_load(PromiseId p) const;
  void owner_store(PromiseId p, TaskId t);
  TaskRecord* task_find(TaskId t) const;

  std::optional<DeadlockReport> traverse(TaskRecord& t0, PromiseId p0) const;
  void exit_check(TaskRecord& t, ExitReport& rep);
  void complete_task(TaskRecord& t);
  void run_task(TaskRecord* t);

  void enqueue(TaskRecord* t);
  void on_will_block();
  void spawn_worker_locked();
  void worker_loop();

  Options opts_;
  const TaskId task_base_;
  const PromiseId promise_base_;

  mutable SegTable<std::atomic<std::uint64_t>> owners_;
  mutable SegTable<TaskRecord> tasks_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::deque<TaskRecord*> queue_;
  std::vector<std::thread> threads_;
  std::size_t waiting_ = 0;   // workers parked on cv_
  std::size_t starting_ = 0;  // workers spawned but not yet polling
  bool stopping_ = false;
  std::atomic<std::uint64_t> live_{0};

  std::atomic<std::uint64_t> tasks_spawned_{0};
  std::atomic<std::uint64_t> promises_made_{0};
  std::atomic<std::uint64_t> gets_{0};
  std::atomic<std::uint64_t> sets_{0};
};

namespace detail {

inline Runtime::Ctx& require_task(const char* op) {
  auto& c = Runtime::tls();
  if (!c.task) throw UsageError(std::string(op) + " called outside a task");
  return c;
}

}  // namespace detail

// ---- public operations ----

template <class T>
Promise<T> new_promise() {
  auto& ctx = detail::require_task("new_promise");
  auto cell = std::make_shared<Cell<T>>(Runtime::fresh_promise_id());
  ctx.rt->adopt_new_promise(cell);
  return Promise<T>(std::move(cell));
}

template <class T>
void set(const Promise<T>& p, T v) {
  auto& ctx = detail::require_task("set");
  if (!p.valid()) throw UsageError("set on a null promise");
  ctx.rt->count_set();
  ctx.rt->pre_set(*p.cell());
  p.cell()->fulfill(std::move(v));
}

template <class T>
T get(const Promise<T>& p) {
  auto& ctx = detail::require_task("get");
  if (!p.valid()) throw UsageError("get on a null promise");
  ctx.rt->count_get();
  ctx.rt->blocking_get(*p.cell());
  return p.cell()->value();
}

TaskHandle spawn(std::vector<CellRef> moved, detail::UniqueFn body);
TaskHandle spawn(std::initializer_list<AnyPromise> moved,
                 detail::UniqueFn body);

struct RootResult {
  ExitReport report;
  RunStats stats;
};

// Runs `main` as the root task and blocks until the whole task tree has
// terminated. The root is subject to the same exit check as every task.
RootResult run_root(detail::UniqueFn main, Options opts = {});

inline ExitReport TaskHandle::await() const {
  if (!rec_) throw UsageError("await on an empty task handle");
  get(completion_);
  return rec_->report;
}

}  // namespace tp
