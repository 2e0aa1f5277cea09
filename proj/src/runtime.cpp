#include "tp/runtime.hpp"

#include <algorithm>
#include <sstream>

namespace tp {

namespace {

std::atomic<std::uint64_t> g_next_task_id{1};
std::atomic<std::uint64_t> g_next_promise_id{1};

std::string describe(const char* what, PromiseId p, TaskId caller, TaskId owner) {
  std::ostringstream os;
  os << what << ": promise " << p << ", caller task " << caller << ", owner ";
  if (owner == 0)
    os << "none";
  else
    os << "task " << owner;
  return os.str();
}

}  // namespace

OwnershipViolation::OwnershipViolation(PromiseId p, TaskId c, TaskId o)
    : Error(describe("ownership violation at spawn", p, c, o)),
      promise(p),
      caller(c),
      observed_owner(o) {}

NotOwner::NotOwner(PromiseId p, TaskId c, TaskId o)
    : Error(describe("set by non-owner", p, c, o)),
      promise(p),
      caller(c),
      observed_owner(o) {}

DeadlockDetected::DeadlockDetected(DeadlockReport r)
    : Error([&r] {
        std::ostringstream os;
        os << "deadlock cycle:";
        for (const auto& [t, p] : r.cycle)
          os << " (task " << t << " waits promise " << p << ")";
        return os.str();
      }()),
      report(std::move(r)) {}

PoisonedPromise::PoisonedPromise(std::shared_ptr<const OmittedSetReport> s)
    : Error([&s] {
        std::ostringstream os;
        os << "promise poisoned: task " << (s ? s->task : 0)
           << " exited owning unfulfilled promises";
        return os.str();
      }()),
      source(std::move(s)) {}

Runtime::Ctx& Runtime::tls() {
  thread_local Ctx ctx;
  return ctx;
}

Runtime::Runtime(Options opts)
    : opts_(opts),
      task_base_(g_next_task_id.load(std::memory_order_relaxed)),
      promise_base_(g_next_promise_id.load(std::memory_order_relaxed)) {}

Runtime::~Runtime() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    stopping_ = true;
    cv_.notify_all();
  }
  for (auto& th : threads_) th.join();
}

RunStats Runtime::stats() const {
  RunStats s;
  s.tasks = tasks_spawned_.load(std::memory_order_relaxed);
  s.promises = promises_made_.load(std::memory_order_relaxed);
  s.gets = gets_.load(std::memory_order_relaxed);
  s.sets = sets_.load(std::memory_order_relaxed);
  return s;
}

PromiseId Runtime::fresh_promise_id() {
  return g_next_promise_id.fetch_add(1, std::memory_order_relaxed);
}

TaskId Runtime::owner_load(PromiseId p) const {
  auto* cell = owners_.find(p - promise_base_);
  return cell ? cell->load(std::memory_order_relaxed) : 0;
}

void Runtime::owner_store(PromiseId p, TaskId t) {
  owners_.ensure(p - promise_base_).store(t, std::memory_order_relaxed);
}

TaskRecord* Runtime::task_find(TaskId t) const {
  if (t < task_base_) return nullptr;
  return tasks_.find(t - task_base_);
}

void Runtime::adopt_new_promise(const CellRef& cell) {
  promises_made_.fetch_add(1, std::memory_order_relaxed);
  TaskRecord* t = tls().task;
  if (verified()) {
    owner_store(cell->id(), t->id);
    t->owned.push_back(cell);
  }
}

void Runtime::require_owner(CellBase& cell) const {
  if (!verified()) return;
  TaskRecord* t = tls().task;
  TaskId o = owner_load(cell.id());
  if (o != t->id) throw NotOwner(cell.id(), t->id, o);
}

void Runtime::pre_set(CellBase& cell) {
  if (!verified()) return;
  TaskRecord* t = tls().task;
  TaskId o = owner_load(cell.id());
  if (o != t->id) throw NotOwner(cell.id(), t->id, o);
  owner_store(cell.id(), 0);
  auto it = std::find_if(t->owned.begin(), t->owned.end(),
                         [&](const CellRef& c) { return c.get() == &cell; });
  if (it != t->owned.end()) t->owned.erase(it);
}

std::optional<DeadlockReport> Runtime::traverse(TaskRecord& t0,
                                                PromiseId p0) const {
  // Walks alternating owner / waitingOn edges with plain atomic loads.
  // The double read of each promise's owner (before and after reading the
  // next waitingOn) rejects paths invalidated by a concurrent transfer or
  // fulfillment, so a completed walk back to t0 is a real cycle.
  std::vector<CyclePair> path;
  path.push_back({t0.id, p0});
  // A walk that laps a cycle not containing t0 spins until that cycle
  // dissolves; cap the recorded path so laps don't grow it.
  const std::size_t path_cap =
      static_cast<std::size_t>(g_next_task_id.load(std::memory_order_relaxed) -
                               task_base_) + 1;
  std::uint64_t hops = 0;
  PromiseId pi = p0;
  TaskId ti = owner_load(pi);
  while (ti != t0.id) {
    if (ti == 0) return std::nullopt;  // fulfilled or mid-transfer
    TaskRecord* tr = task_find(ti);
    if (!tr) return std::nullopt;  // record not visible on this thread yet
    PromiseId pn = tr->waiting_on.load(std::memory_order_acquire);
    if (pn == 0) return std::nullopt;  // owner is running: progress
    if (owner_load(pi) != ti) return std::nullopt;  // owner changed: progress
    if (opts_.traversal_budget != 0 && ++hops > opts_.traversal_budget)
      return std::nullopt;  // budget exhausted: commit, never raise
    if (path.size() < path_cap) path.push_back({ti, pn});
    pi = pn;
    ti = owner_load(pi);
  }
  return DeadlockReport{std::move(path)};
}

void Runtime::blocking_get(CellBase& cell) {
  TaskRecord& t = *tls().task;
  if (!verified()) {
    std::uint32_t s = cell.await([this] { on_will_block(); });
    if (s == kPoisoned) throw PoisonedPromise(cell.poison_report());
    return;
  }

  std::optional<DeadlockReport> cycle;
  if (!opts_.inject_late_wait_publish) {
    // The waits-for edge must exist before verification starts; otherwise
    // two tasks closing a cycle together can each observe the other as not
    // waiting and both commit.
    t.waiting_on.store(cell.id(), std::memory_order_seq_cst);
    cycle = traverse(t, cell.id());
  } else {
    cycle = traverse(t, cell.id());
    t.waiting_on.store(cell.id(), std::memory_order_seq_cst);
  }

  struct Reset {
    TaskRecord& t;
    ~Reset() { t.waiting_on.store(0, std::memory_order_release); }
  } reset{t};

  if (cycle) {
    alarm_registry().push(Alarm::make_deadlock(*cycle));
    throw DeadlockDetected(std::move(*cycle));
  }

  std::uint32_t s = cell.await([this] { on_will_block(); });
  if (s == kPoisoned) throw PoisonedPromise(cell.poison_report());
  // Reset runs here: the waitingOn clear becomes visible only after the
  // fulfillment was observed.
}

TaskHandle Runtime::spawn_core(std::vector<CellRef> moved,
                               detail::UniqueFn body, bool is_root) {
  TaskRecord* parent = is_root ? nullptr : tls().task;

  // Drop duplicate mentions of the same promise, keeping first positions.
  {
    std::vector<CellRef> uniq;
    for (auto& c : moved) {
      if (std::none_of(uniq.begin(), uniq.end(),
                       [&](const CellRef& u) { return u.get() == c.get(); }))
        uniq.push_back(std::move(c));
    }
    moved.swap(uniq);
  }

  if (verified() && parent) {
    for (const auto& c : moved) {
      TaskId o = owner_load(c->id());
      if (o != parent->id) throw OwnershipViolation(c->id(), parent->id, o);
    }
  }

  const TaskId tid = g_next_task_id.fetch_add(1, std::memory_order_relaxed);
  TaskRecord& child = tasks_.ensure(tid - task_base_);
  child.id = tid;
  tasks_spawned_.fetch_add(1, std::memory_order_relaxed);

  promises_made_.fetch_add(1, std::memory_order_relaxed);
  auto comp = std::make_shared<Cell<Unit>>(fresh_promise_id());
  child.completion = comp;
  child.owned = std::move(moved);
  child.owned.push_back(comp);
  child.body = std::move(body);

  if (verified()) {
    if (parent) {
      for (const auto& c : child.owned) {
        if (c.get() == comp.get()) continue;
        auto it = std::find_if(
            parent->owned.begin(), parent->owned.end(),
            [&](const CellRef& pc) { return pc.get() == c.get(); });
        if (it != parent->owned.end()) parent->owned.erase(it);
      }
    }
    // Owner updates precede the enqueue, so they happen-before the child's
    // first instruction.
    for (const auto& c : child.owned) owner_store(c->id(), tid);
  }

  live_.fetch_add(1, std::memory_order_relaxed);
  TaskHandle h(&child, Promise<Unit>(comp));
  if (parent && !parent->finish_stack.empty())
    parent->finish_stack.back()->add(h);
  enqueue(&child);
  return h;
}

void Runtime::exit_check(TaskRecord& t, ExitReport& rep) {
  if (!verified()) {
    return;
  }
  std::vector<CellRef> leftovers;
  for (const auto& c : t.owned) {
    if (c.get() != t.completion.get()) leftovers.push_back(c);
  }
  if (leftovers.empty()) return;

  auto om = std::make_shared<OmittedSetReport>();
  om->task = t.id;
  om->exceptional_exit = rep.kind != ExitReport::Kind::ok;
  for (const auto& c : leftovers) om->promises.push_back(c->id());
  rep.omitted = om;
  alarm_registry().push(Alarm::make_omitted(om));

  for (const auto& c : leftovers) {
    owner_store(c->id(), 0);
    c->poison(om);
  }
  std::erase_if(t.owned, [&](const CellRef& c) {
    return c.get() != t.completion.get();
  });
}

void Runtime::complete_task(TaskRecord& t) {
  count_set();
  if (verified()) {
    owner_store(t.completion->id(), 0);
    std::erase_if(t.owned, [&](const CellRef& c) {
      return c.get() == t.completion.get();
    });
  }
  auto comp = t.completion;
  comp->fulfill(Unit{});
}

void Runtime::run_task(TaskRecord* t) {
  tls() = Ctx{this, t};
  ExitReport rep;
  try {
    t->body();
    rep.kind = ExitReport::Kind::ok;
  } catch (DeadlockDetected& e) {
    rep.kind = ExitReport::Kind::deadlock;
    rep.deadlock = e.report;
    rep.message = e.what();
  } catch (PoisonedPromise& e) {
    rep.kind = ExitReport::Kind::poisoned;
    rep.poison_source = e.source;
    rep.message = e.what();
  } catch (const std::exception& e) {
    rep.kind = ExitReport::Kind::body_exception;
    rep.message = e.what();
  } catch (...) {
    rep.kind = ExitReport::Kind::body_exception;
    rep.message = "unknown exception";
  }
  t->body.reset();
  exit_check(*t, rep);
  t->report = std::move(rep);
  complete_task(*t);
  tls() = Ctx{};
  if (live_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
    std::lock_guard<std::mutex> lk(mu_);
    done_cv_.notify_all();
  }
}

void Runtime::enqueue(TaskRecord* t) {
  std::lock_guard<std::mutex> lk(mu_);
  queue_.push_back(t);
  if (waiting_ == 0 && starting_ == 0)
    spawn_worker_locked();
  else
    cv_.notify_one();
}

// Called just before a task parks. If runnable tasks are queued and every
// existing worker is busy or blocked, provision a fresh one: there is no a
// priori bound on how many tasks block simultaneously.
void Runtime::on_will_block() {
  std::lock_guard<std::mutex> lk(mu_);
  if (!queue_.empty() && waiting_ == 0 && starting_ == 0) spawn_worker_locked();
}

void Runtime::spawn_worker_locked() {
  ++starting_;
  threads_.emplace_back([this] { worker_loop(); });
}

void Runtime::worker_loop() {
  std::unique_lock<std::mutex> lk(mu_);
  --starting_;
  for (;;) {
    while (queue_.empty() && !stopping_) {
      ++waiting_;
      cv_.wait(lk);
      --waiting_;
    }
    if (queue_.empty()) return;  // stopping
    TaskRecord* t = queue_.front();
    queue_.pop_front();
    lk.unlock();
    run_task(t);
    lk.lock();
  }
}

void Runtime::wait_all() {
  std::unique_lock<std::mutex> lk(mu_);
  done_cv_.wait(lk, [&] { return live_.load(std::memory_order_acquire) == 0; });
}

TaskHandle spawn(std::vector<CellRef> moved, detail::UniqueFn body) {
  auto& ctx = detail::require_task("spawn");
  return ctx.rt->spawn_core(std::move(moved), std::move(body), false);
}

TaskHandle spawn(std::initializer_list<AnyPromise> moved,
                 detail::UniqueFn body) {
  std::vector<CellRef> cells;
  for (const auto& m : moved) {
    cells.insert(cells.end(), m.cells().begin(), m.cells().end());
  }
  return spawn(std::move(cells), std::move(body));
}

RootResult run_root(detail::UniqueFn main, Options opts) {
  if (Runtime::tls().task) throw UsageError("run_root inside a task");
  Runtime rt(opts);
  TaskHandle root = rt.spawn_core({}, std::move(main), true);
  rt.wait_all();
  RootResult res;
  res.report = root.record()->report;
  res.stats = rt.stats();
  return res;
}

}  // namespace tp
