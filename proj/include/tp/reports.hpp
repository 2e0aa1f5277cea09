#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace tp {

using TaskId = std::uint64_t;
using PromiseId = std::uint64_t;

// One waits-for hop: `task` is blocked on `promise`, which the next pair's
// task owns (wrapping around at the end).
struct CyclePair {
  TaskId task = 0;
  PromiseId promise = 0;
  friend bool operator==(const CyclePair&, const CyclePair&) = default;
};

struct DeadlockReport {
  // Discovery order, starting at the task that raised. Tasks and promises
  // are pairwise distinct.
  std::vector<CyclePair> cycle;

  // Rotated so the smallest task id comes first; cycles compare equal up
  // to rotation.
  DeadlockReport canonical() const;

  friend bool operator==(const DeadlockReport&, const DeadlockReport&) = default;
};

struct OmittedSetReport {
  TaskId task = 0;
  std::vector<PromiseId> promises;  // creation order, non-empty
  bool exceptional_exit = false;    // the task unwound rather than returned

  friend bool operator==(const OmittedSetReport&, const OmittedSetReport&) = default;
};

struct Alarm {
  enum class Kind { deadlock, omitted_set };
  Kind kind = Kind::deadlock;
  DeadlockReport deadlock;                       // kind == deadlock
  std::shared_ptr<const OmittedSetReport> omitted;  // kind == omitted_set

  std::string json_line() const;

  static Alarm make_deadlock(DeadlockReport r);
  static Alarm make_omitted(std::shared_ptr<const OmittedSetReport> r);
};

// Process-global alarm sink. Every omitted-set and deadlock report lands
// here in addition to being delivered to the affected tasks.
class AlarmRegistry {
 public:
  void push(Alarm a);
  std::vector<Alarm> drain();
  std::vector<Alarm> snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<Alarm> alarms_;
};

AlarmRegistry& alarm_registry();

}  // namespace tp
