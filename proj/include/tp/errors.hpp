#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "tp/reports.hpp"

namespace tp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation invoked outside a task context, or nested run_root.
struct UsageError : Error {
  using Error::Error;
};

// spawn() given a promise the caller does not own.
struct OwnershipViolation : Error {
  PromiseId promise;
  TaskId caller;
  TaskId observed_owner;  // 0 = none
  OwnershipViolation(PromiseId p, TaskId c, TaskId o);
};

// set() (or send()) by a task that is not the owner. Covers double-set:
// the first set clears the owner, so the recheck fails.
struct NotOwner : Error {
  PromiseId promise;
  TaskId caller;
  TaskId observed_owner;
  NotOwner(PromiseId p, TaskId c, TaskId o);
};

struct DeadlockDetected : Error {
  DeadlockReport report;
  explicit DeadlockDetected(DeadlockReport r);
};

struct PoisonedPromise : Error {
  std::shared_ptr<const OmittedSetReport> source;
  explicit PoisonedPromise(std::shared_ptr<const OmittedSetReport> s);
};

}  // namespace tp
