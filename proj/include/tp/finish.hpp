#pragma once

#include <utility>

#include "tp/runtime.hpp"

namespace tp {

// Lexical join scope: every task this task spawns while `body` runs is
// joined (via its completion promise) before finish_scope returns. Joins go
// through get, so deadlocks and poisoning surface here. A child that failed
// or omitted its own promises does not fail the join; its alarms are
// reported separately.
template <class F>
void finish_scope(F&& body) {
  auto& ctx = detail::require_task("finish_scope");
  FinishFrame frame;
  ctx.task->finish_stack.push_back(&frame);
  auto pop = [&] { ctx.task->finish_stack.pop_back(); };

  try {
    body();
  } catch (...) {
    pop();
    for (auto& h : frame.handles) {
      try {
        h.await();
      } catch (...) {
        // already unwinding; the original error wins
      }
    }
    throw;
  }
  pop();

  std::exception_ptr first;
  for (auto& h : frame.handles) {
    try {
      h.await();
    } catch (...) {
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace tp
