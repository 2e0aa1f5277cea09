#pragma once

#include <utility>
#include <vector>

#include "tp/promise.hpp"
#include "tp/runtime.hpp"

namespace tp {

// Multi-shot channel built from a chain of promises. Each fulfilled link
// carries (value, successor); exactly one unfulfilled tail exists at any
// instant and its owner is the sender. Moving the channel to a new task at
// spawn moves the tail, i.e. the send role. Single consumer: the receive
// cursor is local to each Channel value.
template <class T>
class Channel : public PromiseCollection {
 public:
  struct Link {
    T value;
    Promise<Link> next;
  };

  Channel() = default;

  void promises_into(std::vector<CellRef>& out) const override {
    if (tail_.valid()) out.push_back(tail_.cell());
  }

  bool valid() const { return head_.valid(); }

 private:
  Promise<Link> head_;
  Promise<Link> tail_;

  template <class U>
  friend Channel<U> channel_new();
  template <class U>
  friend void send(Channel<U>& c, U v);
  template <class U>
  friend U recv(Channel<U>& c);
};

template <class T>
Channel<T> channel_new() {
  detail::require_task("channel_new");
  Channel<T> c;
  auto p = new_promise<typename Channel<T>::Link>();
  c.head_ = p;
  c.tail_ = p;
  return c;
}

template <class T>
void send(Channel<T>& c, T v) {
  auto& ctx = detail::require_task("send");
  if (!c.tail_.valid()) throw UsageError("send on a default-constructed channel");
  // Check before allocating the successor, so a non-owner does not end up
  // holding a fresh unfulfillable promise.
  ctx.rt->require_owner(*c.tail_.cell());
  auto q = new_promise<typename Channel<T>::Link>();
  set(c.tail_, typename Channel<T>::Link{std::move(v), q});
  c.tail_ = q;
}

template <class T>
T recv(Channel<T>& c) {
  detail::require_task("recv");
  if (!c.head_.valid()) throw UsageError("recv on a default-constructed channel");
  auto link = get(c.head_);
  c.head_ = link.next;
  return std::move(link.value);
}

}  // namespace tp
