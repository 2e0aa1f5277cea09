#pragma once

#include <memory>
#include <type_traits>
#include <utility>

namespace tp::detail {

// Move-only void() callable. Task bodies capture move-only state
// (promises, buffers), which std::function cannot hold.
class UniqueFn {
  struct Base {
    virtual void call() = 0;
    virtual ~Base() = default;
  };
  template <class F>
  struct Impl final : Base {
    F f;
    explicit Impl(F&& fn) : f(std::move(fn)) {}
    explicit Impl(const F& fn) : f(fn) {}
    void call() override { f(); }
  };

 public:
  UniqueFn() = default;
  template <class F, class = std::enable_if_t<
                         !std::is_same_v<std::decay_t<F>, UniqueFn>>>
  UniqueFn(F&& f)  // NOLINT: implicit by design
      : p_(std::make_unique<Impl<std::decay_t<F>>>(std::forward<F>(f))) {}

  UniqueFn(UniqueFn&&) = default;
  UniqueFn& operator=(UniqueFn&&) = default;

  explicit operator bool() const { return p_ != nullptr; }
  void operator()() { p_->call(); }
  void reset() { p_.reset(); }

 private:
  std::unique_ptr<Base> p_;
};

}  // namespace tp::detail
