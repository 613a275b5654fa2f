#pragma once

// Coroutine plumbing that turns a sequential search routine into an ask/tell
// state machine. A routine co_awaits `evaluate(points)`; the optimizer's ask()
// hands `points` to the caller and the matching tell() resumes the routine with
// the losses. Routines may call sub-routines returning Task<T>.

#include <coroutine>
#include <exception>
#include <optional>
#include <utility>
#include <vector>

namespace orbitcal::detail {

using Point = std::vector<double>;

struct EvalChannel {
  std::vector<Point> request;
  std::vector<double> response;
  std::coroutine_handle<> waiting;
};

template <class T>
class Task;

namespace task_impl {

struct FinalAwaiter {
  bool await_ready() const noexcept { return false; }
  template <class P>
  std::coroutine_handle<> await_suspend(std::coroutine_handle<P> h) const noexcept {
    auto next = h.promise().continuation;
    return next ? next : std::noop_coroutine();
  }
  void await_resume() const noexcept {}
};

struct PromiseBase {
  std::coroutine_handle<> continuation;
  std::exception_ptr error;

  std::suspend_always initial_suspend() const noexcept { return {}; }
  FinalAwaiter final_suspend() const noexcept { return {}; }
  void unhandled_exception() noexcept { error = std::current_exception(); }
};

}  // namespace task_impl

template <class T>
class [[nodiscard]] Task {
 public:
  struct promise_type : task_impl::PromiseBase {
    std::optional<T> value;
    Task get_return_object() { return Task(handle::from_promise(*this)); }
    void return_value(T v) { value = std::move(v); }
  };
  using handle = std::coroutine_handle<promise_type>;

  Task(Task&& other) noexcept : h_(std::exchange(other.h_, {})) {}
  Task& operator=(Task&&) = delete;
  ~Task() {
    if (h_) h_.destroy();
  }

  bool await_ready() const noexcept { return false; }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent) noexcept {
    h_.promise().continuation = parent;
    return h_;
  }
  T await_resume() {
    if (h_.promise().error) std::rethrow_exception(h_.promise().error);
    return std::move(*h_.promise().value);
  }

 private:
  explicit Task(handle h) : h_(h) {}
  handle h_;
};

template <>
class [[nodiscard]] Task<void> {
 public:
  struct promise_type : task_impl::PromiseBase {
    Task get_return_object() { return Task(handle::from_promise(*this)); }
    void return_void() {}
  };
  using handle = std::coroutine_handle<promise_type>;

  Task(Task&& other) noexcept : h_(std::exchange(other.h_, {})) {}
  Task& operator=(Task&& other) noexcept {
    if (this != &other) {
      if (h_) h_.destroy();
      h_ = std::exchange(other.h_, {});
    }
    return *this;
  }
  ~Task() {
    if (h_) h_.destroy();
  }

  bool await_ready() const noexcept { return false; }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent) noexcept {
    h_.promise().continuation = parent;
    return h_;
  }
  void await_resume() {
    if (h_.promise().error) std::rethrow_exception(h_.promise().error);
  }

  /// Top-level driving: starts the routine or resumes it after a tell.
  bool done() const { return !h_ || h_.done(); }
  void start() { h_.resume(); }
  void rethrow_if_failed() const {
    if (h_ && h_.promise().error) std::rethrow_exception(h_.promise().error);
  }

 private:
  explicit Task(handle h) : h_(h) {}
  handle h_;
};

/// co_await evaluate(channel, points) -> losses, one per point.
struct EvaluateAwaiter {
  EvalChannel* channel;
  std::vector<Point> points;

  bool await_ready() const noexcept { return points.empty(); }
  void await_suspend(std::coroutine_handle<> h) {
    channel->request = std::move(points);
    channel->waiting = h;
  }
  std::vector<double> await_resume() {
    channel->waiting = {};
    return std::exchange(channel->response, {});
  }
};

inline EvaluateAwaiter evaluate(EvalChannel& channel, std::vector<Point> points) {
  return EvaluateAwaiter{&channel, std::move(points)};
}

}  // namespace orbitcal::detail
