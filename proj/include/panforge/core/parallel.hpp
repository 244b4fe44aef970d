// Internal parallelism. A single persistent pool hands each worker a fixed
// contiguous slice of the index range, so results never depend on thread
// count or scheduling: workers only write disjoint state and reductions stay
// with the caller.
#pragma once

#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace panforge {

/// Worker cap: min(PANFORGE_THREADS, hardware threads), at least 1.
inline int max_threads() {
  static const int cached = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("PANFORGE_THREADS")) {
      const long cap = std::strtol(env, nullptr, 10);
      if (cap >= 1 && cap < hw) hw = static_cast<int>(cap);
    }
    return hw;
  }();
  return cached;
}

namespace detail {

class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool(max_threads() - 1);
    return pool;
  }

  /// Runs fn(i) for i in [0, n), slice t of the range on participant t.
  /// The calling thread works slice 0. Nested calls run inline.
  void run(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
    if (n <= 0) return;
    const int parts = static_cast<int>(std::min<std::int64_t>(workers_.size() + 1, n));
    if (parts <= 1 || in_worker()) {
      for (std::int64_t i = 0; i < n; ++i) fn(i);
      return;
    }
    {
      std::unique_lock<std::mutex> lock(mu_);
      fn_ = &fn;
      n_ = n;
      parts_ = parts;
      pending_ = parts - 1;
      error_ = nullptr;
      ++generation_;
    }
    cv_work_.notify_all();
    run_slice(0);
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_done_.wait(lock, [&] { return pending_ == 0; });
      fn_ = nullptr;
      if (error_) std::rethrow_exception(error_);
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_work_.notify_all();
    for (auto& w : workers_) w.join();
  }

 private:
  explicit ThreadPool(int worker_count) {
    workers_.reserve(static_cast<std::size_t>(worker_count > 0 ? worker_count : 0));
    for (int t = 1; t <= worker_count; ++t)
      workers_.emplace_back([this, t] { worker_loop(t); });
  }

  static bool& in_worker() {
    thread_local bool flag = false;
    return flag;
  }

  void run_slice(int part) {
    const std::int64_t begin = n_ * part / parts_;
    const std::int64_t end = n_ * (part + 1) / parts_;
    for (std::int64_t i = begin; i < end; ++i) (*fn_)(i);
  }

  void worker_loop(int index) {
    in_worker() = true;
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_work_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      if (index < parts_) {
        try {
          run_slice(index);
        } catch (...) {
          std::unique_lock<std::mutex> lock(mu_);
          if (!error_) error_ = std::current_exception();
        }
      }
      {
        std::unique_lock<std::mutex> lock(mu_);
        if (--pending_ == 0) cv_done_.notify_all();
      }
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_work_, cv_done_;
  const std::function<void(std::int64_t)>* fn_ = nullptr;
  std::int64_t n_ = 0;
  int parts_ = 0;
  int pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace detail

/// Runs f(i) for i in [0, n). Iterations must write disjoint state.
template <typename F>
inline void parallel_for(std::int64_t n, F&& f) {
  if (n <= 0) return;
  if (max_threads() <= 1 || n == 1) {
    for (std::int64_t i = 0; i < n; ++i) f(i);
    return;
  }
  const std::function<void(std::int64_t)> fn = std::forward<F>(f);
  detail::ThreadPool::instance().run(n, fn);
}

/// Splits [0, n) into contiguous ranges and runs f(begin, end) on each.
/// Worth it only for sizeable elementwise sweeps.
template <typename F>
inline void parallel_chunks(std::int64_t n, F&& f) {
  if (n <= 0) return;
  const std::int64_t min_chunk = 65536;
  const int parts =
      static_cast<int>(std::min<std::int64_t>(max_threads(), (n + min_chunk - 1) / min_chunk));
  if (parts <= 1) {
    f(std::int64_t(0), n);
    return;
  }
  const std::int64_t chunk = (n + parts - 1) / parts;
  parallel_for(parts, [&](std::int64_t t) {
    const std::int64_t b = t * chunk;
    f(b, std::min(n, b + chunk));
  });
}

}  // namespace panforge
