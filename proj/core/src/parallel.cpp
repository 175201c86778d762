#include "uve/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace uve {

namespace {

// Set for pool workers, and for a caller thread while it participates in a
// region it launched. Nested parallel_for calls then run inline, which keeps
// one level of parallelism and rules out pool re-entry.
thread_local bool t_in_parallel = false;

class Pool {
 public:
  static Pool& get() {
    static Pool pool(max_threads() - 1);
    return pool;
  }

  // Returns false without running anything when another region is active;
  // the caller then executes inline.
  bool try_run(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
    std::unique_lock run_lock(run_mu_, std::try_to_lock);
    if (!run_lock.owns_lock()) return false;
    const int lanes = static_cast<int>(threads_.size()) + 1;
    {
      std::lock_guard lk(mu_);
      fn_ = &fn;
      n_ = n;
      lanes_ = lanes;
      done_.store(0);
      next_.store(0, std::memory_order_release);  // publishes fn_/n_/lanes_
      ++generation_;
    }
    cv_.notify_all();
    {
      t_in_parallel = true;
      work();
      t_in_parallel = false;
    }
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [&] { return done_.load() == lanes_; });
    fn_ = nullptr;
    return true;
  }

 private:
  explicit Pool(int workers) {
    for (int i = 0; i < workers; ++i)
      threads_.emplace_back([this] { worker_main(); });
  }

  ~Pool() {
    {
      std::lock_guard lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void work() {
    for (;;) {
      const int64_t lane = next_.fetch_add(1, std::memory_order_acq_rel);
      if (lane >= lanes_) break;
      const int64_t b = lane * n_ / lanes_;
      const int64_t e = (lane + 1) * n_ / lanes_;
      if (b < e) (*fn_)(b, e);
      if (done_.fetch_add(1) + 1 == lanes_) {
        std::lock_guard lk(mu_);
        done_cv_.notify_all();
      }
    }
  }

  void worker_main() {
    t_in_parallel = true;
    uint64_t seen = 0;
    for (;;) {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      lk.unlock();
      work();
    }
  }

  std::vector<std::thread> threads_;
  std::mutex run_mu_;  // one active region at a time
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(int64_t, int64_t)>* fn_ = nullptr;
  int64_t n_ = 0;
  int lanes_ = 0;
  std::atomic<int64_t> next_{0};
  std::atomic<int64_t> done_{0};
  uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace

int max_threads() {
  static const int cached = [] {
    if (const char* env = std::getenv("UVE_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v > 0) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
  }();
  return cached;
}

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
  if (n <= 0) return;
  if (n == 1 || max_threads() <= 1 || t_in_parallel) {
    fn(0, n);
    return;
  }
  if (!Pool::get().try_run(n, fn)) fn(0, n);
}

}  // namespace uve
