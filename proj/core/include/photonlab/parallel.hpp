#pragma once

#include <atomic>
#include <condition_variable>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace photonlab {

/// Persistent helper threads for low-latency fan-out of tiny task sets
/// (intra-op channel splits). Caller runs task 0 itself; helpers pick up the
/// rest. Lazily started, process-lifetime.
class WorkerPool {
 public:
  static WorkerPool& instance() {
    static WorkerPool pool;
    return pool;
  }

  /// Blocks until task(0..n_tasks-1) have all run. Tasks must write disjoint
  /// outputs and must not throw.
  void run(int n_tasks, const std::function<void(int)>& task) {
    if (n_tasks <= 1) {
      if (n_tasks == 1) task(0);
      return;
    }
    std::unique_lock<std::mutex> lock(mutex_);
    task_ = &task;
    total_ = n_tasks;
    next_ = 1;
    pending_ = n_tasks - 1;
    ++generation_;
    lock.unlock();
    wake_.notify_all();

    task(0);

    lock.lock();
    done_.wait(lock, [&] { return pending_ == 0; });
    task_ = nullptr;
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

 private:
  WorkerPool() {
    const unsigned hw = std::max(2u, std::thread::hardware_concurrency());
    for (unsigned t = 0; t + 1 < hw; ++t)
      threads_.emplace_back([this] { worker_loop(); });
  }
  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void worker_loop() {
    uint64_t seen = 0;
    for (;;) {
      std::unique_lock<std::mutex> lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      while (task_ != nullptr && next_ < total_) {
        const int i = next_++;
        const auto* task = task_;
        lock.unlock();
        (*task)(i);
        lock.lock();
        if (--pending_ == 0) done_.notify_one();
      }
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(int)>* task_ = nullptr;
  int total_ = 0;
  int next_ = 0;
  int pending_ = 0;
  uint64_t generation_ = 0;
  bool stop_ = false;
};

/// Runs fn(0..n-1) across up to `jobs` worker threads. Tasks own disjoint
/// output slots, so results do not depend on the worker count; any reduction
/// is the caller's job and must run in index order.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(jobs));
  for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace photonlab
