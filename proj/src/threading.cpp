#include "nullwave/threading.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace nullwave {

namespace {

int resolve_thread_count() {
  if (const char* env = std::getenv("NULLWAVE_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Minimal persistent pool: tasks are (chunk index -> body call). A pool
// avoids paying thread creation on every stencil sweep.
class Pool {
 public:
  Pool() : workers_(static_cast<std::size_t>(std::max(0, thread_count() - 1))) {
    for (auto& w : workers_) {
      w = std::thread([this] { worker_loop(); });
    }
  }

  ~Pool() {
    {
      std::unique_lock lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  void run(std::int64_t begin, std::int64_t end, std::int64_t chunk,
           const std::function<void(std::int64_t, std::int64_t)>& body) {
    {
      std::unique_lock lock(mu_);
      body_ = &body;
      next_ = begin;
      end_ = end;
      chunk_ = chunk;
      pending_ = (end - begin + chunk - 1) / chunk;
      generation_++;
    }
    cv_.notify_all();
    // The caller participates too.
    drain();
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    body_ = nullptr;
  }

 private:
  void drain() {
    for (;;) {
      std::int64_t b, e;
      {
        std::unique_lock lock(mu_);
        if (body_ == nullptr || next_ >= end_) return;
        b = next_;
        e = std::min(end_, b + chunk_);
        next_ = e;
      }
      (*body_)(b, e);
      std::unique_lock lock(mu_);
      if (--pending_ == 0) done_cv_.notify_all();
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      drain();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::int64_t, std::int64_t)>* body_ = nullptr;
  std::int64_t next_ = 0, end_ = 0, chunk_ = 1, pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace

int thread_count() {
  static const int n = resolve_thread_count();
  return n;
}

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (end <= begin) return;
  const std::int64_t span = end - begin;
  const int nt = thread_count();
  if (nt == 1 || span < 1024) {
    body(begin, end);
    return;
  }
  // Fixed chunking: 4 chunks per worker bounds imbalance without making the
  // schedule depend on timing.
  const std::int64_t chunk = std::max<std::int64_t>(1, span / (4 * nt));
  static Pool pool;
  pool.run(begin, end, chunk, body);
}

}  // namespace nullwave
