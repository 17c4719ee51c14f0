#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rwre {

/// Mergeable (count, sum, sum of squares) accumulator.
struct RunningStats {
  std::int64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }

  void merge(const RunningStats& other) {
    count += other.count;
    sum += other.sum;
    sum_sq += other.sum_sq;
  }

  double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }

  /// Unbiased sample variance.
  double variance() const {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double m = sum / n;
    return std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
  }

  double std_error() const {
    return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

/// Standard error of a Bernoulli frequency estimate with true probability p.
inline double binomial_se(double p, std::int64_t n) {
  return n > 0 ? std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n)) : 0.0;
}

/// Runs task(index) for index in [0, n_tasks) on a small worker pool.
/// Results must be written to per-index slots by the caller so that the
/// outcome does not depend on scheduling. The first exception is rethrown.
inline void parallel_for(std::int64_t n_tasks, const std::function<void(std::int64_t)>& task,
                         unsigned max_workers = 0) {
  if (n_tasks <= 0) return;
  unsigned workers = max_workers != 0 ? max_workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, n_tasks));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::int64_t i = next++; i < n_tasks; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n_tasks;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace rwre
