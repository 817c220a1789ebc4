#include "sbmai/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace sbmai {
namespace {

std::atomic<int> g_threads{0};
thread_local bool t_in_region = false;  // nested calls run serially

double pairwise_range(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_range(v, half) + pairwise_range(v + half, n - half);
}

}  // namespace

void set_num_threads(int threads) { g_threads.store(std::max(0, threads)); }

int num_threads() {
  const int t = g_threads.load();
  if (t > 0) return t;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(num_threads()), count);
  if (workers <= 1 || t_in_region) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    const bool outer = t_in_region;
    t_in_region = true;
    struct Restore {
      bool v;
      ~Restore() { t_in_region = v; }
    } restore{outer};
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double pairwise_sum(const std::vector<double>& values) {
  return pairwise_range(values.data(), values.size());
}

}  // namespace sbmai
