#include "hsdetect/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hsd {

std::size_t block_count(std::size_t rows) noexcept { return (rows + kBlockRows - 1) / kBlockRows; }

namespace {

void run_tasks(std::size_t tasks, unsigned threads, const std::function<void(std::size_t)>& run) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), tasks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < tasks; ++b) run(b);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < tasks; b = next++) {
          try {
            run(b);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

void for_each_block(std::size_t rows, const Parallel& par,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  run_tasks(block_count(rows), par.threads,
            [&](std::size_t b) { fn(b, b * kBlockRows, std::min(rows, (b + 1) * kBlockRows)); });
}

void for_each_index(std::size_t n, const Parallel& par, const std::function<void(std::size_t)>& fn) {
  run_tasks(n, par.threads, fn);
}

}  // namespace hsd
