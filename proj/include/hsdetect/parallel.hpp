#pragma once

#include <cstddef>
#include <functional>

namespace hsd {

/// Rows per work block. Block boundaries never depend on the thread count, and
/// every reduction combines per-block partials in block order, so results are
/// bit-identical for any `Parallel::threads`.
inline constexpr std::size_t kBlockRows = 4096;

struct Parallel {
  unsigned threads = 1;
};

std::size_t block_count(std::size_t rows) noexcept;

/// Calls fn(block, begin, end) once per block of [0, rows), spread over up to
/// par.threads worker threads. Exceptions from fn are rethrown on the caller.
void for_each_block(std::size_t rows, const Parallel& par,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

/// Calls fn(i) for every i in [0, n) on up to par.threads threads. Each call
/// must write only to its own output slot.
void for_each_index(std::size_t n, const Parallel& par, const std::function<void(std::size_t)>& fn);

}  // namespace hsd
