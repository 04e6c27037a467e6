#pragma once

#include <functional>

namespace sparsekern {

/// Worker count: SPARSEKERN_THREADS if set (>= 1), else hardware concurrency.
int thread_count();

/// Runs body(begin, end) over contiguous row blocks covering [0, rows).
/// Each row is handled by exactly one worker, so per-pixel arithmetic is
/// identical to a serial run.
void parallel_rows(int rows, const std::function<void(int, int)>& body);

}  // namespace sparsekern
