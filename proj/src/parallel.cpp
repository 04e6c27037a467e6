#include "sparsekern/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace sparsekern {

int thread_count() {
  if (const char* env = std::getenv("SPARSEKERN_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
      // fall through to the default
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_rows(int rows, const std::function<void(int, int)>& body) {
  const int workers = std::min(thread_count(), std::max(rows, 1));
  // Small jobs are not worth a thread spawn.
  if (workers <= 1 || rows < 64) {
    body(0, rows);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  const int chunk = (rows + workers - 1) / workers;
  for (int w = 1; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(rows, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(0, std::min(rows, chunk));
}

}  // namespace sparsekern
