#include "mstop/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

namespace mstop {

namespace {

int default_workers() {
  if (const char* env = std::getenv("MSTOP_WORKERS")) {
    int v = std::atoi(env);
    if (v >= 1) return std::min(v, 256);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 16u));
}

std::atomic<int> g_workers{0};  // 0 = not yet initialized

int workers_now() {
  int w = g_workers.load(std::memory_order_relaxed);
  if (w == 0) {
    w = default_workers();
    g_workers.store(w, std::memory_order_relaxed);
  }
  return w;
}

// Threads pull chunk indices from a shared counter; chunk boundaries are a
// pure function of (n, chunk), never of the worker count.
void run_chunks(std::size_t n, std::size_t chunk,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& chunk_body) {
  if (n == 0) return;
  if (chunk == 0) chunk = 1;
  const std::size_t num_chunks = (n + chunk - 1) / chunk;
  const int workers = std::min<int>(workers_now(), static_cast<int>(num_chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < num_chunks; ++c) {
      std::size_t b = c * chunk;
      chunk_body(c, b, std::min(n, b + chunk));
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= num_chunks) return;
      std::size_t b = c * chunk;
      chunk_body(c, b, std::min(n, b + chunk));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
}

}  // namespace

int worker_count() { return workers_now(); }

void set_worker_count(int workers) {
  g_workers.store(std::clamp(workers, 1, 256), std::memory_order_relaxed);
}

void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  run_chunks(n, grain, [&](std::size_t, std::size_t b, std::size_t e) { body(b, e); });
}

double parallel_sum(std::size_t n, std::size_t chunk,
                    const std::function<double(std::size_t, std::size_t)>& chunk_sum) {
  if (n == 0) return 0.0;
  if (chunk == 0) chunk = 1;
  const std::size_t num_chunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(num_chunks, 0.0);
  run_chunks(n, chunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    partial[c] = chunk_sum(b, e);
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

void parallel_accumulate(std::size_t n, std::size_t chunk, std::size_t dim, double* out,
                         const std::function<void(std::size_t, std::size_t, double*)>& body) {
  std::fill(out, out + dim, 0.0);
  if (n == 0) return;
  if (chunk == 0) chunk = 1;
  const std::size_t num_chunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(num_chunks * dim, 0.0);
  run_chunks(n, chunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    body(b, e, partial.data() + c * dim);
  });
  for (std::size_t c = 0; c < num_chunks; ++c) {
    const double* p = partial.data() + c * dim;
    for (std::size_t d = 0; d < dim; ++d) out[d] += p[d];
  }
}

}  // namespace mstop
