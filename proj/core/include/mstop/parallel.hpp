#pragma once

// Deterministic data-parallel helpers. Work is split into fixed-size chunks
// whose boundaries do not depend on the worker count; reductions combine
// per-chunk partials in chunk order, so results are bit-identical for any
// number of workers.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mstop {

// Number of worker threads used by parallel_for / parallel_sum /
// parallel_accumulate. Defaults to the hardware concurrency, capped at 16;
// the MSTOP_WORKERS environment variable overrides the default.
int worker_count();
void set_worker_count(int workers);

// Runs body(begin, end) over disjoint subranges of [0, n).
void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

// Deterministic sum of chunk_sum(begin, end) over chunks of size chunk.
double parallel_sum(std::size_t n, std::size_t chunk,
                    const std::function<double(std::size_t, std::size_t)>& chunk_sum);

// Deterministic vector accumulation: body(begin, end, buf) adds the chunk's
// contribution into a zeroed buffer of size dim; partials are combined in
// chunk order into out (which is zeroed first).
void parallel_accumulate(std::size_t n, std::size_t chunk, std::size_t dim,
                         double* out,
                         const std::function<void(std::size_t, std::size_t, double*)>& body);

}  // namespace mstop
