#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nss {

// Process-wide worker cap. 0 means hardware concurrency. Set once by the CLI
// (--workers); results must not depend on it, only wall time may.
void set_worker_count(unsigned n);
unsigned worker_count();

// Chunked parallel loop. [begin, end) is split into fixed-size chunks that
// depend only on the range and chunk_size, never on the worker count; fn runs
// once per chunk with (chunk_begin, chunk_end, chunk_index). Callers write to
// disjoint per-index slots, so scheduling cannot change results.
void parallel_chunks(size_t begin, size_t end, size_t chunk_size,
                     const std::function<void(size_t, size_t, size_t)>& fn);

inline size_t chunk_count(size_t n, size_t chunk_size) {
    return chunk_size == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

}  // namespace nss
