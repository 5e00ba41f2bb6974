#pragma once

// Deterministic worker pool over point partitions: the point set is split
// into fixed-size chunks, workers pull chunks from an atomic cursor, and the
// per-chunk results are merged in input order. Output is therefore identical
// for any thread count; counters are summed in chunk order.

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "fastmap/simple_mapper.hpp"

namespace fastmap {

inline constexpr std::size_t kDefaultChunkSize = std::size_t{1} << 20;

inline unsigned hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

/// Runs `fn(slice)` over consecutive chunks of `points` on `threads` workers
/// and concatenates the per-chunk AssignmentResults in order.
template <typename Fn>
AssignmentResult run_chunked(std::span<const Point> points,
                             std::size_t chunk_size, unsigned threads, Fn fn) {
  const std::size_t n = points.size();
  if (chunk_size == 0) chunk_size = kDefaultChunkSize;
  if (threads == 0) threads = 1;
  const std::size_t n_chunks = n == 0 ? 0 : (n + chunk_size - 1) / chunk_size;

  std::vector<AssignmentResult> parts(n_chunks);
  if (n_chunks <= 1 || threads == 1) {
    for (std::size_t k = 0; k < n_chunks; ++k) {
      parts[k] = fn(points.subspan(k * chunk_size,
                                   std::min(chunk_size, n - k * chunk_size)));
    }
  } else {
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (;;) {
        const std::size_t k = cursor.fetch_add(1);
        if (k >= n_chunks) return;
        try {
          parts[k] = fn(points.subspan(
              k * chunk_size, std::min(chunk_size, n - k * chunk_size)));
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const unsigned n_workers =
        static_cast<unsigned>(std::min<std::size_t>(threads, n_chunks));
    pool.reserve(n_workers);
    for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  AssignmentResult res;
  res.state.reserve(n);
  res.county.reserve(n);
  res.block.reserve(n);
  for (auto& part : parts) {
    res.state.insert(res.state.end(), part.state.begin(), part.state.end());
    res.county.insert(res.county.end(), part.county.begin(), part.county.end());
    res.block.insert(res.block.end(), part.block.begin(), part.block.end());
    res.counters += part.counters;
  }
  return res;
}

}  // namespace fastmap
