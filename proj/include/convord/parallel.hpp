#pragma once

#include <cstddef>
#include <functional>

namespace convord {

/// Environment variable holding the default worker count.
inline constexpr const char* kThreadsEnvVar = "CONVORD_THREADS";

/// Worker count used by parallel loops: the value set with set_thread_count(),
/// else CONVORD_THREADS, else std::thread::hardware_concurrency().
std::size_t thread_count();

/// Overrides the worker count; 0 restores the default.
void set_thread_count(std::size_t threads);

/// Runs body(i) for every i in [0, count), distributing indices over workers.
/// Callers that reduce must write per-index results and combine them in index
/// order afterwards; that keeps results independent of the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Fixed block size for path-parallel Monte Carlo reductions.
inline constexpr std::size_t kPathBlock = 4096;

inline std::size_t block_count(std::size_t n, std::size_t block = kPathBlock) {
  return (n + block - 1) / block;
}

}  // namespace convord
