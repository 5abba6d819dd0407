#pragma once
// Deterministic parallel loops: each index writes only its own slot.

#include <cstddef>
#include <functional>

namespace achart {

/// Worker count used by parallel_for. 0 means hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [begin, end) split into contiguous chunks.
/// Exceptions from workers are rethrown on the calling thread (first by index).
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

}  // namespace achart
