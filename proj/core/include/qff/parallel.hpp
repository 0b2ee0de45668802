#pragma once

#include <cstddef>
#include <functional>

namespace qff {

/// Caps the number of worker threads used by data-parallel loops.
/// 0 restores the default (hardware concurrency).
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs fn(i) for i in [0, n). Work items must write to disjoint state;
/// the partition is static so output does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace qff
