#pragma once

#include <cstddef>
#include <functional>

namespace toxscreen {

// Worker count used by parallel_for. Defaults to TOXSCREEN_THREADS when set,
// otherwise 1. Results of every parallel loop in this library are independent
// of the worker count: each index writes only its own output slot.
std::size_t thread_count();
void set_thread_count(std::size_t n);

// Calls body(i) for every i in [0, n), split into contiguous chunks.
// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace toxscreen
