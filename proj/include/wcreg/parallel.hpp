#pragma once

#include <cstddef>
#include <functional>

namespace wcreg {

/// Upper bound on worker threads used by batch evaluations and multistart.
/// Defaults to WCREG_THREADS when set, otherwise hardware concurrency.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Results must be written to per-index slots;
/// the call returns after every index has run. Nested calls run serially.
/// The first exception thrown by any body is rethrown in the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace wcreg
