#pragma once

#include <cstddef>
#include <functional>

namespace lffuse {

/// Upper bound on worker threads used by parallel_for. Defaults to 1.
void set_thread_count(int n);
int thread_count();

/// Runs fn(i) for i in [0, n). Each index must write only its own outputs;
/// results are then independent of the thread count.
void parallel_for(std::ptrdiff_t n, const std::function<void(std::ptrdiff_t)>& fn);

}  // namespace lffuse
