#pragma once

#include <functional>

namespace sim::par {

/// Thread budget for parallel regions: value of SIM_THREADS (clamped to >= 1)
/// or 1 when the variable is absent.
int max_threads();

/// Process-wide override of SIM_THREADS (0 restores the environment value).
/// Hook for tests and the benchmark; results must not depend on it.
void set_max_threads(int n);

/// True when OpenMP is compiled in and more than one thread is allowed.
bool enabled();

/// Runs fn(0) .. fn(n-1), possibly across threads. Callers must make each
/// index independent and merge results by index; outputs are then identical
/// for every thread count.
void for_index(int n, const std::function<void(int)>& fn);

} // namespace sim::par
