#include "sim/parallel.hpp"

#include <cstdlib>
#include <string>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace sim::par {

namespace {
int g_override = 0;
}

void set_max_threads(int n) {
    g_override = n < 0 ? 0 : n;
}

int max_threads() {
    if (g_override > 0) {
        return g_override;
    }
    static const int n = [] {
        const char* env = std::getenv("SIM_THREADS");
        if (env == nullptr) {
            return 1;
        }
        int v = std::atoi(env);
        return v < 1 ? 1 : v;
    }();
    return n;
}

bool enabled() {
#if defined(_OPENMP)
    return max_threads() > 1;
#else
    return false;
#endif
}

void for_index(int n, const std::function<void(int)>& fn) {
#if defined(_OPENMP)
    if (enabled() && n > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(max_threads())
        for (int i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
#endif
    for (int i = 0; i < n; ++i) {
        fn(i);
    }
}

} // namespace sim::par
