#include "sim/kernels.hpp"

#include "sim/parallel.hpp"

#include <cassert>
#include <vector>

namespace sim::kernels {

namespace {

double chunk_dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

} // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    const std::size_t n = a.size();
    if (n <= kChunk) {
        return chunk_dot(a.data(), b.data(), n);
    }
    const std::size_t nchunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(nchunks);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(par::max_threads()) if (par::enabled())
#endif
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nchunks); ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
        const std::size_t len = begin + kChunk <= n ? kChunk : n - begin;
        partial[static_cast<std::size_t>(c)] = chunk_dot(a.data() + begin, b.data() + begin, len);
    }
    double s = 0.0;
    for (double p : partial) {
        s += p;
    }
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    const double* xp = x.data();
    double* yp = y.data();
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(par::max_threads()) \
    if (par::enabled() && n > static_cast<std::ptrdiff_t>(kChunk))
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        yp[i] = yp[i] + alpha * xp[i];
    }
}

namespace ref {

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = y[i] + alpha * x[i];
    }
}

} // namespace ref

} // namespace sim::kernels
