#pragma once

#include <cstddef>
#include <span>

namespace sim::kernels {

/// Reductions are chunked at this fixed size and chunk partials are combined
/// in index order, so the serial and OpenMP paths produce bit-identical
/// results for any thread count.
inline constexpr std::size_t kChunk = 4096;

/// Dot product, chunked reduction.
double dot(std::span<const double> a, std::span<const double> b);

/// y += alpha * x, elementwise.
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Serial reference implementations, kept for tests and the benchmark.
/// `dot` here is the naive left-to-right accumulation.
namespace ref {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
} // namespace ref

} // namespace sim::kernels
