// Timings for the data-parallel kernels: chunked OpenMP path against the
// serial reference, plus end-to-end step and Monte-Carlo throughput.

#include "sim/harness.hpp"
#include "sim/kernels.hpp"
#include "sim/learning.hpp"
#include "sim/model.hpp"
#include "sim/orderparams.hpp"
#include "sim/parallel.hpp"
#include "sim/rng.hpp"

#include <chrono>
#include <cstdio>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

volatile double g_sink = 0.0;

template <typename F>
double time_per_call(F&& fn, int min_reps) {
    fn(); // warm up
    int reps = min_reps;
    double elapsed = 0.0;
    for (;;) {
        const auto t0 = clock_type::now();
        for (int r = 0; r < reps; ++r) {
            fn();
        }
        elapsed = seconds_since(t0);
        if (elapsed > 0.2) {
            break;
        }
        reps *= 4;
    }
    return elapsed / reps;
}

void bench_dot(int threads) {
    std::printf("dot product (ns/call, serial reference vs chunked kernel, %d threads)\n",
                threads);
    std::printf("%10s %14s %14s %9s\n", "n", "ref", "kernel", "speedup");
    sim::Rng rng(42);
    for (const std::size_t n : {4096ul, 65536ul, 1048576ul, 8388608ul}) {
        std::vector<double> a(n);
        std::vector<double> b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        sim::par::set_max_threads(1);
        const double t_ref = time_per_call([&] { g_sink = sim::kernels::ref::dot(a, b); }, 4);
        sim::par::set_max_threads(threads);
        const double t_par = time_per_call([&] { g_sink = sim::kernels::dot(a, b); }, 4);
        std::printf("%10zu %14.0f %14.0f %8.2fx\n", n, t_ref * 1e9, t_par * 1e9, t_ref / t_par);
    }
}

void bench_axpy(int threads) {
    std::printf("\naxpy (ns/call, serial reference vs kernel, %d threads)\n", threads);
    std::printf("%10s %14s %14s %9s\n", "n", "ref", "kernel", "speedup");
    sim::Rng rng(43);
    for (const std::size_t n : {4096ul, 65536ul, 1048576ul, 8388608ul}) {
        std::vector<double> x(n);
        std::vector<double> y(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
        }
        sim::par::set_max_threads(1);
        const double t_ref =
            time_per_call([&] { sim::kernels::ref::axpy(1e-9, x, y); }, 4);
        sim::par::set_max_threads(threads);
        const double t_par = time_per_call([&] { sim::kernels::axpy(1e-9, x, y); }, 4);
        std::printf("%10zu %14.0f %14.0f %8.2fx\n", n, t_ref * 1e9, t_par * 1e9, t_ref / t_par);
    }
}

void bench_mc(int threads) {
    std::printf("\nMonte-Carlo generalization error, 2e5 samples (ms/call)\n");
    sim::Rng setup(7);
    const sim::TeacherNetwork teacher = sim::make_teacher(2, 400, sim::TeacherKind::Orthogonal,
                                                          setup);
    sim::StudentNetwork student = sim::make_student(4, 400, setup);
    const sim::OrderParameters op = sim::measure(teacher, student);

    sim::par::set_max_threads(1);
    sim::Rng r1(99);
    const double t_serial = time_per_call(
        [&] {
            g_sink = sim::monte_carlo_generalization_error(op, teacher.v, student.w, 200000, r1)
                         .mc_mean;
        },
        1);
    sim::par::set_max_threads(threads);
    sim::Rng r2(99);
    const double t_par = time_per_call(
        [&] {
            g_sink = sim::monte_carlo_generalization_error(op, teacher.v, student.w, 200000, r2)
                         .mc_mean;
        },
        1);
    std::printf("  serial %.1f ms, %d threads %.1f ms, speedup %.2fx\n", t_serial * 1e3, threads,
                t_par * 1e3, t_serial / t_par);
}

void bench_steps() {
    std::printf("\ndirect-backend SGD steps (N=1000, M=2, K=4, Gaussian inputs)\n");
    sim::par::set_max_threads(1);
    sim::Rng trng(1);
    sim::Rng srng(2);
    sim::Rng irng(3);
    const sim::TeacherNetwork teacher =
        sim::make_teacher(2, 1000, sim::TeacherKind::Orthogonal, trng);
    sim::StudentNetwork student = sim::make_student(4, 1000, srng);
    sim::StepStats stats;
    sim::InputSample input;
    const int steps = 200000;
    const auto t0 = clock_type::now();
    for (int s = 0; s < steps; ++s) {
        sim::sample_input_into(input, 1000, sim::InputDist::Gaussian, irng);
        sim::sgd_step(student, teacher, input, 0.005, stats);
    }
    const double dt = seconds_since(t0);
    std::printf("  %.0f steps/s (%.2f us/step)\n", steps / dt, dt / steps * 1e6);
}

} // namespace

int main(int argc, char** argv) {
    int threads = 0;
#if defined(_OPENMP)
    threads = omp_get_max_threads();
#endif
    if (argc > 1) {
        threads = std::atoi(argv[1]);
    }
    if (threads < 2) {
        threads = 2;
    }
    bench_dot(threads);
    bench_axpy(threads);
    bench_mc(threads);
    bench_steps();
    return 0;
}
