#include "sim/mathfn.hpp"

#include <cmath>

namespace sim::mathfn {

namespace {

constexpr double kInvSqrtPi = 0.5641895835477562869; // 1/sqrt(pi)

// Valid for 0 <= x < ~6; used below 3 where it needs < 50 terms.
double erf_series(double x) {
    const double x2 = 2.0 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < 256; ++k) {
        term *= x2 / (2.0 * k + 3.0);
        sum += term;
        if (term < sum * 1e-17) {
            break;
        }
    }
    return 2.0 * kInvSqrtPi * x * std::exp(-x * x) * sum;
}

} // namespace

double erfc_large(double x) {
    // F = 1/(x + (1/2)/(x + (2/2)/(x + (3/2)/(x + ...)))), evaluated with
    // modified Lentz; convergence is fast for x >= 3.
    const double tiny = 1e-300;
    double f = x;
    double c = x;
    double d = 0.0;
    for (int n = 1; n <= 300; ++n) {
        const double a = 0.5 * n;
        d = x + a * d;
        if (d == 0.0) d = tiny;
        c = x + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-17) {
            break;
        }
    }
    return std::exp(-x * x) * kInvSqrtPi / f;
}

double erf(double x) {
    if (std::isnan(x)) {
        return x;
    }
    const double ax = std::abs(x);
    const double r = ax < 3.0 ? erf_series(ax) : 1.0 - erfc_large(ax);
    return x < 0.0 ? -r : r;
}

} // namespace sim::mathfn
