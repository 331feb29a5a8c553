#pragma once

namespace sim::mathfn {

/// Error function, implemented locally so every build evaluates the same
/// arithmetic regardless of the host libm.
///
/// |x| < 3   : positive-term series
///               erf(x) = (2x/sqrt(pi)) e^{-x^2} sum_k (2x^2)^k / (1*3*...*(2k+1))
/// |x| >= 3  : complementary-function continued fraction (modified Lentz)
///               erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x+ (1/2)/(x+ (2/2)/(x+ ...)))
///
/// Absolute error is below 1e-14 on the whole real line.
double erf(double x);

/// erfc(x) for x >= 0 via the continued fraction above.
double erfc_large(double x);

} // namespace sim::mathfn
