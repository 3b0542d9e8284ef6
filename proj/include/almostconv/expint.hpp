#pragma once

#include <complex>

namespace almostconv {

// Principal-branch exponential integral E1(z) for complex z (branch cut on
// the negative real axis).  `cut_side` picks the limit used when z lands
// exactly on the cut: >= 0 means approached from above (+i0), < 0 from below.
// Antiderivatives of oscillatory rational terms walk vertical lines in z, so
// landing on the cut is a reachable edge case, not a theoretical one.
std::complex<double> expint_e1(std::complex<double> z, int cut_side = 1);

// exp(z) * E1(z).  Safe against overflow/underflow when Re z is large; the
// continued-fraction evaluation never forms the bare exponential.
std::complex<double> expint_e1_scaled(std::complex<double> z, int cut_side = 1);

}  // namespace almostconv
