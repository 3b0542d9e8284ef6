#include "almostconv/expint.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "almostconv/quadrature.hpp"

namespace almostconv {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
constexpr double kSeriesRadius = 9.0;

using C = std::complex<double>;

C force_cut_side(C z, int cut_side) {
    if (z.imag() == 0.0 && z.real() < 0.0) {
        return C(z.real(), cut_side >= 0 ? +0.0 : -0.0);
    }
    return z;
}

// Power series around 0:  E1(z) = -gamma - log z - sum (-z)^n / (n * n!).
// Loses ~|z| * log10(e) digits to cancellation, which is why it is only used
// inside |z| <= 9.  log's own cut matches E1's, so signed zeros select the
// boundary value on the cut with no extra bookkeeping.
C e1_series(C z) {
    C sum(0.0, 0.0);
    C term(1.0, 0.0);
    for (int n = 1; n < 120; ++n) {
        term *= -z / static_cast<double>(n);
        const C contrib = term / static_cast<double>(n);
        sum += contrib;
        if (std::abs(contrib) < 1e-18 * (1.0 + std::abs(sum))) break;
    }
    return -kEulerGamma - std::log(z) - sum;
}

// Modified Lentz continued fraction for exp(z) * E1(z); b0 = z + 1,
// a_k = -k^2, b_k = z + 2k + 1.  Reliable away from the negative real axis;
// callers keep it out of the sector around the cut.
C e1_cf_scaled(C z) {
    const double tiny = 1e-290;
    C b = z + 1.0;
    C c = C(1.0 / tiny, 0.0);
    C d = 1.0 / b;
    C h = d;
    for (int i = 1; i <= 400; ++i) {
        const double a = -static_cast<double>(i) * static_cast<double>(i);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        if (std::abs(c) < tiny) c = C(tiny, 0.0);
        const C del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h;
}

// Near the cut with |z| too large for the series, continue analytically from
// the imaginary axis along the circle |s| = |z|:
//   e^z E1(z) = e^{z-z0} e^{z0} E1(z0) - i * integral_{th0}^{arg z} e^{z-s(th)} dth,
// s(th) = |z| e^{i th}.  Re(z - s) <= 0 along the whole arc, so every factor
// is bounded by 1 and the jump across the cut falls out of the signed zero in
// arg z.
C e1_arc_scaled(C z) {
    const double R = std::abs(z);
    const bool upper = !std::signbit(z.imag());
    const C z0 = C(0.0, upper ? R : -R);
    const double th0 = upper ? std::numbers::pi / 2 : -std::numbers::pi / 2;
    const double th1 = std::arg(z);  // +pi on the upper lip, -pi on the lower
    const C ref = e1_cf_scaled(z0);
    QuadResult q = integrate(
        [z, R](double th) {
            const C s = R * std::exp(C(0.0, th));
            return C(0.0, 1.0) * std::exp(z - s);
        },
        th0, th1, 1e-15);
    return std::exp(z - z0) * ref - q.value;
}

C e1_scaled_impl(C z) {
    if (std::abs(z) <= kSeriesRadius) return std::exp(z) * e1_series(z);
    if (z.real() >= -0.5 * std::abs(z.imag())) return e1_cf_scaled(z);
    return e1_arc_scaled(z);
}

}  // namespace

C expint_e1(C z, int cut_side) {
    if (z == C(0.0, 0.0)) {
        throw std::domain_error("expint: E1 is singular at 0");
    }
    z = force_cut_side(z, cut_side);
    if (std::abs(z) <= kSeriesRadius) return e1_series(z);
    return std::exp(-z) * e1_scaled_impl(z);
}

C expint_e1_scaled(C z, int cut_side) {
    if (z == C(0.0, 0.0)) {
        throw std::domain_error("expint: E1 is singular at 0");
    }
    z = force_cut_side(z, cut_side);
    return e1_scaled_impl(z);
}

}  // namespace almostconv
