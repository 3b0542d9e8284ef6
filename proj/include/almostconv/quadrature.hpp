#pragma once

#include <complex>
#include <functional>

namespace almostconv {

// Result of an adaptive quadrature pass.  `err` is the accumulated error
// estimate (Kronrod minus Gauss per panel) plus anything the caller folds in
// for truncated tails.  When the evaluation budget runs out we stop refining
// and report the best value with `converged = false`; callers are expected to
// surface that honestly rather than retry blindly.
struct QuadResult {
    std::complex<double> value{0.0, 0.0};
    double err = 0.0;
    long evaluations = 0;
    bool converged = true;
};

using ComplexFn = std::function<std::complex<double>(double)>;

// Adaptive Gauss-Kronrod (7-15) on [a, b] targeting an absolute tolerance.
// Splits the worst panel first; `max_evaluations` caps total integrand calls.
QuadResult integrate_complex(const ComplexFn& f, double a, double b,
                             double abs_tol, long max_evaluations = 2'000'000);

// Accepts any callable returning double or complex<double>.
template <typename F>
QuadResult integrate(F&& f, double a, double b, double abs_tol,
                     long max_evaluations = 2'000'000) {
    return integrate_complex(
        [&f](double x) { return std::complex<double>(f(x)); }, a, b, abs_tol,
        max_evaluations);
}

}  // namespace almostconv
