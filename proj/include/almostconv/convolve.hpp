#pragma once

#include <complex>

#include "almostconv/kernel.hpp"
#include "almostconv/signal.hpp"

namespace almostconv {

enum class ConvMethod { ClosedForm, ExactOverlap, Quadrature };

struct ConvolutionEstimate {
    Complex value{0.0, 0.0};
    double err = 0.0;
    ConvMethod method = ConvMethod::Quadrature;
    double truncation = 0.0;  // |t| cutoff when a tail was dropped, else 0
    long evaluations = 0;
    bool budget_exceeded = false;
};

// (f_r * phi)(x) with a certified error bound.
//
// Box dilations reduce to a window integral over [x-r, x+r], which the signal
// layer evaluates exactly for analytic forms and block structures.  For the
// long-tailed kernels the signal is split linearly; summands whose prepared
// analytic form extends boundedly into the relevant half plane get closed
// transforms (waves pick up the factor fourier(r*omega); Poisson additionally
// evaluates bounded-below terms at x - ir), piecewise-constant parts become
// CDF overlap sums, and whatever is left goes through tail-truncated adaptive
// quadrature with the tolerance split evenly between tail and panels.
ConvolutionEstimate convolve_at(const DilatedKernel& dk,
                                const BoundedSignal& signal, double x,
                                double tol);

struct HorizonPolicy {
    enum class Mode { Auto, Explicit };
    Mode mode = Mode::Auto;
    double H = 0.0;  // half-width of the scan window in Explicit mode
    // Cost guards: a sweep segment never exceeds max_grid_points points (the
    // actual spacing is reported and folded into the slack), block probes
    // stop at scale base^block_scale_cap and use probe_points points each.
    long max_grid_points = 20001;
    int block_scale_cap = 40;
    long probe_points = 65;
};

struct SupInfEstimate {
    double r = 0.0;
    double F_bar = 0.0;    // max of Re(f_r * phi) over the scanned grid
    double F_under = 0.0;  // min over the same grid
    double H = 0.0;        // furthest |x| the scan touched
    double delta = 0.0;    // coarsest grid spacing used
    double slack = 0.0;    // pointwise err + Lipschitz * delta / 2
    bool horizon_limited = false;
};

// Scans Re(f_r * phi) over a structure-aware grid: one period for Periodic
// signals (exact modulo grid slack), probe windows centered deep in blocks
// and gaps of every scale >= 4r (plus an origin sweep) for BlockStructured
// ones, and a user-supplied [-H, H] otherwise.  Throws HorizonUnsupported for
// Generic signals without an explicit horizon.
SupInfEstimate sup_inf_over_translates(const DilatedKernel& dk,
                                       const BoundedSignal& signal,
                                       const HorizonPolicy& horizon,
                                       double tol);

}  // namespace almostconv
