#pragma once

#include <complex>
#include <vector>

#include "almostconv/aclimit.hpp"
#include "almostconv/kernel.hpp"
#include "almostconv/signal.hpp"

namespace almostconv {

// (f_r * phi)(x) computed through the multiplicative (Mellin) picture: with
// phi_x(t) = phi(x - t) + phi(x + t) folded onto the half line and
// f~(u) = f(1/u)/|u|, the convolution equals the multiplicative average
// integral_0^inf phi_x(t) f~(r/t) dt/t.  Evaluated by log-substitution
// quadrature with certified cutoffs; deliberately shares no code with
// convolve_at so the two routes can check each other.  Requires an even
// kernel and r, tol > 0.
Complex mellin_convolution(const Kernel& kernel, const BoundedSignal& signal,
                           double x, double r, double tol);

// Which end of the dilation ladder a pointwise limit runs to.
enum class GammaLimit { ZeroPlus, Infinity };

// Values of (f_r * phi)(x) along a geometric ladder of dilations running
// toward gamma; rungs below the small-r floor (1e-6) are not generated.
struct PointLadder {
    std::vector<double> rungs;
    std::vector<Complex> values;
    Complex limit{0.0, 0.0};  // last value, the closest to gamma
    bool stable = false;      // last three values pairwise within eps_conv
};

// Runs pointwise ladders for two kernels toward the same end and checks the
// transfer implication: once the f-average converges at x, the g-average
// must converge there too, to the same value.  f must pass the Mellin
// admissibility scan (InadmissibleKernel otherwise); both kernels must be
// even (PreconditionUnmet).  No implication is claimed when the f-ladder
// itself fails to stabilize.
struct TransferReport {
    GammaLimit gamma = GammaLimit::Infinity;
    PointLadder f_ladder;
    PointLadder g_ladder;
    bool transfer_ok = false;
};
TransferReport kernel_transfer_check(const Kernel& f, const Kernel& g,
                                     const BoundedSignal& signal, double x,
                                     GammaLimit gamma,
                                     const LadderConfig& config);

// Shrinking-dilation ladder r0, r0/rho, ... at a fixed point: the averages
// recover phi(x) at continuity points and the symmetric midpoint at jumps.
// Requires an even kernel.
PointLadder fatou_small_r(const Kernel& kernel, const BoundedSignal& signal,
                          double x, const LadderConfig& config);

// Poisson averages (radial approach of the harmonic extension) against box
// averages (symmetric differentiation of the primitive) at the same
// boundary point.  The two limits exist together and agree; the report
// records existence and value agreement separately.
struct RadialSymmetricReport {
    PointLadder radial;     // Poisson ladder toward r = 0+
    PointLadder symmetric;  // box ladder toward r = 0+
    bool existence_match = false;
    bool value_match = false;  // both stable and limits within eps_agree
};
RadialSymmetricReport radial_vs_symmetric(const BoundedSignal& signal,
                                          double y,
                                          const LadderConfig& config);

}  // namespace almostconv
