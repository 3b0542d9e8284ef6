#pragma once

#include <complex>
#include <string>
#include <vector>

#include "almostconv/convolve.hpp"
#include "almostconv/kernel.hpp"
#include "almostconv/signal.hpp"

namespace almostconv {

// Ladder geometry and verdict thresholds.  Defaults are tuned so that
// signals whose band shrinks like 1/r (the sinusoid class) clear eps_conv
// with three orders of magnitude to spare at the top rung.
struct LadderConfig {
    double r0 = 1.0;
    double rho = 10.0;
    int K = 6;               // rungs run r = r0 * rho^k for k = 0..K
    double tol = 1e-6;       // per-point convolution tolerance
    double eps_conv = 1e-3;  // band collapse and rung Cauchy threshold
    double eps_agree = 1e-3; // cross-kernel alpha agreement
    double eps_div = 1e-2;   // stable wide band threshold
    HorizonPolicy horizon;
    bool check_admissibility = true;
    double xi_max = 10.0;    // admissibility scan parameters
    double xi_step = 0.1;
    double mellin_floor = 1e-8;
};

// One kernel's ladder of sup/inf estimates at geometrically growing r,
// sorted by r.  If a rung fails, the rungs computed so far are returned
// with the failing index and message recorded.
struct LadderResult {
    KernelKind kind = KernelKind::Box;
    std::string kernel_spec;
    std::vector<SupInfEstimate> rungs;
    int failure_rung = -1;
    std::string failure;  // empty when the ladder completed
};

// Tail summary of a ladder: extremes over the last three rungs, and whether
// those rungs are mutually Cauchy.
struct FuEstimate {
    double F_bar_u = 0.0;
    double F_under_u = 0.0;
    bool stable = false;
};

// [lo, hi] band distilled from one ladder, with the worst slack of the
// rungs that produced it.
struct BandSummary {
    double lo = 0.0;
    double hi = 0.0;
    double slack = 0.0;
    bool stable = false;
    double width() const { return hi - lo; }
};

// Everything one kernel contributed to the verdict.  The imaginary ladder
// is skipped (and its band pinned to exactly zero) when the signal is
// structurally real.
struct KernelReport {
    std::string kernel_spec;
    LadderResult re_ladder;
    LadderResult im_ladder;
    bool im_skipped = false;
    BandSummary re_band;
    BandSummary im_band;
    bool collapsed = false;  // both bands narrow and stable
    bool wide = false;       // some band stably wider than eps_div
    Complex alpha;           // midpoints of the final bands
};

enum class ACStatus { AlmostConvergent, Divergent, Inconclusive };

struct ACVerdict {
    ACStatus status = ACStatus::Inconclusive;
    Complex alpha;       // meaningful when AlmostConvergent
    std::string reason;  // names the blocking condition when Inconclusive
    BandSummary band_re; // widest per-component band across kernels
    BandSummary band_im;
    std::vector<KernelReport> kernels;
    LadderConfig config;
};

// Runs sup_inf_over_translates at r = r0 * rho^k for k = 0..K.  Rungs run
// concurrently and are joined in order.  Requires r0 > 0, rho > 1, K >= 3.
// Horizon and precondition failures propagate; any other failure stops the
// ladder and is recorded on the partial result.
LadderResult band_ladder(const Kernel& kernel, const BoundedSignal& signal,
                         double r0, double rho, int K,
                         const HorizonPolicy& horizon, double tol);

// Extremes of the last three rungs; stable iff those rungs' F_bar and
// F_under are pairwise within eps_conv.  Requires at least three rungs.
FuEstimate estimate_Fu(const LadderResult& ladder, double eps_conv);

// Deterministic join of per-kernel evidence into a verdict.  Exposed
// separately so the decision table can be exercised on synthetic reports.
ACVerdict assemble_verdict(std::vector<KernelReport> reports,
                           const LadderConfig& config);

// Full pipeline: optional admissibility pre-check (throws
// InadmissibleKernel), per-kernel ladders on the real and imaginary parts
// (concurrently), then assemble_verdict.  AlmostConvergent requires every
// kernel's bands to collapse onto one alpha within eps_agree; a stable wide
// band on any kernel gives Divergent; anything else is Inconclusive with
// the blocking condition named, including the cross-kernel disagreement
// case, which is a numerical artifact rather than a mathematical option.
ACVerdict ac_verdict(const BoundedSignal& signal,
                     const std::vector<Kernel>& kernels,
                     const LadderConfig& config);

}  // namespace almostconv
