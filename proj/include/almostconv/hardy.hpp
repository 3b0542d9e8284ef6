#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "almostconv/aclimit.hpp"
#include "almostconv/convolve.hpp"
#include "almostconv/kernel.hpp"
#include "almostconv/signal.hpp"

namespace almostconv {

// A bounded function on the right half plane Re z > 0, carried as its
// boundary trace on the imaginary axis plus, when it came from the
// closed-form whitelist, a direct evaluator and a sup bound certified on the
// whole half plane.
struct HalfPlaneFunction {
    std::string text;  // source text; empty for boundary-only data
    // Direct evaluator on Re z >= 0; null when only the boundary is known.
    std::function<Complex(Complex)> closed_form;
    // Trace y |-> f(iy) on the imaginary axis.
    BoundedSignal boundary;
    // Upper bound for |f| on the closed half plane.  Boundary-only data uses
    // the trace's sup certificate, which the harmonic extension cannot
    // exceed.
    double bound = 0.0;
    // True when the function was built from the whitelist, so boundedness
    // and holomorphy on Re z > 0 are certified rather than assumed.
    bool hinf_certified = false;
};

// Builds a HalfPlaneFunction from a closed-form expression in z.  The
// grammar accepts complex constants, exp(w) with w affine in z and real
// nonpositive z-coefficient, ratios of affine expressions whose denominator
// zero lies in the open left half plane (z/(1+z), 1/(2+z), ...), and sums,
// differences, negations, products and constant quotients of those pieces.
// Everything in the family is holomorphic and bounded on Re z > 0; the
// returned bound is certified but not necessarily tight.  Anything outside
// the family (a bare z, exp(z), poles touching the imaginary axis, unknown
// calls) throws SyntaxError.
HalfPlaneFunction parse_half_plane(const std::string& text);

// Wraps bounded boundary data as the trace of its harmonic extension.  No
// closed form and no holomorphy certificate.
HalfPlaneFunction extend_boundary(const BoundedSignal& boundary);

// Harmonic extension u(x + iy) of the boundary data: the Poisson average of
// the trace at dilation x, centered at y.  Requires x > 0.
Complex poisson_extend(const BoundedSignal& boundary, double x, double y,
                       double tol);

// Range of the extension over one vertical line Re z = x, split into real
// and imaginary parts.
struct InteriorRung {
    double x = 0.0;
    SupInfEstimate re;
    SupInfEstimate im;
};

// Scans sup and inf of the extension over the lines Re z = x for each x in
// x_ladder (positive, strictly increasing).  The y-scan follows the
// boundary signal's translation structure exactly as the dilation ladders
// do; Generic boundaries need an explicit horizon.
std::vector<InteriorRung> interior_band(const HalfPlaneFunction& f,
                                        const std::vector<double>& x_ladder,
                                        const HorizonPolicy& y_horizon,
                                        double tol);

// Compares the trace's window averages (box ladder) against the interior
// values far from the boundary (Poisson ladder).  For bounded boundary data
// the two limits exist together and coincide, so a decisive mismatch means
// one of the two evaluation paths is defective, not that the function is
// interesting.
struct EquivalenceReport {
    ACVerdict boundary;  // box-kernel verdict on the trace
    ACVerdict interior;  // Poisson-kernel verdict (extension as Re z grows)
    bool agree = false;
    // Both sides decisive yet status or limit differs.
    bool implementation_fault = false;
    std::string note;
};
EquivalenceReport boundary_vs_interior(const HalfPlaneFunction& f,
                                       const LadderConfig& config);

// Limits multiply along certified half-plane functions: when phi and psi
// are both H^inf and their traces almost converge to alpha and beta, the
// product trace almost converges to alpha * beta.  For mere L^inf boundary
// data the implication fails (e^{iy} and e^{-iy} both average to zero while
// their product is constant 1).  The report records which situation
// occurred; factors whose traces do not almost converge are rejected with
// PreconditionUnmet.
struct ProductCheck {
    Complex alpha{0.0, 0.0};
    Complex beta{0.0, 0.0};
    ACStatus product_status = ACStatus::Inconclusive;
    Complex product_alpha{0.0, 0.0};  // meaningful when the product converges
    bool hinf_inputs = false;     // both factors carried H^inf certificates
    bool multiplicative = false;  // product limit matched alpha * beta
    // Failure without certificates on both factors: the hypothesis, not the
    // computation, is to blame.
    bool hypothesis_violation = false;
    // Failure despite certified factors; indicates a defect.
    bool fault = false;
    std::string note;
};
ProductCheck multiplicativity_check(const HalfPlaneFunction& phi,
                                    const HalfPlaneFunction& psi,
                                    const LadderConfig& config);

// A sample path z_n = x_n + i y_n receding into the half plane
// (x strictly increasing).
struct SamplePath {
    std::vector<double> x;
    std::vector<double> y;
};

// Values of the function along the path, grouped by single-linkage
// clustering at radius eps: a value joins a cluster when it sits within eps
// of any member, and clusters touching through a new value merge.  Each
// cluster mean is a subsequential limit of the extension, so two or more
// surviving clusters certify that the plain limit along the path fails.
struct ClusterReport {
    std::vector<Complex> values;
    std::vector<std::size_t> cluster_of;  // values[i] -> index into clusters
    std::vector<Complex> clusters;        // member means, in discovery order
    std::string annotation;
};
ClusterReport cluster_sample(const HalfPlaneFunction& f, const SamplePath& path,
                             double eps, double tol);

}  // namespace almostconv
