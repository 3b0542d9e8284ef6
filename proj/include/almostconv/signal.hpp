#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "almostconv/errors.hpp"

namespace almostconv {

using Complex = std::complex<double>;

// Half-open interval [lo, hi).
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Block layout for indicator signals: either an explicit disjoint list of
// intervals, or a geometric generator producing [base^k, ratio*base^k) for
// k >= 0 (1 < ratio < base keeps consecutive blocks disjoint), optionally
// mirrored through the origin.  Membership and range queries cost O(log|t|)
// for the generator, so windows of width 1e12 are still cheap.
class BlockSpec {
  public:
    static BlockSpec explicit_intervals(std::vector<Interval> intervals);
    static BlockSpec geometric(double base, double ratio, bool mirrored = false);

    bool contains(double t) const;
    // Every block intersecting [lo, hi], in increasing order, unclipped.
    std::vector<Interval> blocks_in_range(double lo, double hi) const;

    bool generated() const { return generated_; }
    double base() const { return base_; }
    double ratio() const { return ratio_; }
    bool mirrored() const { return mirrored_; }
    const std::vector<Interval>& intervals() const { return intervals_; }

  private:
    BlockSpec() = default;
    bool generated_ = false;
    double base_ = 0.0;
    double ratio_ = 0.0;
    bool mirrored_ = false;
    std::vector<Interval> intervals_;
};

struct SignalExpr;
using ExprPtr = std::shared_ptr<const SignalExpr>;

struct ConstNode {
    Complex value;
};
// amplitude * sin(omega t + phase) or amplitude * cos(omega t + phase).
struct SinusoidNode {
    double amplitude;
    double omega;
    double phase;
    bool is_sin;
};
// e^{i(omega t + phase)}.
struct ComplexExpNode {
    double omega;
    double phase;
};
struct BlockNode {
    BlockSpec spec;
};
// pieces[i] is active on [breaks[i-1], breaks[i]); pieces.front() on
// (-inf, breaks[0]), pieces.back() on [breaks.back(), inf).
struct PiecewiseNode {
    std::vector<double> breaks;
    std::vector<ExprPtr> pieces;
};
struct SumNode {
    std::vector<ExprPtr> terms;
};
struct ProductNode {
    std::vector<ExprPtr> factors;
};
struct ScaleNode {
    Complex factor;
    ExprPtr inner;
};
// Translate: value(t) = inner(t + offset).
struct ShiftNode {
    double offset;
    ExprPtr inner;
};
// Boundary trace of a right-half-plane Moebius map: t -> it / (pole + it),
// Re pole > 0.  Sup over the line is |pole| / Re pole.
struct RationalTraceNode {
    Complex pole;
};
// Uniformly sampled values at t0 + k*step, linearly interpolated between
// samples and continued by the edge values outside.
struct SamplesNode {
    double t0;
    double step;
    std::vector<Complex> values;
    std::string origin;  // file path when loaded from CSV; may be empty
};

struct SignalExpr {
    std::variant<ConstNode, SinusoidNode, ComplexExpNode, BlockNode,
                 PiecewiseNode, SumNode, ProductNode, ScaleNode, ShiftNode,
                 RationalTraceNode, SamplesNode>
        node;
};

ExprPtr make_expr(SignalExpr e);
ExprPtr make_const(Complex v);
ExprPtr make_sinusoid(double amplitude, double omega, double phase, bool is_sin);
ExprPtr make_complex_exp(double omega, double phase = 0.0);
ExprPtr make_block(BlockSpec spec);
ExprPtr make_piecewise(std::vector<double> breaks, std::vector<ExprPtr> pieces);
ExprPtr make_sum(std::vector<ExprPtr> terms);
ExprPtr make_product(std::vector<ExprPtr> factors);
ExprPtr make_scale(Complex factor, ExprPtr inner);
ExprPtr make_shift(double offset, ExprPtr inner);
ExprPtr make_rational_trace(Complex pole);
ExprPtr make_samples(double t0, double step, std::vector<Complex> values,
                     std::string origin = "");

// Loads `t,re[,im]` CSV with a uniform t column into a Samples node.
ExprPtr load_csv_signal(const std::string& path);

// Renders the expression in the surface syntax; parse(to_string(e)) evaluates
// identically to e.
std::string to_string(const SignalExpr& expr);

enum class StructureTag { Periodic, BlockStructured, Generic };

std::string to_string(StructureTag tag);

// Canonical analytic decomposition of a signal as a finite sum of
//   coeff * e^{i omega t} * (it)^m / prod_j (pole_j + it)^{mult_j}
// with Re pole_j > 0 and m <= sum mult_j.  This family is closed under sums,
// products, shifts and scalings of waves and Moebius traces, and every member
// has closed-form window integrals and Poisson/Gauss transforms, which is
// what makes dilation ladders up to r = 1e6 affordable.
struct RationalFactor {
    Complex pole;
    int mult = 1;
};
struct AnalyticTerm {
    Complex coeff;
    double omega = 0.0;
    int numerator_power = 0;
    std::vector<RationalFactor> poles;
};
struct AnalyticForm {
    std::vector<AnalyticTerm> terms;
};

// Partial-fraction form ready for integration: per term, the polynomial part
// collapses to a constant (bounded rationals only) plus sum_p coeffs[p-1] /
// (pole + it)^p per pole.
struct PolePF {
    Complex pole;
    std::vector<Complex> coeffs;
};
struct PreparedTerm {
    double omega = 0.0;
    Complex wave_coeff;
    std::vector<PolePF> poles;
};
struct PreparedForm {
    std::vector<PreparedTerm> terms;
    double coeff_abs_sum = 0.0;
    bool pure_wave = true;
};

std::optional<AnalyticForm> analytic_form(const SignalExpr& expr);
PreparedForm prepare(const AnalyticForm& form);

// Exact integral of the prepared form over [a, b]; err_out receives a
// rounding-level error bound.
Complex analytic_window_integral(const PreparedForm& form, double a, double b,
                                 double* err_out);
Complex analytic_eval(const PreparedForm& form, double t);

// A signal together with its certificate and translation structure.
struct BoundedSignal {
    ExprPtr expr;
    double sup_bound = 0.0;
    StructureTag tag = StructureTag::Generic;
    double period = 0.0;  // meaningful when tag == Periodic
    std::shared_ptr<const PreparedForm> analytic;  // null when not available
};

// Computes the sup-norm certificate, structure tag and cached analytic form.
BoundedSignal analyze(ExprPtr expr);

// Parses the surface syntax (grammar in the README: literals, i, pi, + - * /,
// sin/cos/cis of affine arguments, sign, shift, blocks, interval, piecewise,
// mobius, samples, csv) and runs analyze on the result.  Throws SyntaxError
// with position/expected info, or UnboundedConstruct for well-formed text
// denoting something outside L^inf.
BoundedSignal parse_signal(const std::string& text);

Complex eval(const SignalExpr& expr, double t);
inline Complex eval(const BoundedSignal& s, double t) { return eval(*s.expr, t); }

struct IntegralEstimate {
    Complex value{0.0, 0.0};
    double err = 0.0;
    bool exact = false;           // closed form / exact overlap path
    bool budget_exceeded = false;
    long evaluations = 0;
};

// Integral of the signal over [a, b] within abs tolerance `tol` where
// possible.  Exact for analytic forms, block indicators, piecewise splits and
// sample trapezoids; adaptive quadrature otherwise.  When the quadrature
// budget runs out, the best value is returned with an honest err and
// budget_exceeded set; nothing is thrown.
IntegralEstimate window_integral(const BoundedSignal& signal, double a, double b,
                                 double tol, long max_evaluations = 2'000'000);

// Block layouts reachable from the expression, with the cumulative shift
// applied on the way down: the indicator contributes at x in [lo - offset,
// hi - offset).  Used by scan policies to place probe windows.
struct PlacedBlocks {
    BlockSpec spec;
    double offset = 0.0;
};
std::vector<PlacedBlocks> collect_blocks(const SignalExpr& expr);

// Discontinuity locations within [lo, hi], sorted and deduplicated: block
// edges and piecewise breakpoints, with cumulative shifts applied.  Kinks
// (sample interpolation corners) are not jumps and are not reported.
// Quadratures split their panels here; an error estimate on a panel that
// straddles a jump can agree by accident and freeze a biased value.
std::vector<double> jump_points(const SignalExpr& expr, double lo, double hi);

}  // namespace almostconv
