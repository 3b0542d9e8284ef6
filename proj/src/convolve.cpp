#include "almostconv/convolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "almostconv/errors.hpp"
#include "almostconv/quadrature.hpp"

namespace almostconv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Complex cis(double th) { return std::polar(1.0, th); }

// ---------------------------------------------------------------------------
// Piecewise-constant decomposition.  phi = sum coeff * 1_{[a,b)} (ends may be
// infinite) makes the convolution a CDF overlap sum:
//   (f_r * 1_{[a,b)})(x) = CDF_r(x - a) - CDF_r(x - b),
// which is exact for every kernel kind, including half-infinite pieces.
// Geometric block families contribute infinitely many intervals; those are
// enumerated per evaluation point inside |t - x| <= M with the dropped mass
// bounded by the kernel tail.

struct PCFixed {
    Complex coeff;
    double a = 0.0;
    double b = 0.0;
};
struct PCGenerated {
    BlockSpec spec;
    double offset = 0.0;
    Complex coeff;
    double trunc = 0.0;  // filled in once r and tol are known
};
struct PCPieces {
    std::vector<PCFixed> fixed;
    std::vector<PCGenerated> generated;
};

bool pc_collect(const SignalExpr& e, Complex scale, double shift,
                PCPieces& out);

struct PCVisitor {
    Complex scale;
    double shift;
    PCPieces& out;

    bool operator()(const ConstNode& n) const {
        if (n.value != Complex(0.0, 0.0)) {
            out.fixed.push_back({scale * n.value, -kInf, kInf});
        }
        return true;
    }
    bool operator()(const BlockNode& n) const {
        if (n.spec.generated()) {
            out.generated.push_back({n.spec, shift, scale, 0.0});
            return true;
        }
        for (const Interval& iv : n.spec.intervals()) {
            out.fixed.push_back({scale, iv.lo - shift, iv.hi - shift});
        }
        return true;
    }
    bool operator()(const PiecewiseNode& n) const {
        std::vector<Complex> vals;
        vals.reserve(n.pieces.size());
        for (const auto& p : n.pieces) {
            const auto* c = std::get_if<ConstNode>(&p->node);
            if (!c) return false;
            vals.push_back(c->value);
        }
        double lo = -kInf;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double hi =
                i < n.breaks.size() ? n.breaks[i] - shift : kInf;
            if (vals[i] != Complex(0.0, 0.0)) {
                out.fixed.push_back({scale * vals[i], lo, hi});
            }
            lo = hi;
        }
        return true;
    }
    bool operator()(const SumNode& n) const {
        for (const auto& t : n.terms) {
            if (!pc_collect(*t, scale, shift, out)) return false;
        }
        return true;
    }
    bool operator()(const ScaleNode& n) const {
        return pc_collect(*n.inner, scale * n.factor, shift, out);
    }
    bool operator()(const ShiftNode& n) const {
        return pc_collect(*n.inner, scale, shift + n.offset, out);
    }
    template <typename T>
    bool operator()(const T&) const {
        return false;
    }
};

bool pc_collect(const SignalExpr& e, Complex scale, double shift,
                PCPieces& out) {
    return std::visit(PCVisitor{scale, shift, out}, e.node);
}

// ---------------------------------------------------------------------------
// Evaluation plan: the signal is split along its top-level linear structure;
// each summand becomes one of three leaf kinds.  Plans are built once per
// (kernel, signal, tol) and reused across a whole sup/inf grid.

struct ClosedLeaf {
    std::shared_ptr<const PreparedForm> form;
    // fourier(r * omega) per term; only meaningful for pole-free terms.
    std::vector<Complex> wave_factor;
    double err = 0.0;
};
struct QuadLeaf {
    ExprPtr expr;
    double sup = 0.0;
    double trunc = 0.0;
    double tail_err = 0.0;
};
struct Leaf {
    std::optional<ClosedLeaf> closed;
    std::optional<PCPieces> pc;
    double pc_tail_err = 0.0;
    std::optional<QuadLeaf> quad;
};
struct ConvPlan {
    std::vector<Leaf> leaves;
    double tol_leaf = 0.0;
    double truncation = 0.0;
    bool any_quad = false;
};

// Terms the long-tailed kernels can transform in closed form.  Pole-free
// waves work for every kernel via the Fourier factor.  Poisson additionally
// handles rational terms with omega <= 0: those are bounded and analytic in
// the lower half plane (all poles sit at i * pole_j with positive imaginary
// part), so the convolution is the harmonic extension g(x - ir).
bool closed_route_ok(KernelKind kind, const PreparedForm& f) {
    for (const PreparedTerm& t : f.terms) {
        if (t.poles.empty()) continue;
        if (kind == KernelKind::Poisson && t.omega <= 0.0) continue;
        return false;
    }
    return true;
}

ExprPtr materialize(Complex scale, double shift, ExprPtr e) {
    if (shift != 0.0) e = make_shift(shift, e);
    if (scale != Complex(1.0, 0.0)) e = make_scale(scale, e);
    return e;
}

void split_linear(const ExprPtr& e, Complex scale, double shift,
                  std::vector<ExprPtr>& out) {
    if (const auto* s = std::get_if<SumNode>(&e->node)) {
        for (const auto& t : s->terms) split_linear(t, scale, shift, out);
        return;
    }
    if (const auto* sc = std::get_if<ScaleNode>(&e->node)) {
        split_linear(sc->inner, scale * sc->factor, shift, out);
        return;
    }
    if (const auto* sh = std::get_if<ShiftNode>(&e->node)) {
        split_linear(sh->inner, scale, shift + sh->offset, out);
        return;
    }
    out.push_back(materialize(scale, shift, e));
}

// Smallest M (by doubling from r) with bound * tail_r(M) <= budget.
double tail_cutoff(const DilatedKernel& dk, double bound, double budget) {
    if (std::isfinite(dk.support_radius())) return dk.support_radius();
    double M = dk.r;
    while (bound * dk.tail_mass(M) > budget && M < 1e290) M *= 2.0;
    return M;
}

ConvPlan build_plan(const DilatedKernel& dk, const BoundedSignal& signal,
                    double tol) {
    ConvPlan plan;
    std::vector<ExprPtr> subs;
    split_linear(signal.expr, Complex(1.0, 0.0), 0.0, subs);
    plan.tol_leaf = tol / static_cast<double>(subs.size());
    const KernelKind kind = dk.base.kind();

    for (const ExprPtr& sub : subs) {
        Leaf leaf;
        if (auto af = analytic_form(*sub)) {
            PreparedForm pf = prepare(*af);
            if (closed_route_ok(kind, pf)) {
                ClosedLeaf cl;
                cl.form = std::make_shared<const PreparedForm>(std::move(pf));
                cl.err = 1e-14 * (1.0 + cl.form->coeff_abs_sum);
                for (const PreparedTerm& t : cl.form->terms) {
                    if (t.poles.empty()) {
                        cl.wave_factor.push_back(dk.fourier(t.omega));
                        if (kind == KernelKind::Custom) {
                            cl.err += 1e-12 * std::abs(t.wave_coeff);
                        }
                    } else {
                        cl.wave_factor.push_back(Complex(0.0, 0.0));
                    }
                }
                leaf.closed = std::move(cl);
                plan.leaves.push_back(std::move(leaf));
                continue;
            }
        }
        PCPieces pieces;
        if (pc_collect(*sub, Complex(1.0, 0.0), 0.0, pieces)) {
            const std::size_t ngen = pieces.generated.size();
            for (PCGenerated& g : pieces.generated) {
                g.trunc = tail_cutoff(dk, std::abs(g.coeff),
                                      0.5 * plan.tol_leaf /
                                          static_cast<double>(ngen));
                leaf.pc_tail_err += std::abs(g.coeff) * dk.tail_mass(g.trunc);
                plan.truncation = std::max(plan.truncation, g.trunc);
            }
            leaf.pc = std::move(pieces);
            plan.leaves.push_back(std::move(leaf));
            continue;
        }
        QuadLeaf ql;
        ql.expr = sub;
        ql.sup = analyze(sub).sup_bound;
        if (ql.sup > 0.0) {
            ql.trunc = tail_cutoff(dk, ql.sup, 0.5 * plan.tol_leaf);
            ql.tail_err = ql.sup * dk.tail_mass(ql.trunc);
            plan.truncation = std::max(plan.truncation, ql.trunc);
            plan.any_quad = true;
        }
        leaf.quad = std::move(ql);
        plan.leaves.push_back(std::move(leaf));
    }
    return plan;
}

void eval_closed(const ClosedLeaf& L, const DilatedKernel& dk, double x,
                 ConvolutionEstimate& acc) {
    const double r = dk.r;
    Complex v(0.0, 0.0);
    const auto& terms = L.form->terms;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const PreparedTerm& t = terms[i];
        if (t.poles.empty()) {
            v += t.wave_coeff * cis(t.omega * x) * L.wave_factor[i];
            continue;
        }
        // omega <= 0 here; e^{i omega (x - ir)} = e^{omega r} cis(omega x)
        // stays bounded.
        const Complex efac = std::exp(Complex(t.omega * r, t.omega * x));
        Complex rat = t.wave_coeff;
        const Complex iz(r, x);  // i * (x - i r)
        for (const PolePF& pf : t.poles) {
            const Complex inv = 1.0 / (pf.pole + iz);
            Complex pw(1.0, 0.0);
            for (const Complex& c : pf.coeffs) {
                pw *= inv;
                rat += c * pw;
            }
        }
        v += efac * rat;
    }
    acc.value += v;
    acc.err += L.err;
}

void eval_pc(const PCPieces& P, double tail_err, const DilatedKernel& dk,
             double x, ConvolutionEstimate& acc) {
    Complex v(0.0, 0.0);
    double coeff_sum = 0.0;
    long pieces = 0;
    for (const PCFixed& f : P.fixed) {
        const double up = f.a == -kInf ? 1.0 : dk.cdf(x - f.a);
        const double dn = f.b == kInf ? 0.0 : dk.cdf(x - f.b);
        v += f.coeff * (up - dn);
        coeff_sum += std::abs(f.coeff);
        ++pieces;
    }
    for (const PCGenerated& g : P.generated) {
        const double M = g.trunc;
        for (const Interval& blk :
             g.spec.blocks_in_range(x - M + g.offset, x + M + g.offset)) {
            v += g.coeff * (dk.cdf(x - (blk.lo - g.offset)) -
                            dk.cdf(x - (blk.hi - g.offset)));
            ++pieces;
        }
        coeff_sum += std::abs(g.coeff);
    }
    acc.value += v;
    const double cdf_err =
        dk.base.kind() == KernelKind::Custom ? 2.5e-12 : 1e-16;
    acc.err += tail_err + cdf_err * static_cast<double>(pieces + 1) *
                              (1.0 + coeff_sum);
}

// Chunk boundaries for the truncated integral.  A single span [-M, M] hides
// narrow features from the first quadrature panels when M is many orders of
// magnitude wider than they are, so the tails are cut into doubling pieces
// and extra splits bracket x itself (signal features sit near t = x - s).
std::vector<double> quad_breaks(double r, double M, double x) {
    std::vector<double> pts{-M, M};
    auto push = [&](double p) {
        if (p > -M && p < M) pts.push_back(p);
    };
    push(-8.0 * r);
    push(8.0 * r);
    push(x - 8.0 * r);
    push(x + 8.0 * r);
    for (double e = 16.0 * r; e < M; e *= 2.0) {
        push(e);
        push(-e);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

void eval_quad(const QuadLeaf& L, const DilatedKernel& dk, double x,
               double tol_leaf, ConvolutionEstimate& acc) {
    if (L.sup == 0.0) return;
    const std::vector<double> pts = quad_breaks(dk.r, L.trunc, x);
    const double n_chunks = static_cast<double>(pts.size() - 1);
    const double tol_chunk = 0.5 * tol_leaf / n_chunks;
    const long budget =
        std::max<long>(30'000, static_cast<long>(600'000 / n_chunks));
    acc.err += L.tail_err;
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
        if (!(pts[j] < pts[j + 1])) continue;
        QuadResult q = integrate(
            [&dk, &L, x](double t) {
                return dk.density(t) * eval(*L.expr, x - t);
            },
            pts[j], pts[j + 1], tol_chunk, budget);
        acc.value += q.value;
        acc.err += q.err;
        acc.evaluations += q.evaluations;
        if (!q.converged) acc.budget_exceeded = true;
    }
}

ConvolutionEstimate eval_plan(const ConvPlan& plan, const DilatedKernel& dk,
                              double x) {
    ConvolutionEstimate out;
    out.method = plan.any_quad ? ConvMethod::Quadrature : ConvMethod::ClosedForm;
    out.truncation = plan.truncation;
    for (const Leaf& leaf : plan.leaves) {
        if (leaf.closed) {
            eval_closed(*leaf.closed, dk, x, out);
        } else if (leaf.pc) {
            eval_pc(*leaf.pc, leaf.pc_tail_err, dk, x, out);
        } else if (leaf.quad) {
            eval_quad(*leaf.quad, dk, x, plan.tol_leaf, out);
        }
    }
    return out;
}

ConvolutionEstimate box_point(const DilatedKernel& dk,
                              const BoundedSignal& signal, double x,
                              double tol) {
    const double r = dk.r;
    const double a = x - r;
    const double b = x + r;
    ConvolutionEstimate out;
    if (!(b > a)) {
        // |x| is so large that the window endpoints round together.  Deep
        // probes only land at the centers of blocks or gaps at least 4r
        // long, where the exact window average equals the point value.
        out.value = eval(signal, x);
        out.method = ConvMethod::ExactOverlap;
        out.evaluations = 1;
        return out;
    }
    // Divide by the achieved window length: near the precision edge the
    // rounded endpoints can change the width by a few ulp(x), and the
    // average must stay consistent with the window actually integrated.
    const double len = b - a;
    IntegralEstimate w = window_integral(signal, a, b, tol * len);
    out.value = w.value / len;
    out.err = w.err / len;
    out.method = w.exact ? ConvMethod::ExactOverlap : ConvMethod::Quadrature;
    out.evaluations = w.evaluations;
    out.budget_exceeded = w.budget_exceeded;
    return out;
}

// ---------------------------------------------------------------------------
// Horizon planning for the sup/inf scan.

struct Segment {
    double lo = 0.0;
    double hi = 0.0;
    long cap = 2;
};

// Bounds on sup|phi| and on |phi'| away from jumps, composed bottom-up.
// The derivative bound decides how far out probe coordinates stay
// numerically meaningful: at position y the grid quantizes by ulp(y), which
// perturbs the smooth part of the signal by up to lip * ulp(y) without any
// quadrature error estimate noticing.
struct VariationBound {
    double sup = 0.0;
    double lip = 0.0;
};

VariationBound variation_bound(const SignalExpr& e) {
    return std::visit(
        [](const auto& n) -> VariationBound {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ConstNode>) {
                return {std::abs(n.value), 0.0};
            } else if constexpr (std::is_same_v<T, SinusoidNode>) {
                const double a = std::abs(n.amplitude);
                return {a, a * std::abs(n.omega)};
            } else if constexpr (std::is_same_v<T, ComplexExpNode>) {
                return {1.0, std::abs(n.omega)};
            } else if constexpr (std::is_same_v<T, BlockNode>) {
                return {1.0, 0.0};
            } else if constexpr (std::is_same_v<T, PiecewiseNode>) {
                VariationBound out;
                for (const auto& p : n.pieces) {
                    const VariationBound c = variation_bound(*p);
                    out.sup = std::max(out.sup, c.sup);
                    out.lip = std::max(out.lip, c.lip);
                }
                return out;
            } else if constexpr (std::is_same_v<T, SumNode>) {
                VariationBound out;
                for (const auto& t : n.terms) {
                    const VariationBound c = variation_bound(*t);
                    out.sup += c.sup;
                    out.lip += c.lip;
                }
                return out;
            } else if constexpr (std::is_same_v<T, ProductNode>) {
                std::vector<VariationBound> cs;
                cs.reserve(n.factors.size());
                for (const auto& f : n.factors) {
                    cs.push_back(variation_bound(*f));
                }
                VariationBound out{1.0, 0.0};
                for (const VariationBound& c : cs) out.sup *= c.sup;
                for (std::size_t i = 0; i < cs.size(); ++i) {
                    double rest = 1.0;
                    for (std::size_t j = 0; j < cs.size(); ++j) {
                        if (j != i) rest *= cs[j].sup;
                    }
                    out.lip += cs[i].lip * rest;
                }
                return out;
            } else if constexpr (std::is_same_v<T, ScaleNode>) {
                const VariationBound c = variation_bound(*n.inner);
                const double f = std::abs(n.factor);
                return {f * c.sup, f * c.lip};
            } else if constexpr (std::is_same_v<T, ShiftNode>) {
                return variation_bound(*n.inner);
            } else if constexpr (std::is_same_v<T, RationalTraceNode>) {
                // it/(p+it) = 1 - p/(p+it); |p+it| >= Re p > 0.
                const double re = n.pole.real();
                const double mag = std::abs(n.pole);
                return {1.0 + mag / re, mag / (re * re)};
            } else {
                static_assert(std::is_same_v<T, SamplesNode>);
                VariationBound out;
                for (const Complex& v : n.values) {
                    out.sup = std::max(out.sup, std::abs(v));
                }
                for (std::size_t i = 0; i + 1 < n.values.size(); ++i) {
                    out.lip = std::max(
                        out.lip,
                        std::abs(n.values[i + 1] - n.values[i]) / n.step);
                }
                return out;
            }
        },
        e.node);
}

void block_probe_segments(const BoundedSignal& signal,
                          const HorizonPolicy& policy, double r,
                          std::vector<Segment>& segs, bool& limited) {
    segs.push_back({-4.0 * r, 4.0 * r, policy.max_grid_points});
    // Probes beyond y_cap would sample the smooth part of the signal at
    // coordinates quantized more coarsely than the accuracy the slack
    // accounts for; those values would be noise dressed up as data, so the
    // scan refuses to place them.  Purely piecewise-constant signals
    // (lip = 0) keep the full scale range: their window integrals are
    // overlap arithmetic and stay exact at any scale.
    const double lip_sig = variation_bound(*signal.expr).lip;
    const double y_cap =
        lip_sig > 0.0
            ? 1e-4 * std::max(1.0, signal.sup_bound) /
                  (std::ldexp(1.0, -52) * lip_sig)
            : kInf;
    auto probe = [&](double center) {
        if (!(std::abs(center) + 2.0 * r <= y_cap)) return false;
        segs.push_back({center - 2.0 * r, center + 2.0 * r,
                        policy.probe_points});
        return true;
    };
    for (const PlacedBlocks& pb : collect_blocks(*signal.expr)) {
        const BlockSpec& sp = pb.spec;
        if (sp.generated()) {
            const double b = sp.base();
            const double c = sp.ratio();
            // Once one fitting plateau (or gap) has been probed, skipping
            // its larger repeats loses nothing: the convolution takes the
            // same plateau values there.  Rejecting every fitting scale
            // does lose coverage, and that gets flagged.
            bool fit_probed = false;
            bool fit_rejected = false;
            auto record = [&](bool ok) {
                (ok ? fit_probed : fit_rejected) = true;
            };
            double lo = 1.0;
            for (int k = 0; k <= policy.block_scale_cap; ++k) {
                const double hi = c * lo;
                const double nxt = b * lo;
                if (hi - lo >= 4.0 * r) {
                    record(probe(0.5 * (lo + hi) - pb.offset));
                    if (sp.mirrored()) {
                        record(probe(-0.5 * (lo + hi) - pb.offset));
                    }
                }
                if (nxt - hi >= 4.0 * r) {
                    record(probe(0.5 * (hi + nxt) - pb.offset));
                    if (sp.mirrored()) {
                        record(probe(-0.5 * (hi + nxt) - pb.offset));
                    }
                }
                if (lo > 1e290 / b) break;
                lo = nxt;
            }
            if (sp.mirrored() && 2.0 >= 4.0 * r) probe(-pb.offset);
            if (fit_rejected && !fit_probed) limited = true;
        } else if (!sp.intervals().empty()) {
            const auto& ivs = sp.intervals();
            bool all_ok = true;
            for (const Interval& iv : ivs) {
                all_ok &= probe(0.5 * (iv.lo + iv.hi) - pb.offset);
            }
            for (std::size_t i = 0; i + 1 < ivs.size(); ++i) {
                all_ok &= probe(0.5 * (ivs[i].hi + ivs[i + 1].lo) - pb.offset);
            }
            all_ok &= probe(ivs.front().lo - pb.offset - 4.0 * r);
            all_ok &= probe(ivs.back().hi - pb.offset + 4.0 * r);
            if (!all_ok) limited = true;
        }
    }
}

}  // namespace

ConvolutionEstimate convolve_at(const DilatedKernel& dk,
                                const BoundedSignal& signal, double x,
                                double tol) {
    if (!(tol > 0.0)) {
        throw PreconditionUnmet("convolve_at needs tol > 0");
    }
    if (dk.base.kind() == KernelKind::Box) {
        return box_point(dk, signal, x, tol);
    }
    const ConvPlan plan = build_plan(dk, signal, tol);
    return eval_plan(plan, dk, x);
}

SupInfEstimate sup_inf_over_translates(const DilatedKernel& dk,
                                       const BoundedSignal& signal,
                                       const HorizonPolicy& policy,
                                       double tol) {
    if (!(tol > 0.0)) {
        throw PreconditionUnmet("sup_inf_over_translates needs tol > 0");
    }
    const double r = dk.r;
    std::vector<Segment> segs;
    bool limited = false;

    if (policy.mode == HorizonPolicy::Mode::Explicit) {
        if (!(policy.H > 0.0)) {
            throw PreconditionUnmet("explicit horizon needs H > 0");
        }
        segs.push_back({-policy.H, policy.H, policy.max_grid_points});
        limited = !(signal.tag == StructureTag::Periodic &&
                    2.0 * policy.H >= signal.period);
    } else {
        switch (signal.tag) {
            case StructureTag::Periodic:
                segs.push_back({0.0, signal.period, policy.max_grid_points});
                break;
            case StructureTag::BlockStructured:
                block_probe_segments(signal, policy, r, segs, limited);
                break;
            case StructureTag::Generic:
                throw HorizonUnsupported(
                    "signal has no recognized translation structure; supply "
                    "an explicit horizon");
        }
    }

    std::optional<ConvPlan> plan;
    if (dk.base.kind() != KernelKind::Box) {
        plan = build_plan(dk, signal, tol);
    }
    auto point = [&](double x) {
        return plan ? eval_plan(*plan, dk, x)
                    : box_point(dk, signal, x, tol);
    };

    const double lip = dk.lipschitz() * signal.sup_bound;
    const double delta_target =
        std::min(lip > 0.0 ? tol / lip : kInf, r / 8.0);

    SupInfEstimate out;
    out.r = r;
    out.F_bar = -kInf;
    out.F_under = kInf;
    out.horizon_limited = limited;
    double max_err = 0.0;

    for (const Segment& seg : segs) {
        const double len = seg.hi - seg.lo;
        long n = 1;
        if (len > 0.0) {
            const double want = std::ceil(len / delta_target) + 1.0;
            n = want > static_cast<double>(seg.cap)
                    ? seg.cap
                    : std::max<long>(2, static_cast<long>(want));
        }
        const double d = n > 1 ? len / static_cast<double>(n - 1) : 0.0;
        out.delta = std::max(out.delta, d);
        for (long i = 0; i < n; ++i) {
            const double x = seg.lo + d * static_cast<double>(i);
            const ConvolutionEstimate c = point(x);
            out.F_bar = std::max(out.F_bar, c.value.real());
            out.F_under = std::min(out.F_under, c.value.real());
            max_err = std::max(max_err, c.err);
        }
        out.H = std::max({out.H, std::abs(seg.lo), std::abs(seg.hi)});
    }
    out.slack = max_err + 0.5 * lip * out.delta;
    return out;
}

}  // namespace almostconv
