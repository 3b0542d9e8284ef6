#include "almostconv/hardy.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include "almostconv/detail/surface.hpp"
#include "almostconv/errors.hpp"

namespace almostconv {
namespace {

using detail::SurfaceNode;

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string fmt_c(Complex v) {
    if (v.imag() == 0.0) return fmt_g(v.real());
    return fmt_g(v.real()) + (v.imag() < 0.0 ? " - " : " + ") +
           fmt_g(std::abs(v.imag())) + "i";
}

// One lowered whitelist piece: a direct evaluator valid on Re z >= 0, the
// induced trace on the imaginary axis, and a sup bound for the closed half
// plane.
struct Lowered {
    std::function<Complex(Complex)> eval;
    ExprPtr trace;
    double bound = 0.0;
};

[[noreturn]] void reject(const SurfaceNode& n, const std::string& why) {
    throw SyntaxError(why, n.pos);
}

Lowered lower_const(const SurfaceNode& n, Complex c) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
        reject(n, "constant subexpression is not finite");
    }
    return {[c](Complex) { return c; }, make_const(c), std::abs(c)};
}

Lowered lower(const SurfaceNode& n);

Lowered lower_exp(const SurfaceNode& n) {
    if (n.args.size() != 1 || n.args[0].is_string ||
        !n.args[0].keyword.empty()) {
        reject(n, "exp takes one positional argument");
    }
    auto aff = detail::as_affine(*n.args[0].value, "z");
    if (!aff) reject(n, "exp argument must be affine in z");
    const Complex a = aff->a;
    const Complex b = aff->b;
    if (a.imag() != 0.0 || a.real() > 0.0) {
        reject(n,
               "exp(w*z + c) is bounded on the half plane only for real "
               "w <= 0");
    }
    const double w = a.real();
    const Complex scale = std::exp(b);
    ExprPtr trace = (w == 0.0) ? make_const(scale)
                               : make_scale(scale, make_complex_exp(w));
    return {[a, b](Complex z) { return std::exp(a * z + b); },
            std::move(trace), std::abs(scale)};
}

// (p z + q) / (s z + w) with s != 0 and the denominator zero in the open
// left half plane.  Writing it as A + B / (z + c) with c = w / s gives the
// trace decomposition and the bound |A| + |B| / Re c; the pure z/(z + c)
// case keeps the sharp Moebius bound |c| / Re c instead.
Lowered lower_ratio(const SurfaceNode& n, const detail::Affine& num,
                    const detail::Affine& den) {
    const Complex p = num.a, q = num.b, s = den.a, w = den.b;
    const Complex c = w / s;
    if (!(c.real() > 0.0)) {
        reject(n,
               "the denominator zero must lie in the open left half plane");
    }
    const Complex A = p / s;
    const Complex B = (q - p * c) / s;
    ExprPtr trace;
    double bound = 0.0;
    if (q == Complex(0.0, 0.0) && p != Complex(0.0, 0.0)) {
        trace = make_scale(A, make_rational_trace(c));
        bound = std::abs(A) * std::abs(c) / c.real();
    } else {
        // 1 / (iy + c) = (1/c) (1 - iy / (c + iy)).
        trace = make_sum({make_const(A + B / c),
                          make_scale(-B / c, make_rational_trace(c))});
        bound = std::abs(A) + std::abs(B) / c.real();
    }
    return {[p, q, s, w](Complex z) { return (p * z + q) / (s * z + w); },
            std::move(trace), bound};
}

Lowered lower(const SurfaceNode& n) {
    if (auto c = detail::fold_constant(n)) return lower_const(n, *c);
    switch (n.kind) {
        case SurfaceNode::Num:
        case SurfaceNode::Imag:
            break;  // constant; already folded above
        case SurfaceNode::Var:
            if (n.name == "z") {
                reject(n,
                       "a bare z is unbounded on the half plane; wrap it in "
                       "a ratio like z/(1+z)");
            }
            reject(n, "unknown variable '" + n.name + "' (only z is bound)");
        case SurfaceNode::Neg: {
            Lowered inner = lower(*n.lhs);
            auto f = inner.eval;
            return {[f](Complex z) { return -f(z); },
                    make_scale(Complex(-1.0, 0.0), inner.trace), inner.bound};
        }
        case SurfaceNode::Add:
        case SurfaceNode::Sub: {
            const bool sub = n.kind == SurfaceNode::Sub;
            Lowered a = lower(*n.lhs);
            Lowered b = lower(*n.rhs);
            auto fa = a.eval;
            auto fb = b.eval;
            ExprPtr rhs_trace =
                sub ? make_scale(Complex(-1.0, 0.0), b.trace) : b.trace;
            return {[fa, fb, sub](Complex z) {
                        return sub ? fa(z) - fb(z) : fa(z) + fb(z);
                    },
                    make_sum({a.trace, std::move(rhs_trace)}),
                    a.bound + b.bound};
        }
        case SurfaceNode::Mul: {
            auto lc = detail::fold_constant(*n.lhs);
            auto rc = detail::fold_constant(*n.rhs);
            if (lc || rc) {
                const Complex c = lc ? *lc : *rc;
                if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
                    reject(n, "constant factor is not finite");
                }
                Lowered inner = lower(lc ? *n.rhs : *n.lhs);
                auto f = inner.eval;
                return {[c, f](Complex z) { return c * f(z); },
                        make_scale(c, inner.trace),
                        std::abs(c) * inner.bound};
            }
            Lowered a = lower(*n.lhs);
            Lowered b = lower(*n.rhs);
            auto fa = a.eval;
            auto fb = b.eval;
            return {[fa, fb](Complex z) { return fa(z) * fb(z); },
                    make_product({a.trace, b.trace}), a.bound * b.bound};
        }
        case SurfaceNode::Div: {
            if (auto dc = detail::fold_constant(*n.rhs)) {
                if (*dc == Complex(0.0, 0.0)) {
                    reject(*n.rhs, "division by zero");
                }
                const Complex c = 1.0 / *dc;
                Lowered inner = lower(*n.lhs);
                auto f = inner.eval;
                return {[c, f](Complex z) { return c * f(z); },
                        make_scale(c, inner.trace),
                        std::abs(c) * inner.bound};
            }
            auto num = detail::as_affine(*n.lhs, "z");
            auto den = detail::as_affine(*n.rhs, "z");
            if (!num && n.lhs->kind == SurfaceNode::Mul && den &&
                den->a != Complex(0.0, 0.0)) {
                // Left associativity folds f*z/(1+z) into (f*z)/(1+z);
                // peel the product back off so the ratio keeps its affine
                // numerator: (A*B)/D = A * (B/D).
                auto tail = detail::as_affine(*n.lhs->rhs, "z");
                if (tail) {
                    Lowered head = lower(*n.lhs->lhs);
                    Lowered ratio = lower_ratio(n, *tail, *den);
                    auto fh = head.eval;
                    auto fr = ratio.eval;
                    return {[fh, fr](Complex z) { return fh(z) * fr(z); },
                            make_product({head.trace, ratio.trace}),
                            head.bound * ratio.bound};
                }
            }
            if (!num || !den) {
                reject(n,
                       "quotients must have a constant denominator or be "
                       "ratios of expressions affine in z");
            }
            if (den->a == Complex(0.0, 0.0)) {
                // Affine in z with zero slope but not foldable (e.g. z - z
                // in the denominator); treat as the constant it is.
                if (den->b == Complex(0.0, 0.0)) {
                    reject(*n.rhs, "division by zero");
                }
                Lowered inner = lower(*n.lhs);
                const Complex c = 1.0 / den->b;
                auto f = inner.eval;
                return {[c, f](Complex z) { return c * f(z); },
                        make_scale(c, inner.trace),
                        std::abs(c) * inner.bound};
            }
            return lower_ratio(n, *num, *den);
        }
        case SurfaceNode::Call:
            if (n.name == "exp") return lower_exp(n);
            reject(n, "'" + n.name +
                          "' is not in the half-plane whitelist (exp, affine "
                          "ratios, constants and their algebra)");
    }
    reject(n, "unsupported construct in a half-plane expression");
}

}  // namespace

HalfPlaneFunction parse_half_plane(const std::string& text) {
    detail::SurfacePtr root = detail::parse_surface(text);
    Lowered low = lower(*root);
    HalfPlaneFunction f;
    f.text = text;
    f.closed_form = std::move(low.eval);
    f.boundary = analyze(low.trace);
    f.bound = low.bound;
    f.hinf_certified = true;
    return f;
}

HalfPlaneFunction extend_boundary(const BoundedSignal& boundary) {
    HalfPlaneFunction f;
    f.boundary = boundary;
    f.bound = boundary.sup_bound;
    f.hinf_certified = false;
    return f;
}

Complex poisson_extend(const BoundedSignal& boundary, double x, double y,
                       double tol) {
    if (!(x > 0.0)) {
        throw PreconditionUnmet(
            "harmonic extension lives on Re z > 0; got x = " + fmt_g(x));
    }
    if (!(tol > 0.0)) {
        throw PreconditionUnmet("poisson_extend needs tol > 0");
    }
    return convolve_at(dilate(Kernel::poisson(), x), boundary, y, tol).value;
}

std::vector<InteriorRung> interior_band(const HalfPlaneFunction& f,
                                        const std::vector<double>& x_ladder,
                                        const HorizonPolicy& y_horizon,
                                        double tol) {
    if (x_ladder.empty()) {
        throw PreconditionUnmet("interior_band needs at least one abscissa");
    }
    double prev = 0.0;
    for (double x : x_ladder) {
        if (!(x > prev)) {
            throw PreconditionUnmet(
                "interior_band abscissas must be positive and strictly "
                "increasing");
        }
        prev = x;
    }
    if (!(tol > 0.0)) {
        throw PreconditionUnmet("interior_band needs tol > 0");
    }
    const Kernel poisson = Kernel::poisson();
    const BoundedSignal re_sig = f.boundary;
    const BoundedSignal im_sig =
        analyze(make_scale(Complex(0.0, -1.0), f.boundary.expr));
    std::vector<std::future<InteriorRung>> jobs;
    jobs.reserve(x_ladder.size());
    for (double x : x_ladder) {
        jobs.push_back(std::async(
            std::launch::async, [&poisson, re_sig, im_sig, x, &y_horizon,
                                 tol]() {
                InteriorRung rung;
                rung.x = x;
                rung.re = sup_inf_over_translates(dilate(poisson, x), re_sig,
                                                  y_horizon, tol);
                rung.im = sup_inf_over_translates(dilate(poisson, x), im_sig,
                                                  y_horizon, tol);
                return rung;
            }));
    }
    std::vector<InteriorRung> out;
    out.reserve(jobs.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

EquivalenceReport boundary_vs_interior(const HalfPlaneFunction& f,
                                       const LadderConfig& config) {
    EquivalenceReport rep;
    auto boundary_job = std::async(std::launch::async, [&f, &config]() {
        return ac_verdict(f.boundary, {Kernel::box()}, config);
    });
    rep.interior = ac_verdict(f.boundary, {Kernel::poisson()}, config);
    rep.boundary = boundary_job.get();

    const bool b_decisive = rep.boundary.status != ACStatus::Inconclusive;
    const bool i_decisive = rep.interior.status != ACStatus::Inconclusive;
    if (rep.boundary.status == ACStatus::AlmostConvergent &&
        rep.interior.status == ACStatus::AlmostConvergent) {
        const double diff = std::abs(rep.boundary.alpha - rep.interior.alpha);
        rep.agree = diff <= config.eps_agree;
        rep.note = rep.agree
                       ? "trace averages and interior values share the limit " +
                             fmt_c(rep.boundary.alpha)
                       : "limits differ by " + fmt_g(diff);
    } else if (b_decisive && i_decisive) {
        rep.agree = rep.boundary.status == rep.interior.status;
        rep.note = rep.agree ? "both sides diverge"
                             : "status mismatch between trace averages and "
                               "interior values";
    } else {
        rep.agree = false;
        rep.note = "at least one side is inconclusive";
    }
    rep.implementation_fault = !rep.agree && b_decisive && i_decisive;
    return rep;
}

ProductCheck multiplicativity_check(const HalfPlaneFunction& phi,
                                    const HalfPlaneFunction& psi,
                                    const LadderConfig& config) {
    const std::vector<Kernel> box = {Kernel::box()};
    auto job_a = std::async(std::launch::async, [&phi, &box, &config]() {
        return ac_verdict(phi.boundary, box, config);
    });
    auto job_b = std::async(std::launch::async, [&psi, &box, &config]() {
        return ac_verdict(psi.boundary, box, config);
    });
    const ACVerdict va = job_a.get();
    const ACVerdict vb = job_b.get();
    if (va.status != ACStatus::AlmostConvergent ||
        vb.status != ACStatus::AlmostConvergent) {
        throw PreconditionUnmet(
            "multiplicativity check needs factor traces that almost "
            "converge");
    }

    const BoundedSignal product =
        analyze(make_product({phi.boundary.expr, psi.boundary.expr}));
    const ACVerdict vp = ac_verdict(product, box, config);

    ProductCheck out;
    out.alpha = va.alpha;
    out.beta = vb.alpha;
    out.product_status = vp.status;
    out.product_alpha = vp.alpha;
    out.hinf_inputs = phi.hinf_certified && psi.hinf_certified;
    out.multiplicative =
        vp.status == ACStatus::AlmostConvergent &&
        std::abs(vp.alpha - va.alpha * vb.alpha) <= config.eps_agree;
    out.hypothesis_violation = !out.multiplicative && !out.hinf_inputs;
    out.fault = !out.multiplicative && out.hinf_inputs;
    if (out.multiplicative) {
        out.note = "product limit " + fmt_c(vp.alpha) +
                   " matches the product of the factor limits";
    } else if (out.hypothesis_violation) {
        out.note =
            "product limit " +
            (vp.status == ACStatus::AlmostConvergent ? fmt_c(vp.alpha)
                                                     : std::string("(none)")) +
            " deviates from " + fmt_c(va.alpha * vb.alpha) +
            "; at least one factor lacks an H^inf certificate, so no "
            "contradiction arises";
    } else {
        out.note = "certified factors failed to multiply; this indicates a "
                   "defect in the ladder evaluation";
    }
    return out;
}

ClusterReport cluster_sample(const HalfPlaneFunction& f, const SamplePath& path,
                             double eps, double tol) {
    if (path.x.empty() || path.x.size() != path.y.size()) {
        throw PreconditionUnmet(
            "cluster_sample needs matching nonempty coordinate lists");
    }
    for (std::size_t i = 0; i < path.x.size(); ++i) {
        if (!(path.x[i] > (i == 0 ? 0.0 : path.x[i - 1]))) {
            throw PreconditionUnmet(
                "cluster_sample abscissas must be positive and strictly "
                "increasing");
        }
    }
    if (!(eps > 0.0) || !(tol > 0.0)) {
        throw PreconditionUnmet("cluster_sample needs eps > 0 and tol > 0");
    }

    ClusterReport rep;
    rep.values.reserve(path.x.size());
    for (std::size_t i = 0; i < path.x.size(); ++i) {
        const Complex z(path.x[i], path.y[i]);
        rep.values.push_back(f.closed_form
                                 ? f.closed_form(z)
                                 : poisson_extend(f.boundary, path.x[i],
                                                  path.y[i], tol));
    }

    // Single linkage at radius eps; clusters touched by a new value merge
    // into the earliest of them, so cluster order is discovery order.
    std::vector<std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < rep.values.size(); ++i) {
        std::vector<std::size_t> touching;
        for (std::size_t cidx = 0; cidx < members.size(); ++cidx) {
            for (std::size_t m : members[cidx]) {
                if (std::abs(rep.values[i] - rep.values[m]) <= eps) {
                    touching.push_back(cidx);
                    break;
                }
            }
        }
        if (touching.empty()) {
            members.push_back({i});
            continue;
        }
        const std::size_t home = touching.front();
        members[home].push_back(i);
        for (std::size_t k = touching.size(); k-- > 1;) {
            const std::size_t c = touching[k];
            members[home].insert(members[home].end(), members[c].begin(),
                                 members[c].end());
            members.erase(members.begin() + static_cast<std::ptrdiff_t>(c));
        }
    }

    rep.cluster_of.assign(rep.values.size(), 0);
    rep.clusters.reserve(members.size());
    for (std::size_t cidx = 0; cidx < members.size(); ++cidx) {
        Complex sum{0.0, 0.0};
        for (std::size_t m : members[cidx]) {
            sum += rep.values[m];
            rep.cluster_of[m] = cidx;
        }
        rep.clusters.push_back(sum / static_cast<double>(members[cidx].size()));
    }
    rep.annotation =
        (rep.clusters.size() == 1
             ? std::string("all samples fall in one cluster")
             : std::to_string(rep.clusters.size()) +
                   " clusters survive, so the limit along the path fails") +
        "; each cluster mean is a subsequential limit, attained by some "
        "Banach limit that this report does not construct";
    return rep;
}

}  // namespace almostconv
