#include "almostconv/tauber.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <future>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "almostconv/convolve.hpp"
#include "almostconv/errors.hpp"
#include "almostconv/quadrature.hpp"

namespace almostconv {
namespace {

// Pointwise ladders stop shrinking here; window averages below this scale
// add nothing but rounding noise at double precision.
constexpr double kSmallRFloor = 1e-6;

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

PointLadder point_ladder(const Kernel& kernel, const BoundedSignal& signal,
                         double x, GammaLimit gamma,
                         const LadderConfig& config) {
    if (!(config.r0 > 0.0) || !(config.rho > 1.0) || config.K < 0) {
        throw PreconditionUnmet(
            "pointwise ladder needs r0 > 0, rho > 1 and K >= 0");
    }
    if (!(config.tol > 0.0) || !(config.eps_conv > 0.0)) {
        throw PreconditionUnmet(
            "pointwise ladder needs positive tol and eps_conv");
    }
    PointLadder out;
    for (int k = 0; k <= config.K; ++k) {
        const double r = gamma == GammaLimit::Infinity
                             ? config.r0 * std::pow(config.rho, k)
                             : config.r0 * std::pow(config.rho, -k);
        if (gamma == GammaLimit::ZeroPlus &&
            r < kSmallRFloor * (1.0 - 1e-12)) {
            break;
        }
        out.rungs.push_back(r);
    }
    std::vector<std::future<Complex>> jobs;
    jobs.reserve(out.rungs.size());
    for (double r : out.rungs) {
        jobs.push_back(std::async(
            std::launch::async, [kernel, signal, x, r, tol = config.tol]() {
                return convolve_at(dilate(kernel, r), signal, x, tol).value;
            }));
    }
    out.values.reserve(jobs.size());
    for (auto& j : jobs) out.values.push_back(j.get());
    out.limit = out.values.empty() ? Complex{0.0, 0.0} : out.values.back();
    if (out.values.size() >= 3) {
        const std::size_t n = out.values.size();
        double worst = 0.0;
        for (std::size_t i = n - 3; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                worst = std::max(worst,
                                 std::abs(out.values[i] - out.values[j]));
            }
        }
        out.stable = worst <= config.eps_conv;
    }
    return out;
}

constexpr double kPi = 3.14159265358979323846;

// Linear piece of a signal: factor * inner(t + shift).  Sums, scalings and
// shifts commute with averaging, so each piece can pick the folding route
// that suits its own structure.
struct LinearLeaf {
    Complex factor;
    double shift;
    ExprPtr expr;
};

void split_linear_leaves(const ExprPtr& e, Complex factor, double shift,
                         std::vector<LinearLeaf>& out) {
    if (const auto* s = std::get_if<SumNode>(&e->node)) {
        for (const ExprPtr& term : s->terms) {
            split_linear_leaves(term, factor, shift, out);
        }
        return;
    }
    if (const auto* s = std::get_if<ScaleNode>(&e->node)) {
        split_linear_leaves(s->inner, factor * s->factor, shift, out);
        return;
    }
    if (const auto* s = std::get_if<ShiftNode>(&e->node)) {
        split_linear_leaves(s->inner, factor, shift + s->offset, out);
        return;
    }
    out.push_back({factor, shift, e});
}

// Adaptive quadrature over u = log t in fixed-width chunks.  The width keeps
// multiplicative-scale features (the kernel bump near u = log r, block edges
// at their logarithms) within reach of the initial panel nodes, so the
// adaptive pass cannot mistake an unseen bump for emptiness.  Known jump
// locations of the integrand go in as cuts: a Gauss-Kronrod pair on a panel
// that straddles a jump can agree by accident, and the refinement loop then
// freezes a biased panel it believes is converged.  With panels aligned to
// the jumps, every piece the rule sees is smooth.
Complex chunked_u_quadrature(const std::function<Complex(double)>& f_u,
                             double u_lo, double u_hi, double tol_quad,
                             double x, double r,
                             const std::vector<double>& cuts = {}) {
    if (!(u_hi > u_lo)) return {0.0, 0.0};
    std::vector<double> bounds;
    bounds.push_back(u_lo);
    for (double c : cuts) {
        if (c > bounds.back() + 1e-12 && c < u_hi - 1e-12) bounds.push_back(c);
    }
    bounds.push_back(u_hi);

    struct Segment {
        double a, b;
        int chunks;
    };
    std::vector<Segment> segments;
    int total_chunks = 0;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        const double a = bounds[i];
        const double b = bounds[i + 1];
        const int n = std::max(1, static_cast<int>(std::ceil((b - a) / 0.7)));
        segments.push_back({a, b, n});
        total_chunks += n;
    }
    const double tol_chunk = tol_quad / total_chunks;
    const long budget = 300000;
    Complex total{0.0, 0.0};
    for (const Segment& seg : segments) {
        for (int c = 0; c < seg.chunks; ++c) {
            const double a = seg.a + (seg.b - seg.a) * c / seg.chunks;
            const double b = seg.a + (seg.b - seg.a) * (c + 1) / seg.chunks;
            QuadResult q = integrate(f_u, a, b, tol_chunk, budget);
            if (!q.converged) {
                throw QuadratureBudgetExceeded(
                    "mellin convolution at x=" + fmt_g(x) + ", r=" + fmt_g(r) +
                    " did not reach its tolerance");
            }
            total += q.value;
        }
    }
    return total;
}

// Fold-and-integrate with cutoffs driven only by the sup certificate.  Below
// t_min the integrand is at most sup2 * fmax * t / r, above M the kernel's
// own half tail takes over; each cutoff spends an eighth of the tolerance.
// Fine for kernels whose numerical support is O(r) and for signals whose
// structure lives on multiplicative scales; the heavy-tailed cases that need
// more care go through mellin_poisson_analytic instead.
Complex mellin_generic(const Kernel& kernel, const BoundedSignal& signal,
                       double x, double r, double tol) {
    const double sup2 = 2.0 * signal.sup_bound;
    if (sup2 == 0.0) return {0.0, 0.0};
    const double fmax = kernel.density_bound();
    const double t_min = std::min(r, tol * r / (8.0 * sup2 * fmax));
    double M = 0.0;
    const double T = kernel.support_radius();
    if (std::isfinite(T)) {
        M = r * T;
    } else {
        M = r;
        while (sup2 * 0.5 * kernel.tail_mass(M / r) > 0.125 * tol) M *= 2.0;
    }
    const auto integrand = [&](double u) {
        const double t = std::exp(u);
        const Complex folded = eval(*signal.expr, x - t) + eval(*signal.expr, x + t);
        return folded * (kernel.density(t / r) * t / r);
    };
    // Panels must not straddle jumps of the folded integrand: signal edges at
    // |e - x|, kernel density edges at break * r.
    std::vector<double> cuts;
    for (double e : jump_points(*signal.expr, x - M, x + M)) {
        const double t = std::abs(e - x);
        if (t > t_min && t < M) cuts.push_back(std::log(t));
    }
    for (double b : kernel.density_breaks()) {
        const double t = b * r;
        if (t > t_min && t < M) cuts.push_back(std::log(t));
    }
    std::sort(cuts.begin(), cuts.end());
    return chunked_u_quadrature(integrand, std::log(t_min), std::log(M),
                                0.5 * tol, x, r, cuts);
}

// Poisson route for signals with a cached analytic decomposition.  The
// Poisson half tail carries mass ~ r / (pi M), so a sup-certificate cutoff
// for tol = 1e-6 would sit near M ~ 1e8 while wave terms oscillate at
// frequency omega * e^u in log coordinates: no adaptive pass can resolve
// that.  Splitting the prepared terms fixes both ends.  Wave terms
// integrate by parts against the density twice, which turns the dropped
// tail into an explicit boundary correction plus an O(r / (omega^2 M^3))
// remainder; rational terms decay like 1/t on their own; and the leftover
// constant keeps the full-length tail but is smooth in u, so its long pass
// costs almost nothing.  The derivative bounds used in the remainder
// (|w'| <= 2r/(pi t^3), integral of |w''| beyond M at most 2r/(pi M^3))
// are specific to the Poisson density.
Complex mellin_poisson_analytic(const Kernel& kernel, const PreparedForm& form,
                                double x, double r, double tol) {
    Complex c_dc{0.0, 0.0};
    PreparedForm ac;
    double wave_sum = 0.0;  // sum |wc| over oscillating terms
    double s1 = 0.0;        // far-field bound: |rational part(t)| <= s1 / |t|
    double b_ac = 0.0;      // sup bound of the ac part on the real line
    double max_pole = 0.0;
    for (const PreparedTerm& term : form.terms) {
        PreparedTerm kept = term;
        if (term.omega == 0.0) {
            c_dc += term.wave_coeff;
            kept.wave_coeff = {0.0, 0.0};
        } else {
            wave_sum += std::abs(term.wave_coeff);
            b_ac += std::abs(term.wave_coeff);
        }
        for (const PolePF& p : term.poles) {
            max_pole = std::max(max_pole, std::abs(p.pole));
            double inv = 1.0;
            for (const Complex& coef : p.coeffs) {
                inv /= p.pole.real();
                s1 += 2.0 * std::abs(coef);
                b_ac += std::abs(coef) * inv;
            }
        }
        if (kept.wave_coeff != Complex{0.0, 0.0} || !kept.poles.empty()) {
            ac.terms.push_back(std::move(kept));
        }
    }

    const double fmax = kernel.density_bound();
    const double share = 0.125 * tol;
    Complex total{0.0, 0.0};

    if (!ac.terms.empty()) {
        const double t_min = std::min(r, share * r / (2.0 * b_ac * fmax));
        // The 1/|t - x| style far-field bounds need t to dominate both the
        // poles and the fold centre before the doubling search starts.
        double M = std::max({8.0 * r, 2.0 * (max_pole + std::abs(x)) + 16.0,
                             2.0 * t_min});
        const auto dropped_tail = [&](double m) {
            double d = 2.0 * s1 * r / (kPi * m * m);
            for (const PreparedTerm& term : ac.terms) {
                if (term.omega != 0.0) {
                    d += std::abs(term.wave_coeff) * 8.0 * r /
                         (kPi * term.omega * term.omega * m * m * m);
                }
            }
            return d;
        };
        while (dropped_tail(M) > share) M *= 2.0;
        const auto integrand = [&](double u) {
            const double t = std::exp(u);
            const Complex folded =
                analytic_eval(ac, x - t) + analytic_eval(ac, x + t);
            return folded * (kernel.density(t / r) * t / r);
        };
        total += chunked_u_quadrature(integrand, std::log(t_min), std::log(M),
                                      0.25 * tol, x, r);
        // Leading boundary term of the parts integration on each dropped
        // wave tail: a term wc e^{i omega s} folds to
        // 2 wc e^{i omega x} cos(omega t), and
        //   integral_M^inf cos(omega t) w(t) dt
        //     = -w(M) sin(omega M) / omega + O(r / (omega^2 M^3)).
        const double w_M = kernel.density(M / r) / r;
        for (const PreparedTerm& term : ac.terms) {
            if (term.omega == 0.0 ||
                term.wave_coeff == Complex{0.0, 0.0}) {
                continue;
            }
            const Complex phase =
                term.wave_coeff * std::exp(Complex(0.0, term.omega * x));
            total -= phase *
                     (2.0 * w_M * std::sin(term.omega * M) / term.omega);
        }
    }

    if (c_dc != Complex{0.0, 0.0}) {
        const double cmag = std::abs(c_dc);
        const double t_min = std::min(r, share * r / (2.0 * cmag * fmax));
        double M = r;
        while (cmag * kernel.tail_mass(M / r) > share) M *= 2.0;
        const auto integrand = [&](double u) {
            const double t = std::exp(u);
            return 2.0 * c_dc * (kernel.density(t / r) * t / r);
        };
        total += chunked_u_quadrature(integrand, std::log(t_min), std::log(M),
                                      0.25 * tol, x, r);
    }
    return total;
}

}  // namespace

Complex mellin_convolution(const Kernel& kernel, const BoundedSignal& signal,
                           double x, double r, double tol) {
    if (!kernel.even()) {
        throw PreconditionUnmet(
            "mellin convolution folds the signal onto the half line, which "
            "needs an even kernel");
    }
    if (!(r > 0.0) || !(tol > 0.0)) {
        throw PreconditionUnmet("mellin convolution needs r > 0 and tol > 0");
    }
    if (signal.sup_bound == 0.0) return {0.0, 0.0};

    // In log coordinates t = e^u the average reads
    //   integral phi_x(e^u) f(e^u / r) e^u / r du
    // with phi_x(t) = phi(x - t) + phi(x + t).  Each linear piece of the
    // signal folds independently; a shift moves the fold centre.
    std::vector<LinearLeaf> leaves;
    split_linear_leaves(signal.expr, {1.0, 0.0}, 0.0, leaves);
    const double tol_leaf = tol / static_cast<double>(leaves.size());
    Complex total{0.0, 0.0};
    for (const LinearLeaf& leaf : leaves) {
        const double fmag = std::abs(leaf.factor);
        if (fmag == 0.0) continue;
        const BoundedSignal sub = analyze(leaf.expr);
        if (sub.sup_bound == 0.0) continue;
        const double x_leaf = x + leaf.shift;
        const double tol_sub = tol_leaf / fmag;
        Complex piece;
        if (kernel.kind() == KernelKind::Poisson && sub.analytic) {
            piece = mellin_poisson_analytic(kernel, *sub.analytic, x_leaf, r,
                                            tol_sub);
        } else {
            piece = mellin_generic(kernel, sub, x_leaf, r, tol_sub);
        }
        total += leaf.factor * piece;
    }
    return total;
}

TransferReport kernel_transfer_check(const Kernel& f, const Kernel& g,
                                     const BoundedSignal& signal, double x,
                                     GammaLimit gamma,
                                     const LadderConfig& config) {
    if (!f.even() || !g.even()) {
        throw PreconditionUnmet("kernel transfer needs even kernels");
    }
    if (config.check_admissibility) {
        const Admissibility adm =
            admissible(f, config.xi_max, config.xi_step, config.mellin_floor);
        if (!adm.ok) {
            throw InadmissibleKernel(
                "transfer source kernel " + f.spec_string() +
                " fails the Mellin admissibility scan (modulus " +
                fmt_g(adm.min_modulus) + " at xi=" + fmt_g(adm.argmin_xi) +
                ")");
        }
    }
    TransferReport rep;
    rep.gamma = gamma;
    auto f_job = std::async(std::launch::async, [&]() {
        return point_ladder(f, signal, x, gamma, config);
    });
    rep.g_ladder = point_ladder(g, signal, x, gamma, config);
    rep.f_ladder = f_job.get();
    rep.transfer_ok =
        !rep.f_ladder.stable ||
        (rep.g_ladder.stable &&
         std::abs(rep.f_ladder.limit - rep.g_ladder.limit) <=
             config.eps_agree);
    return rep;
}

PointLadder fatou_small_r(const Kernel& kernel, const BoundedSignal& signal,
                          double x, const LadderConfig& config) {
    if (!kernel.even()) {
        throw PreconditionUnmet("fatou ladder needs an even kernel");
    }
    return point_ladder(kernel, signal, x, GammaLimit::ZeroPlus, config);
}

RadialSymmetricReport radial_vs_symmetric(const BoundedSignal& signal,
                                          double y,
                                          const LadderConfig& config) {
    RadialSymmetricReport rep;
    auto radial_job = std::async(std::launch::async, [&]() {
        return point_ladder(Kernel::poisson(), signal, y,
                            GammaLimit::ZeroPlus, config);
    });
    rep.symmetric = point_ladder(Kernel::box(), signal, y,
                                 GammaLimit::ZeroPlus, config);
    rep.radial = radial_job.get();
    rep.existence_match = rep.radial.stable == rep.symmetric.stable;
    rep.value_match =
        rep.radial.stable && rep.symmetric.stable &&
        std::abs(rep.radial.limit - rep.symmetric.limit) <= config.eps_agree;
    return rep;
}

}  // namespace almostconv
