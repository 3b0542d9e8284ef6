#include <algorithm>
#include <cmath>

#include "almostconv/quadrature.hpp"
#include "almostconv/signal.hpp"

namespace almostconv {

namespace {

using C = Complex;

struct Acc {
    C value{0.0, 0.0};
    double err = 0.0;
    bool exact = true;
    bool budget_exceeded = false;
    long evaluations = 0;

    void take(const Acc& o) {
        value += o.value;
        err += o.err;
        exact = exact && o.exact;
        budget_exceeded = budget_exceeded || o.budget_exceeded;
        evaluations += o.evaluations;
    }
};

Acc integrate_expr(const SignalExpr& expr, double a, double b, double tol,
                   long* budget);

Acc quadrature_path(const SignalExpr& expr, double a, double b, double tol,
                    long* budget) {
    Acc acc;
    acc.exact = false;
    const long avail = std::max<long>(*budget, 0);
    if (avail == 0) {
        // Budget already gone: report the crude bound |integral| <= sup * len.
        acc.budget_exceeded = true;
        acc.err = std::abs(b - a) * 1.0e308;  // caller clamps against sup bound
        return acc;
    }
    QuadResult q = integrate([&expr](double t) { return eval(expr, t); }, a, b,
                             tol, avail);
    *budget -= q.evaluations;
    acc.value = q.value;
    acc.err = q.err;
    acc.budget_exceeded = !q.converged;
    acc.evaluations = q.evaluations;
    return acc;
}

// Exact integral of the piecewise-linear interpolant through the samples.
Acc samples_integral(const SamplesNode& n, double a, double b) {
    Acc acc;
    const std::size_t count = n.values.size();
    const double t0 = n.t0;
    const double tN = n.t0 + n.step * static_cast<double>(count - 1);
    // Constant extension on both sides.
    if (a < t0) {
        const double len = std::min(b, t0) - a;
        if (len > 0.0) acc.value += n.values.front() * len;
    }
    if (b > tN) {
        const double len = b - std::max(a, tN);
        if (len > 0.0) acc.value += n.values.back() * len;
    }
    const double lo = std::max(a, t0), hi = std::min(b, tN);
    if (!(lo < hi) || count < 2) return acc;
    const long k_lo = std::clamp<long>(
        static_cast<long>(std::floor((lo - t0) / n.step)), 0,
        static_cast<long>(count) - 2);
    for (long k = k_lo; k < static_cast<long>(count) - 1; ++k) {
        const double sl = t0 + n.step * static_cast<double>(k);
        const double sr = sl + n.step;
        const double u = std::max(lo, sl), v = std::min(hi, sr);
        if (!(u < v)) {
            if (sl >= hi) break;
            continue;
        }
        const C y0 = n.values[static_cast<std::size_t>(k)];
        const C y1 = n.values[static_cast<std::size_t>(k) + 1];
        auto at = [&](double t) {
            const double w = (t - sl) / n.step;
            return y0 + (y1 - y0) * w;
        };
        acc.value += (at(u) + at(v)) * (0.5 * (v - u));
    }
    return acc;
}

Acc integrate_expr(const SignalExpr& expr, double a, double b, double tol,
                   long* budget) {
    return std::visit(
        [&](const auto& n) -> Acc {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, BlockNode>) {
                Acc acc;
                double len = 0.0;
                for (const Interval& iv : n.spec.blocks_in_range(a, b)) {
                    len += std::max(0.0, std::min(b, iv.hi) - std::max(a, iv.lo));
                }
                acc.value = C(len, 0.0);
                acc.err = 4e-16 * std::abs(b - a);
                return acc;
            } else if constexpr (std::is_same_v<T, SamplesNode>) {
                Acc acc = samples_integral(n, a, b);
                acc.err += 4e-16 * std::abs(b - a) * (1.0 + std::abs(acc.value));
                return acc;
            } else if constexpr (std::is_same_v<T, PiecewiseNode>) {
                Acc acc;
                std::vector<double> cuts{a};
                for (double br : n.breaks) {
                    if (br > a && br < b) cuts.push_back(br);
                }
                cuts.push_back(b);
                const double sub_tol =
                    tol / static_cast<double>(cuts.size() - 1);
                for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                    const double u = cuts[i], v = cuts[i + 1];
                    const std::size_t idx = static_cast<std::size_t>(
                        std::upper_bound(n.breaks.begin(), n.breaks.end(), u) -
                        n.breaks.begin());
                    acc.take(integrate_expr(*n.pieces[idx], u, v, sub_tol, budget));
                }
                return acc;
            } else if constexpr (std::is_same_v<T, SumNode>) {
                Acc acc;
                const double sub_tol =
                    tol / static_cast<double>(std::max<std::size_t>(n.terms.size(), 1));
                for (const auto& t : n.terms) {
                    acc.take(integrate_expr(*t, a, b, sub_tol, budget));
                }
                return acc;
            } else if constexpr (std::is_same_v<T, ScaleNode>) {
                const double mag = std::max(std::abs(n.factor), 1e-300);
                Acc acc = integrate_expr(*n.inner, a, b, tol / mag, budget);
                acc.value *= n.factor;
                acc.err *= std::abs(n.factor);
                return acc;
            } else if constexpr (std::is_same_v<T, ShiftNode>) {
                return integrate_expr(*n.inner, a + n.offset, b + n.offset, tol,
                                      budget);
            } else if constexpr (std::is_same_v<T, ProductNode>) {
                // One indicator factor times an analytically integrable rest
                // is common (block cutouts of waves): integrate the rest over
                // each block overlap.
                const BlockNode* block = nullptr;
                std::vector<ExprPtr> rest;
                for (const auto& f : n.factors) {
                    if (const auto* bn = std::get_if<BlockNode>(&f->node);
                        bn != nullptr && block == nullptr) {
                        block = bn;
                    } else {
                        rest.push_back(f);
                    }
                }
                if (block != nullptr) {
                    std::optional<PreparedForm> pf;
                    if (rest.empty()) {
                        AnalyticForm one;
                        one.terms.push_back({C(1.0, 0.0), 0.0, 0, {}});
                        pf = prepare(one);
                    } else {
                        SignalExpr prod{ProductNode{rest}};
                        if (auto form = analytic_form(prod)) pf = prepare(*form);
                    }
                    if (pf) {
                        Acc acc;
                        for (const Interval& iv : block->spec.blocks_in_range(a, b)) {
                            const double u = std::max(a, iv.lo);
                            const double v = std::min(b, iv.hi);
                            if (!(u < v)) continue;
                            double e = 0.0;
                            acc.value += analytic_window_integral(*pf, u, v, &e);
                            acc.err += e;
                        }
                        return acc;
                    }
                }
                return quadrature_path(expr, a, b, tol, budget);
            } else {
                // Const / Sinusoid / ComplexExp / RationalTrace all have
                // closed-form antiderivatives via the analytic route.
                auto form = analytic_form(expr);
                if (form) {
                    Acc acc;
                    PreparedForm pf = prepare(*form);
                    double e = 0.0;
                    acc.value = analytic_window_integral(pf, a, b, &e);
                    acc.err = e;
                    return acc;
                }
                return quadrature_path(expr, a, b, tol, budget);
            }
        },
        expr.node);
}

}  // namespace

IntegralEstimate window_integral(const BoundedSignal& signal, double a, double b,
                                 double tol, long max_evaluations) {
    IntegralEstimate est;
    if (a == b) {
        est.exact = true;
        return est;
    }
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    if (signal.analytic) {
        double e = 0.0;
        est.value = sign * analytic_window_integral(*signal.analytic, a, b, &e);
        est.err = e;
        est.exact = true;
        return est;
    }
    long budget = max_evaluations;
    Acc acc = integrate_expr(*signal.expr, a, b, tol, &budget);
    est.value = sign * acc.value;
    // A run that exhausted its budget still cannot be worse than sup * length.
    est.err = std::min(acc.err, signal.sup_bound * (b - a) + std::abs(est.value));
    est.exact = acc.exact;
    est.budget_exceeded = acc.budget_exceeded;
    est.evaluations = acc.evaluations;
    return est;
}

}  // namespace almostconv
