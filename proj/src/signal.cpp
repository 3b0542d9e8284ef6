#include "almostconv/signal.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace almostconv {

namespace {

constexpr double kBlockScaleCap = 1e300;

Complex lerp(Complex a, Complex b, double w) { return a + (b - a) * w; }

}  // namespace

BlockSpec BlockSpec::explicit_intervals(std::vector<Interval> intervals) {
    if (intervals.empty()) {
        throw std::invalid_argument("blocks: explicit interval list is empty");
    }
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (!(intervals[i].lo < intervals[i].hi)) {
            throw std::invalid_argument("blocks: interval with lo >= hi");
        }
        if (i > 0 && intervals[i].lo < intervals[i - 1].hi) {
            throw std::invalid_argument("blocks: overlapping intervals");
        }
    }
    BlockSpec s;
    s.generated_ = false;
    s.intervals_ = std::move(intervals);
    return s;
}

BlockSpec BlockSpec::geometric(double base, double ratio, bool mirrored) {
    if (!(base > 1.0)) {
        throw std::invalid_argument("blocks: base must exceed 1");
    }
    if (!(ratio > 1.0 && ratio < base)) {
        throw std::invalid_argument(
            "blocks: ratio must lie strictly between 1 and base");
    }
    BlockSpec s;
    s.generated_ = true;
    s.base_ = base;
    s.ratio_ = ratio;
    s.mirrored_ = mirrored;
    return s;
}

bool BlockSpec::contains(double t) const {
    if (!generated_) {
        // Intervals are sorted; find the last with lo <= t.
        auto it = std::upper_bound(
            intervals_.begin(), intervals_.end(), t,
            [](double v, const Interval& iv) { return v < iv.lo; });
        if (it == intervals_.begin()) return false;
        --it;
        return t < it->hi;
    }
    double v = t;
    if (v < 0.0) {
        if (!mirrored_) return false;
        v = -v;
        // Mirrored block is (-ratio*b^k, -b^k]; flip strictness accordingly.
        if (v < 1.0) return false;
        const double k = std::floor(std::log(v) / std::log(base_));
        for (double kk : {k - 1, k, k + 1}) {
            if (kk < 0) continue;
            const double lo = std::pow(base_, kk);
            if (v > lo && v <= ratio_ * lo) return true;
        }
        return false;
    }
    if (v < 1.0) return false;
    const double k = std::floor(std::log(v) / std::log(base_));
    // log rounding can be off by one at block edges; check neighbors.
    for (double kk : {k - 1, k, k + 1}) {
        if (kk < 0) continue;
        const double lo = std::pow(base_, kk);
        if (v >= lo && v < ratio_ * lo) return true;
    }
    return false;
}

std::vector<Interval> BlockSpec::blocks_in_range(double lo, double hi) const {
    std::vector<Interval> out;
    if (!(lo < hi)) return out;
    if (!generated_) {
        for (const Interval& iv : intervals_) {
            if (iv.hi > lo && iv.lo < hi) out.push_back(iv);
        }
        return out;
    }
    const double logb = std::log(base_);
    auto emit_positive = [&](double a, double b, std::vector<Interval>* dst) {
        // Blocks [base^k, ratio*base^k) intersecting [a, b], k >= 0.
        if (b <= 1.0) return;
        a = std::max(a, 1.0);
        long k_lo = static_cast<long>(std::floor(std::log(std::max(a, 1.0)) / logb)) - 1;
        long k_hi = static_cast<long>(std::ceil(std::log(b) / logb)) + 1;
        k_lo = std::max<long>(k_lo, 0);
        for (long k = k_lo; k <= k_hi; ++k) {
            const double blo = std::pow(base_, static_cast<double>(k));
            if (blo > kBlockScaleCap) break;
            const double bhi = ratio_ * blo;
            if (bhi <= a) continue;
            if (blo >= b) break;
            dst->push_back({blo, bhi});
        }
    };
    if (mirrored_ && lo < 0.0) {
        std::vector<Interval> pos;
        emit_positive(std::max(-hi, 0.0), -lo, &pos);
        for (auto it = pos.rbegin(); it != pos.rend(); ++it) {
            out.push_back({-it->hi, -it->lo});
        }
    }
    if (hi > 0.0) emit_positive(std::max(lo, 0.0), hi, &out);
    return out;
}

ExprPtr make_expr(SignalExpr e) {
    return std::make_shared<const SignalExpr>(std::move(e));
}
ExprPtr make_const(Complex v) { return make_expr({ConstNode{v}}); }
ExprPtr make_sinusoid(double amplitude, double omega, double phase, bool is_sin) {
    if (omega == 0.0) {
        throw std::invalid_argument("signal: sinusoid frequency must be nonzero");
    }
    return make_expr({SinusoidNode{amplitude, omega, phase, is_sin}});
}
ExprPtr make_complex_exp(double omega, double phase) {
    return make_expr({ComplexExpNode{omega, phase}});
}
ExprPtr make_block(BlockSpec spec) { return make_expr({BlockNode{std::move(spec)}}); }
ExprPtr make_piecewise(std::vector<double> breaks, std::vector<ExprPtr> pieces) {
    if (pieces.size() != breaks.size() + 1) {
        throw std::invalid_argument("signal: piecewise needs breaks+1 pieces");
    }
    for (std::size_t i = 1; i < breaks.size(); ++i) {
        if (!(breaks[i - 1] < breaks[i])) {
            throw std::invalid_argument("signal: piecewise breaks must increase");
        }
    }
    return make_expr({PiecewiseNode{std::move(breaks), std::move(pieces)}});
}
ExprPtr make_sum(std::vector<ExprPtr> terms) {
    return make_expr({SumNode{std::move(terms)}});
}
ExprPtr make_product(std::vector<ExprPtr> factors) {
    return make_expr({ProductNode{std::move(factors)}});
}
ExprPtr make_scale(Complex factor, ExprPtr inner) {
    return make_expr({ScaleNode{factor, std::move(inner)}});
}
ExprPtr make_shift(double offset, ExprPtr inner) {
    return make_expr({ShiftNode{offset, std::move(inner)}});
}
ExprPtr make_rational_trace(Complex pole) {
    if (!(pole.real() > 0.0)) {
        throw UnboundedConstruct(
            "signal: rational trace pole must have positive real part");
    }
    return make_expr({RationalTraceNode{pole}});
}
ExprPtr make_samples(double t0, double step, std::vector<Complex> values,
                     std::string origin) {
    if (!(step > 0.0)) {
        throw std::invalid_argument("signal: sample step must be positive");
    }
    if (values.empty()) {
        throw std::invalid_argument("signal: samples need at least one value");
    }
    return make_expr({SamplesNode{t0, step, std::move(values), std::move(origin)}});
}

std::string to_string(StructureTag tag) {
    switch (tag) {
        case StructureTag::Periodic: return "periodic";
        case StructureTag::BlockStructured: return "block-structured";
        case StructureTag::Generic: return "generic";
    }
    return "?";
}

Complex eval(const SignalExpr& expr, double t) {
    return std::visit(
        [t](const auto& n) -> Complex {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ConstNode>) {
                return n.value;
            } else if constexpr (std::is_same_v<T, SinusoidNode>) {
                const double arg = n.omega * t + n.phase;
                return Complex(n.amplitude * (n.is_sin ? std::sin(arg) : std::cos(arg)), 0.0);
            } else if constexpr (std::is_same_v<T, ComplexExpNode>) {
                const double arg = n.omega * t + n.phase;
                return Complex(std::cos(arg), std::sin(arg));
            } else if constexpr (std::is_same_v<T, BlockNode>) {
                return Complex(n.spec.contains(t) ? 1.0 : 0.0, 0.0);
            } else if constexpr (std::is_same_v<T, PiecewiseNode>) {
                const auto it = std::upper_bound(n.breaks.begin(), n.breaks.end(), t);
                std::size_t idx = static_cast<std::size_t>(it - n.breaks.begin());
                // upper_bound treats t == break as the previous piece; the
                // convention here is right-continuity, so move up.
                if (idx < n.breaks.size() && t >= n.breaks[idx]) ++idx;
                return eval(*n.pieces[idx], t);
            } else if constexpr (std::is_same_v<T, SumNode>) {
                Complex s{0.0, 0.0};
                for (const auto& e : n.terms) s += eval(*e, t);
                return s;
            } else if constexpr (std::is_same_v<T, ProductNode>) {
                Complex p{1.0, 0.0};
                for (const auto& e : n.factors) p *= eval(*e, t);
                return p;
            } else if constexpr (std::is_same_v<T, ScaleNode>) {
                return n.factor * eval(*n.inner, t);
            } else if constexpr (std::is_same_v<T, ShiftNode>) {
                return eval(*n.inner, t + n.offset);
            } else if constexpr (std::is_same_v<T, RationalTraceNode>) {
                const Complex it_(0.0, t);
                return it_ / (n.pole + it_);
            } else {
                static_assert(std::is_same_v<T, SamplesNode>);
                const double last =
                    n.t0 + n.step * static_cast<double>(n.values.size() - 1);
                if (t <= n.t0) return n.values.front();
                if (t >= last) return n.values.back();
                const double u = (t - n.t0) / n.step;
                const std::size_t k = static_cast<std::size_t>(std::floor(u));
                const double w = u - static_cast<double>(k);
                if (k + 1 >= n.values.size()) return n.values.back();
                return lerp(n.values[k], n.values[k + 1], w);
            }
        },
        expr.node);
}

std::vector<PlacedBlocks> collect_blocks(const SignalExpr& expr) {
    std::vector<PlacedBlocks> out;
    struct Walker {
        std::vector<PlacedBlocks>* out;
        void walk(const SignalExpr& e, double offset) {
            std::visit(
                [&](const auto& n) {
                    using T = std::decay_t<decltype(n)>;
                    if constexpr (std::is_same_v<T, BlockNode>) {
                        out->push_back({n.spec, offset});
                    } else if constexpr (std::is_same_v<T, SumNode>) {
                        for (const auto& c : n.terms) walk(*c, offset);
                    } else if constexpr (std::is_same_v<T, ProductNode>) {
                        for (const auto& c : n.factors) walk(*c, offset);
                    } else if constexpr (std::is_same_v<T, ScaleNode>) {
                        walk(*n.inner, offset);
                    } else if constexpr (std::is_same_v<T, ShiftNode>) {
                        walk(*n.inner, offset + n.offset);
                    } else if constexpr (std::is_same_v<T, PiecewiseNode>) {
                        for (const auto& c : n.pieces) walk(*c, offset);
                    }
                },
                e.node);
        }
    };
    Walker w{&out};
    w.walk(expr, 0.0);
    return out;
}

std::vector<double> jump_points(const SignalExpr& expr, double lo, double hi) {
    std::vector<double> out;
    struct Walker {
        std::vector<double>* out;
        double lo, hi;
        void add(double t) {
            if (t >= lo && t <= hi) out->push_back(t);
        }
        void walk(const SignalExpr& e, double offset) {
            std::visit(
                [&](const auto& n) {
                    using T = std::decay_t<decltype(n)>;
                    if constexpr (std::is_same_v<T, BlockNode>) {
                        for (const Interval& iv : n.spec.blocks_in_range(
                                 lo + offset, hi + offset)) {
                            add(iv.lo - offset);
                            add(iv.hi - offset);
                        }
                    } else if constexpr (std::is_same_v<T, PiecewiseNode>) {
                        for (double b : n.breaks) add(b - offset);
                        for (const auto& c : n.pieces) walk(*c, offset);
                    } else if constexpr (std::is_same_v<T, SumNode>) {
                        for (const auto& c : n.terms) walk(*c, offset);
                    } else if constexpr (std::is_same_v<T, ProductNode>) {
                        for (const auto& c : n.factors) walk(*c, offset);
                    } else if constexpr (std::is_same_v<T, ScaleNode>) {
                        walk(*n.inner, offset);
                    } else if constexpr (std::is_same_v<T, ShiftNode>) {
                        walk(*n.inner, offset + n.offset);
                    }
                },
                e.node);
        }
    };
    Walker w{&out, lo, hi};
    w.walk(expr, 0.0);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace almostconv
