#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>

#include "almostconv/expint.hpp"
#include "almostconv/signal.hpp"

namespace almostconv {

namespace {

using C = Complex;
const C kI(0.0, 1.0);
constexpr int kMaxRationalDegree = 8;
constexpr double kPi = std::numbers::pi;

// ---------- truncated power series (in the local variable u) ----------

using Series = std::vector<C>;

Series series_mul(const Series& a, const Series& b, std::size_t order) {
    Series out(order, C(0.0, 0.0));
    for (std::size_t i = 0; i < a.size() && i < order; ++i) {
        for (std::size_t j = 0; j < b.size() && i + j < order; ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

// (v + u)^m truncated to `order` coefficients.
Series shifted_power_series(C v, int m, std::size_t order) {
    Series out(order, C(0.0, 0.0));
    C binom(1.0, 0.0);  // C(m, j) v^{m-j}, built incrementally
    // j = 0 term: v^m
    C vpow(1.0, 0.0);
    for (int k = 0; k < m; ++k) vpow *= v;
    for (int j = 0; j <= m && static_cast<std::size_t>(j) < order; ++j) {
        out[static_cast<std::size_t>(j)] = binom * vpow;
        // advance: C(m, j+1) = C(m, j) * (m - j) / (j + 1), drop one power of v
        binom *= static_cast<double>(m - j) / static_cast<double>(j + 1);
        if (v != C(0.0, 0.0)) {
            vpow /= v;
        } else {
            // v == 0: only the j == m coefficient survives
            vpow = C(0.0, 0.0);
            if (j + 1 == m) vpow = C(1.0, 0.0);
        }
    }
    return out;
}

// (d + u)^{-k} truncated: d^{-k} sum_n (-1)^n C(k+n-1, n) (u/d)^n.
Series inverse_power_series(C d, int k, std::size_t order) {
    Series out(order, C(0.0, 0.0));
    C lead = std::pow(d, -k);
    C coef = lead;
    for (std::size_t n = 0; n < order; ++n) {
        out[n] = coef;
        const double binom_step =
            static_cast<double>(k + static_cast<int>(n)) /
            static_cast<double>(n + 1);
        coef *= -binom_step / d;
    }
    return out;
}

int total_degree(const AnalyticTerm& t) {
    int deg = 0;
    for (const auto& p : t.poles) deg += p.mult;
    return deg;
}

void merge_pole(std::vector<RationalFactor>* poles, C pole, int mult) {
    for (auto& p : *poles) {
        if (std::abs(p.pole - pole) <= 1e-12 * (1.0 + std::abs(pole))) {
            p.mult += mult;
            return;
        }
    }
    poles->push_back({pole, mult});
}

// Term-by-term product with pole merging; nullopt when the rational degree
// cap is exceeded (the caller falls back to quadrature).
std::optional<AnalyticForm> product_form(const AnalyticForm& a,
                                         const AnalyticForm& b) {
    AnalyticForm out;
    for (const auto& ta : a.terms) {
        for (const auto& tb : b.terms) {
            AnalyticTerm t;
            t.coeff = ta.coeff * tb.coeff;
            if (t.coeff == C(0.0, 0.0)) continue;
            t.omega = ta.omega + tb.omega;
            t.numerator_power = ta.numerator_power + tb.numerator_power;
            t.poles = ta.poles;
            for (const auto& p : tb.poles) merge_pole(&t.poles, p.pole, p.mult);
            if (total_degree(t) > kMaxRationalDegree) return std::nullopt;
            out.terms.push_back(std::move(t));
        }
    }
    return out;
}

AnalyticForm shift_form(const AnalyticForm& f, double s) {
    AnalyticForm out;
    for (const auto& t : f.terms) {
        const C phase = std::exp(kI * (t.omega * s));
        std::vector<RationalFactor> poles = t.poles;
        for (auto& p : poles) p.pole += kI * s;  // Re unchanged
        if (t.numerator_power == 0) {
            AnalyticTerm nt = t;
            nt.coeff *= phase;
            nt.poles = poles;
            out.terms.push_back(std::move(nt));
            continue;
        }
        // (i(t+s))^m = sum_j C(m,j) (is)^{m-j} (it)^j: one term per j.
        const int m = t.numerator_power;
        const C is(0.0, s);
        for (int j = 0; j <= m; ++j) {
            AnalyticTerm nt;
            nt.omega = t.omega;
            nt.poles = poles;
            nt.numerator_power = j;
            double binom = 1.0;
            for (int k = 0; k < j; ++k) {
                binom *= static_cast<double>(m - k) / static_cast<double>(k + 1);
            }
            C ispow(1.0, 0.0);
            for (int k = 0; k < m - j; ++k) ispow *= is;
            nt.coeff = t.coeff * phase * binom * ispow;
            if (nt.coeff != C(0.0, 0.0)) out.terms.push_back(std::move(nt));
        }
    }
    return out;
}

void merge_wave_terms(AnalyticForm* f) {
    AnalyticForm out;
    for (auto& t : f->terms) {
        if (!t.poles.empty()) {
            out.terms.push_back(std::move(t));
            continue;
        }
        bool merged = false;
        for (auto& o : out.terms) {
            if (o.poles.empty() && o.omega == t.omega &&
                o.numerator_power == 0 && t.numerator_power == 0) {
                o.coeff += t.coeff;
                merged = true;
                break;
            }
        }
        if (!merged) out.terms.push_back(std::move(t));
    }
    // Exact zeros drop out (this is what turns cis(t)*cis(-t) into the
    // constant 1 rather than an oscillatory product).
    AnalyticForm pruned;
    for (auto& t : out.terms) {
        if (t.coeff != C(0.0, 0.0)) pruned.terms.push_back(std::move(t));
    }
    *f = std::move(pruned);
}

}  // namespace

std::optional<AnalyticForm> analytic_form(const SignalExpr& expr) {
    using Ret = std::optional<AnalyticForm>;
    Ret result = std::visit(
        [](const auto& n) -> Ret {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ConstNode>) {
                AnalyticForm f;
                if (n.value != C(0.0, 0.0)) {
                    f.terms.push_back({n.value, 0.0, 0, {}});
                }
                return f;
            } else if constexpr (std::is_same_v<T, SinusoidNode>) {
                // a sin(wt+p) = a/(2i) (e^{ip}e^{iwt} - e^{-ip}e^{-iwt})
                // a cos(wt+p) = a/2    (e^{ip}e^{iwt} + e^{-ip}e^{-iwt})
                AnalyticForm f;
                const C ep = std::exp(kI * n.phase);
                const C em = std::exp(-kI * n.phase);
                const C half = n.is_sin ? n.amplitude / (2.0 * kI)
                                        : C(n.amplitude / 2.0, 0.0);
                const C sign = n.is_sin ? C(-1.0, 0.0) : C(1.0, 0.0);
                f.terms.push_back({half * ep, n.omega, 0, {}});
                f.terms.push_back({half * sign * em, -n.omega, 0, {}});
                return f;
            } else if constexpr (std::is_same_v<T, ComplexExpNode>) {
                AnalyticForm f;
                f.terms.push_back({std::exp(kI * n.phase), n.omega, 0, {}});
                return f;
            } else if constexpr (std::is_same_v<T, RationalTraceNode>) {
                AnalyticForm f;
                f.terms.push_back({C(1.0, 0.0), 0.0, 1, {{n.pole, 1}}});
                return f;
            } else if constexpr (std::is_same_v<T, SumNode>) {
                AnalyticForm f;
                for (const auto& c : n.terms) {
                    auto sub = analytic_form(*c);
                    if (!sub) return std::nullopt;
                    for (auto& t : sub->terms) f.terms.push_back(std::move(t));
                }
                return f;
            } else if constexpr (std::is_same_v<T, ProductNode>) {
                AnalyticForm f;
                f.terms.push_back({C(1.0, 0.0), 0.0, 0, {}});
                for (const auto& c : n.factors) {
                    auto sub = analytic_form(*c);
                    if (!sub) return std::nullopt;
                    auto prod = product_form(f, *sub);
                    if (!prod) return std::nullopt;
                    f = std::move(*prod);
                }
                return f;
            } else if constexpr (std::is_same_v<T, ScaleNode>) {
                auto sub = analytic_form(*n.inner);
                if (!sub) return std::nullopt;
                for (auto& t : sub->terms) t.coeff *= n.factor;
                return sub;
            } else if constexpr (std::is_same_v<T, ShiftNode>) {
                auto sub = analytic_form(*n.inner);
                if (!sub) return std::nullopt;
                return shift_form(*sub, n.offset);
            } else {
                return std::nullopt;  // blocks, piecewise, samples
            }
        },
        expr.node);
    if (result) merge_wave_terms(&*result);
    return result;
}

PreparedForm prepare(const AnalyticForm& form) {
    PreparedForm out;
    for (const auto& t : form.terms) {
        PreparedTerm pt;
        pt.omega = t.omega;
        if (t.poles.empty()) {
            assert(t.numerator_power == 0);
            pt.wave_coeff = t.coeff;
            out.coeff_abs_sum += std::abs(t.coeff);
            out.terms.push_back(std::move(pt));
            continue;
        }
        out.pure_wave = false;
        const int K = total_degree(t);
        const int m = t.numerator_power;
        assert(m <= K);
        pt.wave_coeff = (m == K) ? t.coeff : C(0.0, 0.0);
        out.coeff_abs_sum += std::abs(pt.wave_coeff);
        for (std::size_t J = 0; J < t.poles.size(); ++J) {
            const C cJ = t.poles[J].pole;
            const int kJ = t.poles[J].mult;
            const std::size_t order = static_cast<std::size_t>(kJ);
            // Taylor-expand s^m / prod_{j != J} (s + c_j)^{k_j} at s = -c_J.
            Series g = shifted_power_series(-cJ, m, order);
            for (std::size_t j = 0; j < t.poles.size(); ++j) {
                if (j == J) continue;
                g = series_mul(
                    g, inverse_power_series(t.poles[j].pole - cJ, t.poles[j].mult, order),
                    order);
            }
            PolePF pf;
            pf.pole = cJ;
            pf.coeffs.resize(static_cast<std::size_t>(kJ));
            for (int p = 1; p <= kJ; ++p) {
                pf.coeffs[static_cast<std::size_t>(p - 1)] =
                    t.coeff * g[static_cast<std::size_t>(kJ - p)];
                out.coeff_abs_sum +=
                    std::abs(pf.coeffs[static_cast<std::size_t>(p - 1)]) /
                    std::pow(cJ.real(), p);
            }
            pt.poles.push_back(std::move(pf));
        }
        out.terms.push_back(std::move(pt));
    }
    return out;
}

Complex analytic_eval(const PreparedForm& form, double t) {
    C total(0.0, 0.0);
    for (const auto& term : form.terms) {
        C v = term.wave_coeff;
        for (const auto& pf : term.poles) {
            const C den = pf.pole + C(0.0, t);
            C dpow(1.0, 0.0);
            for (std::size_t p = 0; p < pf.coeffs.size(); ++p) {
                dpow *= den;
                v += pf.coeffs[p] / dpow;
            }
        }
        if (term.omega != 0.0) v *= std::exp(kI * (term.omega * t));
        total += v;
    }
    return total;
}

namespace {

// Antiderivative values F_p(t) of e^{iwt} (c + it)^{-p} for p = 1..pmax,
// w != 0, on the branch continuous in t.  F_1 is the scaled exponential
// integral; crossing the E1 branch cut (which happens once, at t = -Im c,
// when w > 0) adds the constant 2*pi*exp(-w c).  Higher p by the downward
// recurrence F_p = [e^{iwt}(c+it)^{1-p} - i w F_{p-1}] / (i (1 - p)).
void modulated_antiderivatives(double w, C c, double t, int pmax, C* out) {
    const C z = C(0.0, -w * t) - w * c;
    const double tstar = -c.imag();
    const int side = (t < tstar) ? +1 : -1;
    const C phase = std::exp(C(0.0, w * t));
    C F = kI * phase * expint_e1_scaled(z, side);
    if (w > 0.0 && t >= tstar) F += 2.0 * kPi * std::exp(-w * c);
    out[0] = F;
    C invpow(1.0, 0.0);
    const C den = c + C(0.0, t);
    for (int p = 2; p <= pmax; ++p) {
        invpow /= den;  // (c+it)^{1-p}
        const C Fp = (phase * invpow - kI * w * out[p - 2]) /
                     (kI * static_cast<double>(1 - p));
        out[p - 1] = Fp;
    }
}

}  // namespace

Complex analytic_window_integral(const PreparedForm& form, double a, double b,
                                 double* err_out) {
    C total(0.0, 0.0);
    for (const auto& term : form.terms) {
        const double w = term.omega;
        if (w == 0.0) {
            total += term.wave_coeff * (b - a);
            for (const auto& pf : term.poles) {
                const C da = pf.pole + C(0.0, a);
                const C db = pf.pole + C(0.0, b);
                if (!pf.coeffs.empty()) {
                    total += pf.coeffs[0] * (-kI) * (std::log(db) - std::log(da));
                }
                C ia(1.0, 0.0), ib(1.0, 0.0);
                for (std::size_t p = 2; p <= pf.coeffs.size(); ++p) {
                    ia /= da;  // (c+ia)^{1-p}
                    ib /= db;
                    total += pf.coeffs[p - 1] * (ib - ia) /
                             (kI * static_cast<double>(1.0 - static_cast<double>(p)));
                }
            }
            continue;
        }
        const C wave = (std::exp(kI * (w * b)) - std::exp(kI * (w * a))) / (kI * w);
        total += term.wave_coeff * wave;
        for (const auto& pf : term.poles) {
            const int pmax = static_cast<int>(pf.coeffs.size());
            C Fa[kMaxRationalDegree], Fb[kMaxRationalDegree];
            modulated_antiderivatives(w, pf.pole, a, pmax, Fa);
            modulated_antiderivatives(w, pf.pole, b, pmax, Fb);
            for (int p = 1; p <= pmax; ++p) {
                total += pf.coeffs[p - 1] * (Fb[p - 1] - Fa[p - 1]);
            }
        }
    }
    if (err_out) {
        const double S = form.coeff_abs_sum;
        *err_out = 1e-12 * (1.0 + S) + 4e-16 * S * std::abs(b - a);
    }
    return total;
}

namespace {

double sup_bound_of(const SignalExpr& expr) {
    return std::visit(
        [](const auto& n) -> double {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ConstNode>) {
                return std::abs(n.value);
            } else if constexpr (std::is_same_v<T, SinusoidNode>) {
                return std::abs(n.amplitude);
            } else if constexpr (std::is_same_v<T, ComplexExpNode>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, BlockNode>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, PiecewiseNode>) {
                double m = 0.0;
                for (const auto& p : n.pieces) m = std::max(m, sup_bound_of(*p));
                return m;
            } else if constexpr (std::is_same_v<T, SumNode>) {
                double s = 0.0;
                for (const auto& t : n.terms) s += sup_bound_of(*t);
                return s;
            } else if constexpr (std::is_same_v<T, ProductNode>) {
                double p = 1.0;
                for (const auto& f : n.factors) p *= sup_bound_of(*f);
                return p;
            } else if constexpr (std::is_same_v<T, ScaleNode>) {
                return std::abs(n.factor) * sup_bound_of(*n.inner);
            } else if constexpr (std::is_same_v<T, ShiftNode>) {
                return sup_bound_of(*n.inner);
            } else if constexpr (std::is_same_v<T, RationalTraceNode>) {
                return std::abs(n.pole) / n.pole.real();
            } else {
                static_assert(std::is_same_v<T, SamplesNode>);
                double m = 0.0;
                for (const auto& v : n.values) m = std::max(m, std::abs(v));
                return m;
            }
        },
        expr.node);
}

// Euclidean gcd on positive doubles with a commensurability check; returns 0
// when the frequencies do not share a common divisor to within tolerance.
double frequency_gcd(const std::vector<double>& ws) {
    if (ws.empty()) return 0.0;
    double scale = 0.0;
    for (double w : ws) scale = std::max(scale, w);
    double g = 0.0;
    for (double w : ws) {
        double a = std::max(g, w), b = std::min(g, w);
        while (b > 1e-9 * scale) {
            const double r = std::fmod(a, b);
            a = b;
            b = r;
        }
        g = a;
    }
    if (!(g > 1e-9 * scale)) return 0.0;
    for (double w : ws) {
        const double q = w / g;
        if (std::abs(q - std::round(q)) > 1e-6) return 0.0;
    }
    return g;
}

}  // namespace

BoundedSignal analyze(ExprPtr expr) {
    if (!expr) throw std::invalid_argument("signal: null expression");
    BoundedSignal s;
    s.expr = std::move(expr);
    s.sup_bound = sup_bound_of(*s.expr);

    auto form = analytic_form(*s.expr);
    if (form) {
        s.analytic = std::make_shared<const PreparedForm>(prepare(*form));
    }

    if (!collect_blocks(*s.expr).empty()) {
        s.tag = StructureTag::BlockStructured;
        return s;
    }
    if (form && s.analytic->pure_wave) {
        std::vector<double> ws;
        for (const auto& t : form->terms) {
            if (t.omega != 0.0) ws.push_back(std::abs(t.omega));
        }
        if (ws.empty()) {
            s.tag = StructureTag::Periodic;
            s.period = 1.0;  // constant: every period works
            return s;
        }
        const double g = frequency_gcd(ws);
        if (g > 0.0) {
            s.tag = StructureTag::Periodic;
            s.period = 2.0 * std::numbers::pi / g;
            return s;
        }
    }
    s.tag = StructureTag::Generic;
    return s;
}

}  // namespace almostconv
