#include "almostconv/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <variant>

#include "almostconv/errors.hpp"
#include "almostconv/quadrature.hpp"

namespace almostconv {

namespace {

constexpr double kPi = std::numbers::pi;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::optional<double> structural_support(const SignalExpr& e);

// Walks the expression looking for compact support that is spelled out in the
// structure itself: indicator blocks, piecewise forms whose unbounded pieces
// are literal zeros, sample tables with zero edges, and closures of those
// under sum/product/scale/shift.  Anything else (waves, rational traces,
// geometric block families) extends to infinity and is rejected for kernel
// use.
struct SupportVisitor {
    using R = std::optional<double>;

    R operator()(const ConstNode& n) const {
        if (n.value == Complex(0.0, 0.0)) return 0.0;
        return std::nullopt;
    }
    R operator()(const SinusoidNode&) const { return std::nullopt; }
    R operator()(const ComplexExpNode&) const { return std::nullopt; }
    R operator()(const RationalTraceNode&) const { return std::nullopt; }
    R operator()(const BlockNode& n) const {
        if (n.spec.generated()) return std::nullopt;
        double r = 0.0;
        for (const Interval& iv : n.spec.intervals()) {
            r = std::max({r, std::abs(iv.lo), std::abs(iv.hi)});
        }
        return r;
    }
    R operator()(const PiecewiseNode& n) const {
        auto is_zero = [](const ExprPtr& p) {
            const auto* c = std::get_if<ConstNode>(&p->node);
            return c != nullptr && c->value == Complex(0.0, 0.0);
        };
        if (!is_zero(n.pieces.front()) || !is_zero(n.pieces.back())) {
            return std::nullopt;
        }
        return std::max(std::abs(n.breaks.front()), std::abs(n.breaks.back()));
    }
    R operator()(const SumNode& n) const {
        double r = 0.0;
        for (const auto& t : n.terms) {
            auto s = structural_support(*t);
            if (!s) return std::nullopt;
            r = std::max(r, *s);
        }
        return r;
    }
    R operator()(const ProductNode& n) const {
        R best;
        for (const auto& f : n.factors) {
            if (auto s = structural_support(*f)) {
                best = best ? std::min(*best, *s) : *s;
            }
        }
        return best;
    }
    R operator()(const ScaleNode& n) const {
        if (n.factor == Complex(0.0, 0.0)) return 0.0;
        return structural_support(*n.inner);
    }
    R operator()(const ShiftNode& n) const {
        auto s = structural_support(*n.inner);
        if (!s) return std::nullopt;
        return *s + std::abs(n.offset);
    }
    R operator()(const SamplesNode& n) const {
        // Outside the table the signal continues with the edge values, so
        // compactness needs those to vanish.
        if (n.values.front() != Complex(0.0, 0.0) ||
            n.values.back() != Complex(0.0, 0.0)) {
            return std::nullopt;
        }
        const double t1 =
            n.t0 + n.step * static_cast<double>(n.values.size() - 1);
        return std::max(std::abs(n.t0), std::abs(t1));
    }
};

std::optional<double> structural_support(const SignalExpr& e) {
    return std::visit(SupportVisitor{}, e.node);
}

}  // namespace

Kernel Kernel::box() {
    Kernel k;
    k.kind_ = KernelKind::Box;
    k.spec_ = "box";
    k.support_ = 1.0;
    k.tv_ = 1.0;
    k.max_density_ = 0.5;
    return k;
}

Kernel Kernel::poisson() {
    Kernel k;
    k.kind_ = KernelKind::Poisson;
    k.spec_ = "poisson";
    k.support_ = std::numeric_limits<double>::infinity();
    k.tv_ = 2.0 / kPi;
    k.max_density_ = 1.0 / kPi;
    return k;
}

Kernel Kernel::gauss(double sigma) {
    if (!(sigma > 0.0)) {
        throw NotADensity("gauss kernel needs sigma > 0");
    }
    Kernel k;
    k.kind_ = KernelKind::Gauss;
    k.sigma_ = sigma;
    k.spec_ = "gauss:sigma=" + format_double(sigma);
    k.support_ = std::numeric_limits<double>::infinity();
    k.max_density_ = 1.0 / (sigma * std::sqrt(2.0 * kPi));
    k.tv_ = 2.0 * k.max_density_;
    return k;
}

Kernel Kernel::custom(const std::string& density_text) {
    BoundedSignal raw = parse_signal(density_text);
    auto support = structural_support(*raw.expr);
    if (!support) {
        throw NotADensity(
            "custom kernel density must have compact support visible in the "
            "expression (indicator blocks or piecewise with zero tails): " +
            density_text);
    }
    const double R = *support;
    if (!(R > 0.0)) {
        throw NotADensity("custom kernel density is identically zero");
    }

    IntegralEstimate mass_est = window_integral(raw, -R, R, 1e-12);
    const double mass = mass_est.value.real();
    if (std::abs(mass_est.value.imag()) > 1e-9) {
        throw NotADensity("custom kernel density has nonzero imaginary mass");
    }
    if (!(std::abs(mass - 1.0) <= 0.01 + mass_est.err)) {
        throw NotADensity("custom kernel mass " + format_double(mass) +
                          " is off by more than 1%; refusing to normalize");
    }

    Kernel k;
    k.kind_ = KernelKind::Custom;
    k.spec_ = "custom:" + density_text;
    k.support_ = R;
    k.custom_ = analyze(make_scale(Complex(1.0 / mass, 0.0), raw.expr));
    k.max_density_ = k.custom_->sup_bound;

    // Nonnegativity and realness, dense grid plus random points.
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> U(-R, R);
    auto check_point = [&](double t) {
        const Complex v = eval(*k.custom_, t);
        if (std::abs(v.imag()) > 1e-9 || v.real() < -1e-9) {
            throw NotADensity("custom kernel density is negative or complex "
                              "at t=" + format_double(t));
        }
    };
    const int n = 2001;
    for (int i = 0; i < n; ++i) {
        check_point(-R + 2.0 * R * i / (n - 1));
    }
    for (int i = 0; i < 256; ++i) check_point(U(rng));

    // Evenness spot-check decides whether Mellin scans may exploit conjugate
    // symmetry.
    bool even = true;
    for (int i = 0; i < 128 && even; ++i) {
        const double t = std::abs(U(rng));
        const Complex a = eval(*k.custom_, t);
        const Complex b = eval(*k.custom_, -t);
        if (std::abs(a - b) > 1e-9 * (1.0 + std::abs(a))) even = false;
    }
    k.even_ = even;

    // Total variation from a fine grid, counting the jumps onto the zero
    // exterior; a grid sum can only undershoot, hence the 1.2 inflation to
    // keep downstream Lipschitz slack on the safe side.
    const int m = 4096;
    double tv = 0.0;
    double prev = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double cur = eval(*k.custom_, -R + 2.0 * R * i / m).real();
        tv += std::abs(cur - prev);
        prev = cur;
    }
    tv += std::abs(prev);
    k.tv_ = 1.2 * tv;
    return k;
}

Kernel Kernel::parse_spec(const std::string& spec) {
    if (spec == "box") return box();
    if (spec == "poisson") return poisson();
    if (spec == "gauss") return gauss(1.0);
    const std::string gp = "gauss:sigma=";
    if (spec.rfind(gp, 0) == 0) {
        const std::string v = spec.substr(gp.size());
        char* end = nullptr;
        const double sigma = std::strtod(v.c_str(), &end);
        if (end != v.c_str() + v.size() || v.empty()) {
            throw SyntaxError("bad gauss sigma '" + v + "'", gp.size(),
                              "a number");
        }
        return gauss(sigma);
    }
    const std::string cp = "custom:";
    if (spec.rfind(cp, 0) == 0) return custom(spec.substr(cp.size()));
    throw SyntaxError("unknown kernel spec '" + spec + "'", 0,
                      "box, poisson, gauss:sigma=<v>, custom:<expr>");
}

double Kernel::density(double t) const {
    switch (kind_) {
        case KernelKind::Box:
            return std::abs(t) <= 1.0 ? 0.5 : 0.0;
        case KernelKind::Poisson:
            return 1.0 / (kPi * (1.0 + t * t));
        case KernelKind::Gauss:
            return std::exp(-t * t / (2.0 * sigma_ * sigma_)) /
                   (sigma_ * std::sqrt(2.0 * kPi));
        case KernelKind::Custom:
            return eval(*custom_, t).real();
    }
    return 0.0;
}

double Kernel::tail_mass(double M) const {
    if (M <= 0.0) return 1.0;
    switch (kind_) {
        case KernelKind::Box:
            return M >= 1.0 ? 0.0 : 1.0 - M;
        case KernelKind::Poisson:
            // 1 - (2/pi) arctan(M), written to keep precision at large M.
            return (2.0 / kPi) * std::atan(1.0 / M);
        case KernelKind::Gauss:
            return std::erfc(M / (sigma_ * std::sqrt(2.0)));
        case KernelKind::Custom: {
            if (M >= support_) return 0.0;
            const double inner =
                window_integral(*custom_, -M, M, 1e-12).value.real();
            return std::clamp(1.0 - inner, 0.0, 1.0);
        }
    }
    return 0.0;
}

double Kernel::cdf(double t) const {
    switch (kind_) {
        case KernelKind::Box:
            return std::clamp(0.5 * (t + 1.0), 0.0, 1.0);
        case KernelKind::Poisson:
            return 0.5 + std::atan(t) / kPi;
        case KernelKind::Gauss:
            return 0.5 * std::erfc(-t / (sigma_ * std::sqrt(2.0)));
        case KernelKind::Custom: {
            if (t <= -support_) return 0.0;
            if (t >= support_) return 1.0;
            const double v =
                window_integral(*custom_, -support_, t, 1e-12).value.real();
            return std::clamp(v, 0.0, 1.0);
        }
    }
    return 0.0;
}

std::complex<double> Kernel::fourier(double u) const {
    switch (kind_) {
        case KernelKind::Box:
            return u == 0.0 ? 1.0 : std::sin(u) / u;
        case KernelKind::Poisson:
            return std::exp(-std::abs(u));
        case KernelKind::Gauss:
            return std::exp(-0.5 * sigma_ * sigma_ * u * u);
        case KernelKind::Custom: {
            BoundedSignal prod = analyze(make_product(
                {custom_->expr, make_complex_exp(-u, 0.0)}));
            return window_integral(prod, -support_, support_, 1e-12).value;
        }
    }
    return 0.0;
}

double Kernel::total_variation() const { return tv_; }

double Kernel::support_radius() const { return support_; }

std::vector<double> Kernel::density_breaks() const {
    switch (kind_) {
        case KernelKind::Box:
            return {1.0};
        case KernelKind::Poisson:
        case KernelKind::Gauss:
            return {};
        case KernelKind::Custom:
            break;
    }
    std::vector<double> out;
    for (double t : jump_points(*custom_->expr, -support_, support_)) {
        const double radius = std::abs(t);
        if (radius > 0.0) out.push_back(radius);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double Kernel::density_bound() const { return max_density_; }

std::optional<std::complex<double>> Kernel::mellin_closed_form(
    double xi) const {
    switch (kind_) {
        case KernelKind::Box:
            // integral_0^1 (1/2) t^{i xi} dt = (1/2) / (1 + i xi)
            return std::complex<double>(0.5, 0.0) /
                   std::complex<double>(1.0, xi);
        case KernelKind::Poisson:
            return std::complex<double>(1.0 / (2.0 * std::cosh(kPi * xi / 2.0)),
                                        0.0);
        default:
            return std::nullopt;
    }
}

DilatedKernel dilate(const Kernel& k, double r) {
    if (!(r > 0.0)) {
        throw NonpositiveDilation("dilation scale must be positive, got " +
                                  format_double(r));
    }
    return DilatedKernel{k, r};
}

std::complex<double> mellin_quadrature(const Kernel& k, double xi,
                                       double tol) {
    if (!(tol > 0.0)) {
        throw PreconditionUnmet("mellin tolerance must be positive");
    }
    // Substitute t = e^u: integral of f(e^u) e^u e^{i xi u} du over the line.
    // Low cutoff: the integrand is at most max_density * e^u.
    const double u_lo = std::log(tol / (4.0 * k.density_bound()));
    double T = k.support_radius();
    if (!std::isfinite(T)) {
        T = 1.0;
        while (0.5 * k.tail_mass(T) > 0.25 * tol) T *= 2.0;
    }
    const double u_hi = std::log(T);
    QuadResult q = integrate(
        [&k, xi](double u) {
            const double t = std::exp(u);
            return k.density(t) * t * std::exp(std::complex<double>(0.0, xi * u));
        },
        u_lo, u_hi, 0.5 * tol);
    if (!q.converged) {
        throw QuadratureBudgetExceeded(
            "mellin quadrature for " + k.spec_string() + " at xi=" +
            format_double(xi) + " did not reach tol");
    }
    return q.value;
}

std::complex<double> mellin(const Kernel& k, double xi, double tol) {
    if (!(tol > 0.0)) {
        throw PreconditionUnmet("mellin tolerance must be positive");
    }
    if (auto cf = k.mellin_closed_form(xi)) return *cf;
    return mellin_quadrature(k, xi, tol);
}

Admissibility admissible(const Kernel& k, double xi_max, double step,
                         double floor) {
    if (!(xi_max > 0.0) || !(step > 0.0) || !(floor >= 0.0)) {
        throw PreconditionUnmet("admissible: need xi_max > 0, step > 0, "
                                "floor >= 0");
    }
    Admissibility out;
    out.min_modulus = std::numeric_limits<double>::infinity();
    auto probe = [&](double xi) {
        const double m = std::abs(mellin(k, xi, 1e-9));
        if (m < out.min_modulus) {
            out.min_modulus = m;
            out.argmin_xi = xi;
        }
    };
    const long n = static_cast<long>(std::floor(xi_max / step + 1e-9));
    for (long i = 0; i <= n; ++i) {
        const double xi = static_cast<double>(i) * step;
        probe(xi);
        if (!k.even() && i > 0) probe(-xi);
    }
    if (static_cast<double>(n) * step < xi_max - 1e-12) {
        probe(xi_max);
        if (!k.even()) probe(-xi_max);
    }
    out.ok = out.min_modulus > floor;
    return out;
}

}  // namespace almostconv
