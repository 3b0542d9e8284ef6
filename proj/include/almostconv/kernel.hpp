#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "almostconv/signal.hpp"

namespace almostconv {

enum class KernelKind { Box, Poisson, Gauss, Custom };

// An even probability density on the line.  The built-in kinds carry closed
// forms for everything downstream code needs (tails, CDF, Fourier transform,
// total variation); custom densities are parsed from the signal grammar and
// must have structurally evident compact support so the same quantities stay
// computable with certified error.
class Kernel {
public:
    static Kernel box();
    static Kernel poisson();
    static Kernel gauss(double sigma);
    static Kernel custom(const std::string& density_text);

    // CLI surface form: "box", "poisson", "gauss:sigma=<v>", "custom:<expr>".
    static Kernel parse_spec(const std::string& spec);

    KernelKind kind() const { return kind_; }
    double sigma() const { return sigma_; }
    bool even() const { return even_; }

    double density(double t) const;
    // Mass in {|t| > M}; exact per kind (quadrature-backed for custom).
    double tail_mass(double M) const;
    // Distribution function, integral over (-inf, t].
    double cdf(double t) const;
    // Fourier transform at u: integral of f(t) e^{-iut} dt (real when even).
    std::complex<double> fourier(double u) const;
    // Total variation of the density; the convolution f_r * phi is Lipschitz
    // with constant sup|phi| * TV(f) / r.  For custom kernels this is a
    // grid estimate inflated by a safety factor.
    double total_variation() const;
    // Upper bound on the density's sup; quadrature cutoffs are derived
    // from it.
    double density_bound() const;
    // Radius of the support; +inf for Poisson/Gauss.
    double support_radius() const;
    // Radii (> 0) where the density jumps: the box edge, custom interval
    // endpoints.  Smooth kernels report none.  Quadratures split panels here.
    std::vector<double> density_breaks() const;

    // Half-line Mellin character integral when a closed form exists
    // (Box, Poisson); nullopt for Gauss/Custom.
    std::optional<std::complex<double>> mellin_closed_form(double xi) const;

    std::string spec_string() const { return spec_; }

    // The parsed, normalized density for Custom kernels (null otherwise);
    // convolution code uses it to keep window integrals exact.
    const BoundedSignal* custom_signal() const {
        return custom_ ? &*custom_ : nullptr;
    }

private:
    Kernel() = default;

    KernelKind kind_ = KernelKind::Box;
    double sigma_ = 1.0;
    bool even_ = true;
    std::string spec_ = "box";
    // Custom-only state.
    std::optional<BoundedSignal> custom_;
    double support_ = 1.0;
    double tv_ = 1.0;
    double max_density_ = 0.5;
};

struct DilatedKernel {
    Kernel base;
    double r = 1.0;

    double density(double x) const { return base.density(x / r) / r; }
    double tail_mass(double M) const { return base.tail_mass(M / r); }
    double cdf(double x) const { return base.cdf(x / r); }
    std::complex<double> fourier(double u) const { return base.fourier(r * u); }
    // Lipschitz constant of x -> (f_r * phi)(x) per unit sup|phi|.
    double lipschitz() const { return base.total_variation() / r; }
    double support_radius() const { return base.support_radius() * r; }
};

// Throws NonpositiveDilation unless r > 0.
DilatedKernel dilate(const Kernel& k, double r);

// Integral over (0, inf) of f(t) t^{i xi} dt, closed form when the kernel has
// one, otherwise adaptive quadrature after the substitution t = e^u with
// truncation controlled by tail_mass.  Error at most tol.
std::complex<double> mellin(const Kernel& k, double xi, double tol = 1e-9);

// Always takes the quadrature route, even when a closed form exists; the
// cross-check path for the closed forms.
std::complex<double> mellin_quadrature(const Kernel& k, double xi,
                                       double tol = 1e-9);

struct Admissibility {
    bool ok = false;
    double min_modulus = 0.0;
    double argmin_xi = 0.0;
};

// Scans |mellin(xi)| on the grid {0, step, ..., xi_max} (both signs for the
// rare non-even custom kernel; even kernels have conjugate-symmetric
// transforms so nonnegative xi suffices).  ok iff the minimum stays above
// `floor`.  A grid scan is a semi-decision: it certifies failure exactly at a
// grid zero and reports the observed margin otherwise.
Admissibility admissible(const Kernel& k, double xi_max = 10.0,
                         double step = 0.1, double floor = 1e-8);

inline double tail_mass(const Kernel& k, double M) { return k.tail_mass(M); }

}  // namespace almostconv
