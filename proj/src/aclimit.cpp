#include "almostconv/aclimit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <optional>
#include <variant>

#include "almostconv/errors.hpp"

namespace almostconv {

namespace {

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// A signal whose expression cannot produce a nonzero imaginary part needs no
// imaginary ladder; its band is exactly {0}.
bool structurally_real(const SignalExpr& e) {
    return std::visit(
        [](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ConstNode>) {
                return n.value.imag() == 0.0;
            } else if constexpr (std::is_same_v<T, SinusoidNode>) {
                return true;
            } else if constexpr (std::is_same_v<T, ComplexExpNode>) {
                return false;
            } else if constexpr (std::is_same_v<T, BlockNode>) {
                return true;
            } else if constexpr (std::is_same_v<T, PiecewiseNode>) {
                return std::all_of(n.pieces.begin(), n.pieces.end(),
                                   [](const ExprPtr& p) {
                                       return structurally_real(*p);
                                   });
            } else if constexpr (std::is_same_v<T, SumNode>) {
                return std::all_of(n.terms.begin(), n.terms.end(),
                                   [](const ExprPtr& p) {
                                       return structurally_real(*p);
                                   });
            } else if constexpr (std::is_same_v<T, ProductNode>) {
                return std::all_of(n.factors.begin(), n.factors.end(),
                                   [](const ExprPtr& p) {
                                       return structurally_real(*p);
                                   });
            } else if constexpr (std::is_same_v<T, ScaleNode>) {
                return n.factor.imag() == 0.0 && structurally_real(*n.inner);
            } else if constexpr (std::is_same_v<T, ShiftNode>) {
                return structurally_real(*n.inner);
            } else if constexpr (std::is_same_v<T, RationalTraceNode>) {
                return false;
            } else {
                static_assert(std::is_same_v<T, SamplesNode>);
                return std::all_of(n.values.begin(), n.values.end(),
                                   [](Complex v) { return v.imag() == 0.0; });
            }
        },
        e.node);
}

BandSummary summarize(const LadderResult& ladder, double eps_conv) {
    BandSummary b;
    if (ladder.rungs.size() < 3) return b;
    const FuEstimate fu = estimate_Fu(ladder, eps_conv);
    b.lo = fu.F_under_u;
    b.hi = fu.F_bar_u;
    b.stable = fu.stable;
    for (std::size_t i = ladder.rungs.size() - 3; i < ladder.rungs.size();
         ++i) {
        b.slack = std::max(b.slack, ladder.rungs[i].slack);
    }
    return b;
}

bool band_collapsed(const BandSummary& b, const LadderConfig& c) {
    return b.stable && b.width() <= c.eps_conv + 2.0 * b.slack;
}
bool band_wide(const BandSummary& b, const LadderConfig& c) {
    return b.stable && b.width() > c.eps_div + 2.0 * b.slack;
}

}  // namespace

LadderResult band_ladder(const Kernel& kernel, const BoundedSignal& signal,
                         double r0, double rho, int K,
                         const HorizonPolicy& horizon, double tol) {
    if (!(r0 > 0.0) || !(rho > 1.0) || K < 3) {
        throw PreconditionUnmet("band_ladder needs r0 > 0, rho > 1, K >= 3");
    }
    LadderResult out;
    out.kind = kernel.kind();
    out.kernel_spec = kernel.spec_string();

    std::vector<std::future<SupInfEstimate>> futs;
    futs.reserve(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) {
        const double r = r0 * std::pow(rho, static_cast<double>(k));
        futs.push_back(std::async(
            std::launch::async, [kernel, signal, r, horizon, tol] {
                return sup_inf_over_translates(dilate(kernel, r), signal,
                                               horizon, tol);
            }));
    }
    for (int k = 0; k <= K; ++k) {
        try {
            out.rungs.push_back(futs[static_cast<std::size_t>(k)].get());
        } catch (const HorizonUnsupported&) {
            throw;
        } catch (const PreconditionUnmet&) {
            throw;
        } catch (const std::exception& e) {
            out.failure_rung = k;
            out.failure = e.what();
            break;
        }
    }
    return out;
}

FuEstimate estimate_Fu(const LadderResult& ladder, double eps_conv) {
    if (ladder.rungs.size() < 3) {
        throw PreconditionUnmet("estimate_Fu needs at least three rungs");
    }
    const std::size_t n = ladder.rungs.size();
    FuEstimate fu;
    fu.F_bar_u = -std::numeric_limits<double>::infinity();
    fu.F_under_u = std::numeric_limits<double>::infinity();
    double drift = 0.0;
    for (std::size_t i = n - 3; i < n; ++i) {
        fu.F_bar_u = std::max(fu.F_bar_u, ladder.rungs[i].F_bar);
        fu.F_under_u = std::min(fu.F_under_u, ladder.rungs[i].F_under);
        for (std::size_t j = i + 1; j < n; ++j) {
            drift = std::max(drift, std::abs(ladder.rungs[i].F_bar -
                                             ladder.rungs[j].F_bar));
            drift = std::max(drift, std::abs(ladder.rungs[i].F_under -
                                             ladder.rungs[j].F_under));
        }
    }
    fu.stable = drift <= eps_conv;
    return fu;
}

ACVerdict assemble_verdict(std::vector<KernelReport> reports,
                           const LadderConfig& config) {
    if (reports.empty()) {
        throw PreconditionUnmet("assemble_verdict needs at least one report");
    }
    ACVerdict v;
    v.config = config;
    v.band_re = reports.front().re_band;
    v.band_im = reports.front().im_band;
    for (const KernelReport& rep : reports) {
        if (rep.re_band.width() > v.band_re.width()) v.band_re = rep.re_band;
        if (rep.im_band.width() > v.band_im.width()) v.band_im = rep.im_band;
    }
    v.kernels = std::move(reports);

    for (const KernelReport& rep : v.kernels) {
        const LadderResult* failed = nullptr;
        if (rep.re_ladder.failure_rung >= 0) failed = &rep.re_ladder;
        if (!rep.im_skipped && rep.im_ladder.failure_rung >= 0) {
            failed = &rep.im_ladder;
        }
        if (failed) {
            v.status = ACStatus::Inconclusive;
            v.reason = rep.kernel_spec + " ladder failed at rung " +
                       std::to_string(failed->failure_rung) + ": " +
                       failed->failure;
            return v;
        }
    }

    const bool all_collapsed =
        std::all_of(v.kernels.begin(), v.kernels.end(),
                    [](const KernelReport& r) { return r.collapsed; });
    if (all_collapsed) {
        double worst = 0.0;
        for (std::size_t i = 0; i < v.kernels.size(); ++i) {
            for (std::size_t j = i + 1; j < v.kernels.size(); ++j) {
                worst = std::max(
                    worst, std::abs(v.kernels[i].alpha - v.kernels[j].alpha));
            }
        }
        if (worst <= config.eps_agree) {
            Complex sum(0.0, 0.0);
            for (const KernelReport& rep : v.kernels) sum += rep.alpha;
            v.status = ACStatus::AlmostConvergent;
            v.alpha = sum / static_cast<double>(v.kernels.size());
            return v;
        }
        v.status = ACStatus::Inconclusive;
        v.reason = "kernel disagreement: stable collapsed bands differ by " +
                   fmt_g(worst) + " > eps_agree = " + fmt_g(config.eps_agree) +
                   "; this is a numerical horizon artifact, not a possible "
                   "limit structure";
        return v;
    }

    if (std::any_of(v.kernels.begin(), v.kernels.end(),
                    [](const KernelReport& r) { return r.wide; })) {
        v.status = ACStatus::Divergent;
        return v;
    }

    for (const KernelReport& rep : v.kernels) {
        struct Comp {
            const char* name;
            const BandSummary* band;
        };
        const Comp comps[] = {{"Re", &rep.re_band}, {"Im", &rep.im_band}};
        for (const Comp& c : comps) {
            if (rep.im_skipped && c.band == &rep.im_band) continue;
            if (band_collapsed(*c.band, config)) continue;
            v.status = ACStatus::Inconclusive;
            if (!c.band->stable) {
                v.reason = rep.kernel_spec + " " + c.name +
                           " ladder is not Cauchy over the last three rungs "
                           "(drift > eps_conv = " +
                           fmt_g(config.eps_conv) + ")";
            } else {
                v.reason = rep.kernel_spec + " " + c.name + " band width " +
                           fmt_g(c.band->width()) + " (slack " +
                           fmt_g(c.band->slack) +
                           ") sits between the collapse and divergence "
                           "thresholds";
            }
            return v;
        }
    }
    v.status = ACStatus::Inconclusive;
    v.reason = "no decision rule fired";
    return v;
}

ACVerdict ac_verdict(const BoundedSignal& signal,
                     const std::vector<Kernel>& kernels,
                     const LadderConfig& config) {
    if (kernels.empty()) {
        throw PreconditionUnmet("ac_verdict needs at least one kernel");
    }
    if (config.check_admissibility) {
        for (const Kernel& k : kernels) {
            const Admissibility a = admissible(k, config.xi_max,
                                               config.xi_step,
                                               config.mellin_floor);
            if (!a.ok) {
                throw InadmissibleKernel(
                    "kernel '" + k.spec_string() +
                    "' fails the admissibility scan: transform modulus " +
                    fmt_g(a.min_modulus) + " at xi = " + fmt_g(a.argmin_xi) +
                    " is below the floor " + fmt_g(config.mellin_floor));
            }
        }
    }

    const bool real_sig = structurally_real(*signal.expr);
    std::optional<BoundedSignal> im_sig;
    if (!real_sig) {
        im_sig = analyze(make_scale(Complex(0.0, -1.0), signal.expr));
    }

    std::vector<std::future<LadderResult>> re_futs;
    std::vector<std::future<LadderResult>> im_futs;
    for (const Kernel& k : kernels) {
        re_futs.push_back(std::async(std::launch::async, [k, signal, &config] {
            return band_ladder(k, signal, config.r0, config.rho, config.K,
                               config.horizon, config.tol);
        }));
        if (im_sig) {
            const BoundedSignal im = *im_sig;
            im_futs.push_back(std::async(std::launch::async,
                                         [k, im, &config] {
                return band_ladder(k, im, config.r0, config.rho, config.K,
                                   config.horizon, config.tol);
            }));
        }
    }

    std::vector<KernelReport> reports;
    reports.reserve(kernels.size());
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        KernelReport rep;
        rep.kernel_spec = kernels[i].spec_string();
        rep.re_ladder = re_futs[i].get();
        if (im_sig) {
            rep.im_ladder = im_futs[i].get();
        } else {
            rep.im_skipped = true;
            rep.im_ladder.kind = kernels[i].kind();
            rep.im_ladder.kernel_spec = rep.kernel_spec;
        }
        rep.re_band = summarize(rep.re_ladder, config.eps_conv);
        if (rep.im_skipped) {
            rep.im_band = BandSummary{0.0, 0.0, 0.0, true};
        } else {
            rep.im_band = summarize(rep.im_ladder, config.eps_conv);
        }
        const bool ok = rep.re_ladder.failure_rung < 0 &&
                        (rep.im_skipped || rep.im_ladder.failure_rung < 0);
        rep.collapsed = ok && band_collapsed(rep.re_band, config) &&
                        band_collapsed(rep.im_band, config);
        rep.wide = ok && (band_wide(rep.re_band, config) ||
                          band_wide(rep.im_band, config));
        rep.alpha = Complex(0.5 * (rep.re_band.lo + rep.re_band.hi),
                            0.5 * (rep.im_band.lo + rep.im_band.hi));
        reports.push_back(std::move(rep));
    }
    return assemble_verdict(std::move(reports), config);
}

}  // namespace almostconv
