// Command-line surface: parses signals and configs, runs the analyses, and
// emits a JSON report (stdout or --out) plus optional CSV plot data
// (--plot-out).  Reports are byte-stable for identical invocations: the one
// varying quantity, wall time, goes to stderr instead of the report.
//
// Exit codes: analyze maps its verdict (0 almost convergent, 1 divergent,
// 2 inconclusive); the other subcommands return 0 on success.  Usage and
// config errors exit 3, domain errors (parse failures, inadmissible
// kernels, exhausted quadrature budgets, ...) exit 4, anything unexpected 5.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "almostconv/aclimit.hpp"
#include "almostconv/errors.hpp"
#include "almostconv/hardy.hpp"
#include "almostconv/kernel.hpp"
#include "almostconv/signal.hpp"
#include "almostconv/tauber.hpp"

namespace ac = almostconv;
using nlohmann::ordered_json;

namespace {

// Raw flag values; validation happens in one place so every subcommand
// reports a bad config the same way.
struct Options {
    std::string kernels = "box";
    double r0 = 1.0;
    double rho = 10.0;
    int K = 6;
    double tol = 1e-6;
    double eps_conv = 1e-3;
    double eps_agree = 1e-3;
    double eps_div = 1e-2;
    std::string horizon = "auto";
    std::string out;
    std::string plot_out;
    std::uint64_t seed = 0;
    bool seed_given = false;

    std::string signal;
    std::vector<std::string> fns;
    std::string spec = "box";
    std::string xi = "0:10:0.1";
    double x = 0.0;
    std::string gamma = "inf";
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// When a scan has no structural horizon and the user gave none, hardy falls
// back to this half-width rather than refusing: its whitelist traces decay
// like 1/y, for which +-50 brackets the limit well inside eps_agree.
constexpr double kHardyHorizonFallback = 50.0;

ac::LadderConfig ladder_config(const Options& o) {
    if (!(o.tol > 0.0) || !(o.eps_conv > 0.0) || !(o.eps_agree > 0.0) ||
        !(o.eps_div > 0.0)) {
        throw ConfigError("tolerances must all be positive");
    }
    if (!(o.r0 > 0.0)) throw ConfigError("--r0 must be positive");
    if (!(o.rho > 1.0)) throw ConfigError("--rho must exceed 1");
    if (o.K < 3) throw ConfigError("--K must be at least 3");
    ac::LadderConfig cfg;
    cfg.r0 = o.r0;
    cfg.rho = o.rho;
    cfg.K = o.K;
    cfg.tol = o.tol;
    cfg.eps_conv = o.eps_conv;
    cfg.eps_agree = o.eps_agree;
    cfg.eps_div = o.eps_div;
    if (o.horizon != "auto") {
        char* end = nullptr;
        const double H = std::strtod(o.horizon.c_str(), &end);
        if (end != o.horizon.c_str() + o.horizon.size() || !(H > 0.0)) {
            throw ConfigError(
                "--horizon wants `auto` or a positive half-width, got '" +
                o.horizon + "'");
        }
        cfg.horizon.mode = ac::HorizonPolicy::Mode::Explicit;
        cfg.horizon.H = H;
    }
    return cfg;
}

// Comma list of kernel specs; commas inside parentheses belong to a custom
// density (custom:0.25*interval(-2,2)), not to the list.
std::vector<ac::Kernel> kernel_list(const std::string& csv) {
    std::vector<ac::Kernel> out;
    std::string token;
    int depth = 0;
    for (char c : csv) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            if (!token.empty()) out.push_back(ac::Kernel::parse_spec(token));
            token.clear();
        } else {
            token += c;
        }
    }
    if (!token.empty()) out.push_back(ac::Kernel::parse_spec(token));
    if (out.empty()) {
        throw ConfigError("--kernels needs at least one kernel spec");
    }
    return out;
}

// ---- JSON pieces ----------------------------------------------------------

ordered_json j_complex(ac::Complex c) {
    return ordered_json{{"re", c.real()}, {"im", c.imag()}};
}

ordered_json j_band(const ac::BandSummary& b) {
    return ordered_json{
        {"lo", b.lo}, {"hi", b.hi}, {"slack", b.slack}, {"stable", b.stable}};
}

ordered_json j_rung(const ac::SupInfEstimate& e) {
    return ordered_json{{"r", e.r},
                        {"F_bar", e.F_bar},
                        {"F_under", e.F_under},
                        {"slack", e.slack},
                        {"H", e.H},
                        {"delta", e.delta},
                        {"horizon_limited", e.horizon_limited}};
}

ordered_json j_ladder(const ac::LadderResult& l) {
    ordered_json rungs = ordered_json::array();
    for (const auto& e : l.rungs) rungs.push_back(j_rung(e));
    ordered_json j{{"rungs", std::move(rungs)}};
    if (l.failure_rung >= 0) {
        j["failure_rung"] = l.failure_rung;
        j["failure"] = l.failure;
    }
    return j;
}

ordered_json j_kernel_report(const ac::KernelReport& k) {
    ordered_json j;
    j["kernel"] = k.kernel_spec;
    j["alpha"] = j_complex(k.alpha);
    j["collapsed"] = k.collapsed;
    j["wide"] = k.wide;
    j["re_band"] = j_band(k.re_band);
    j["im_band"] = j_band(k.im_band);
    j["re_ladder"] = j_ladder(k.re_ladder);
    j["im_skipped"] = k.im_skipped;
    if (!k.im_skipped) j["im_ladder"] = j_ladder(k.im_ladder);
    return j;
}

const char* status_name(ac::ACStatus s) {
    switch (s) {
        case ac::ACStatus::AlmostConvergent:
            return "almost-convergent";
        case ac::ACStatus::Divergent:
            return "divergent";
        case ac::ACStatus::Inconclusive:
            return "inconclusive";
    }
    return "inconclusive";
}

ordered_json j_verdict(const ac::ACVerdict& v) {
    ordered_json j;
    j["status"] = status_name(v.status);
    j["alpha"] = j_complex(v.alpha);
    if (!v.reason.empty()) j["reason"] = v.reason;
    j["band_re"] = j_band(v.band_re);
    j["band_im"] = j_band(v.band_im);
    return j;
}

ordered_json j_point_ladder(const std::string& name, const std::string& kernel,
                            const ac::PointLadder& lad, double tol) {
    ordered_json rungs = ordered_json::array();
    for (std::size_t i = 0; i < lad.rungs.size(); ++i) {
        rungs.push_back(ordered_json{{"r", lad.rungs[i]},
                                     {"value", j_complex(lad.values[i])}});
    }
    return ordered_json{{"name", name},
                        {"kernel", kernel},
                        {"tol", tol},
                        {"stable", lad.stable},
                        {"limit", j_complex(lad.limit)},
                        {"rungs", std::move(rungs)}};
}

using Extra = std::vector<std::pair<std::string, ordered_json>>;

ordered_json j_provenance(const Options& o, const std::string& command,
                          const Extra& extra) {
    ordered_json cfg;
    for (const auto& [key, value] : extra) cfg[key] = value;
    cfg["kernels"] = o.kernels;
    cfg["r0"] = o.r0;
    cfg["rho"] = o.rho;
    cfg["K"] = o.K;
    cfg["tol"] = o.tol;
    cfg["eps_conv"] = o.eps_conv;
    cfg["eps_agree"] = o.eps_agree;
    cfg["eps_div"] = o.eps_div;
    cfg["horizon"] = o.horizon;
    cfg["seed"] = o.seed;
    return ordered_json{{"tool", "almostconv"},
                        {"version", "1.0.0"},
                        {"report_schema", 1},
                        {"command", command},
                        {"config", std::move(cfg)}};
}

// ---- output ---------------------------------------------------------------

void write_report(const Options& o, const ordered_json& report) {
    const std::string text = report.dump(2) + "\n";
    if (o.out.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw ConfigError("cannot open --out path '" + o.out + "'");
    f << text;
}

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_plot(const Options& o, const std::string& header,
                const std::vector<std::string>& rows) {
    if (o.plot_out.empty()) return;
    std::ofstream f(o.plot_out, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot open --plot-out path '" + o.plot_out + "'");
    }
    f << header << "\n";
    for (const auto& row : rows) f << row << "\n";
}

void ladder_plot_rows(const ac::KernelReport& k, const std::string& prefix,
                      std::vector<std::string>& rows) {
    const auto emit = [&](const char* part, const ac::LadderResult& l) {
        for (const auto& e : l.rungs) {
            rows.push_back(prefix + k.kernel_spec + "," + part + "," +
                           csv_num(e.r) + "," + csv_num(e.F_bar) + "," +
                           csv_num(e.F_under) + "," + csv_num(e.slack) + "," +
                           csv_num(e.H) + "," + csv_num(e.delta) + "," +
                           (e.horizon_limited ? "1" : "0"));
        }
    };
    emit("re", k.re_ladder);
    if (!k.im_skipped) emit("im", k.im_ladder);
}

// ---- subcommands ----------------------------------------------------------

int run_analyze(const Options& o) {
    const ac::LadderConfig cfg = ladder_config(o);
    const std::vector<ac::Kernel> kernels = kernel_list(o.kernels);
    const ac::BoundedSignal sig = ac::parse_signal(o.signal);
    const ac::ACVerdict v = ac::ac_verdict(sig, kernels, cfg);

    ordered_json ladders = ordered_json::array();
    for (const auto& k : v.kernels) ladders.push_back(j_kernel_report(k));

    ordered_json checks;
    {
        // The computed band may not escape the sup certificate by more than
        // its own slack.
        const bool ok =
            v.band_re.hi <= sig.sup_bound + v.band_re.slack + 1e-12 &&
            v.band_re.lo >= -sig.sup_bound - v.band_re.slack - 1e-12 &&
            v.band_im.hi <= sig.sup_bound + v.band_im.slack + 1e-12 &&
            v.band_im.lo >= -sig.sup_bound - v.band_im.slack - 1e-12;
        checks["band_within_sup"] =
            ordered_json{{"ok", ok}, {"sup_bound", sig.sup_bound}};
    }
    {
        int collapsed = 0;
        double spread = 0.0;
        for (std::size_t i = 0; i < v.kernels.size(); ++i) {
            if (!v.kernels[i].collapsed) continue;
            ++collapsed;
            for (std::size_t j = 0; j < i; ++j) {
                if (!v.kernels[j].collapsed) continue;
                spread = std::max(
                    spread, std::abs(v.kernels[i].alpha - v.kernels[j].alpha));
            }
        }
        const bool checked = collapsed >= 2;
        checks["kernels_agree"] =
            ordered_json{{"checked", checked},
                         {"ok", !checked || spread <= cfg.eps_agree},
                         {"alpha_spread", spread},
                         {"eps_agree", cfg.eps_agree}};
    }

    write_report(o, ordered_json{{"verdict", j_verdict(v)},
                                 {"ladders", std::move(ladders)},
                                 {"checks", std::move(checks)},
                                 {"provenance", j_provenance(
                                      o, "analyze", {{"signal", o.signal}})}});

    std::vector<std::string> rows;
    for (const auto& k : v.kernels) ladder_plot_rows(k, "", rows);
    write_plot(o, "kernel,part,r,F_bar,F_under,slack,H,delta,horizon_limited",
               rows);

    switch (v.status) {
        case ac::ACStatus::AlmostConvergent:
            return 0;
        case ac::ACStatus::Divergent:
            return 1;
        case ac::ACStatus::Inconclusive:
            return 2;
    }
    return 2;
}

std::vector<double> xi_grid(const std::string& text) {
    std::vector<std::string> parts;
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, ':')) parts.push_back(token);
    const auto num = [&](const std::string& s) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size()) {
            throw ConfigError("--xi wants a number or lo:hi:step, got '" +
                              text + "'");
        }
        return v;
    };
    if (parts.size() == 1) return {num(parts[0])};
    if (parts.size() != 3) {
        throw ConfigError("--xi wants a number or lo:hi:step, got '" + text +
                          "'");
    }
    const double lo = num(parts[0]);
    const double hi = num(parts[1]);
    const double step = num(parts[2]);
    if (!(step > 0.0) || hi < lo) {
        throw ConfigError("--xi grid needs hi >= lo and step > 0");
    }
    if ((hi - lo) / step > 100000.0) {
        throw ConfigError("--xi grid has more than 100000 points");
    }
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        const double v = lo + i * step;
        if (v > hi + step * 1e-9) break;
        grid.push_back(v);
    }
    return grid;
}

int run_kernel(const Options& o) {
    const ac::LadderConfig cfg = ladder_config(o);
    const ac::Kernel k = ac::Kernel::parse_spec(o.spec);
    const std::vector<double> grid = xi_grid(o.xi);
    const double mellin_tol = 1e-9;

    ordered_json samples = ordered_json::array();
    std::vector<std::string> rows;
    double min_modulus = 0.0;
    double argmin_xi = 0.0;
    bool first = true;
    for (double xi : grid) {
        const ac::Complex m = ac::mellin(k, xi, mellin_tol);
        const double mod = std::abs(m);
        if (first || mod < min_modulus) {
            min_modulus = mod;
            argmin_xi = xi;
            first = false;
        }
        samples.push_back(ordered_json{
            {"xi", xi}, {"re", m.real()}, {"im", m.imag()}, {"modulus", mod}});
        rows.push_back(csv_num(xi) + "," + csv_num(m.real()) + "," +
                       csv_num(m.imag()) + "," + csv_num(mod));
    }

    ordered_json verdict{{"admissible", min_modulus > cfg.mellin_floor},
                         {"min_modulus", min_modulus},
                         {"argmin_xi", argmin_xi},
                         {"floor", cfg.mellin_floor}};

    ordered_json checks;
    const double mass = k.fourier(0.0).real();
    checks["unit_mass"] = ordered_json{{"mass", mass},
                                       {"ok", std::abs(mass - 1.0) <= 1e-9}};
    checks["even"] = k.even();
    checks["mellin_samples"] =
        ordered_json{{"tol", mellin_tol}, {"values", std::move(samples)}};

    write_report(o, ordered_json{{"verdict", std::move(verdict)},
                                 {"ladders", ordered_json::array()},
                                 {"checks", std::move(checks)},
                                 {"provenance", j_provenance(
                                      o, "kernel",
                                      {{"spec", o.spec}, {"xi", o.xi}})}});
    write_plot(o, "xi,re,im,modulus", rows);
    return 0;
}

// Retries once with the fallback horizon when the boundary trace offers no
// structure to scan and the user left the horizon on auto.
template <typename Fn>
auto with_horizon_fallback(ac::LadderConfig& cfg, bool& defaulted, Fn&& fn) {
    try {
        return fn(cfg);
    } catch (const ac::HorizonUnsupported&) {
        if (cfg.horizon.mode != ac::HorizonPolicy::Mode::Auto) throw;
        cfg.horizon.mode = ac::HorizonPolicy::Mode::Explicit;
        cfg.horizon.H = kHardyHorizonFallback;
        defaulted = true;
        return fn(cfg);
    }
}

int run_hardy(const Options& o) {
    ac::LadderConfig cfg = ladder_config(o);
    const ac::HalfPlaneFunction f = ac::parse_half_plane(o.fns.at(0));
    bool horizon_defaulted = false;

    const ac::EquivalenceReport eq =
        with_horizon_fallback(cfg, horizon_defaulted, [&](const auto& c) {
            return ac::boundary_vs_interior(f, c);
        });

    ordered_json verdict{{"agree", eq.agree},
                         {"implementation_fault", eq.implementation_fault},
                         {"note", eq.note},
                         {"boundary", j_verdict(eq.boundary)},
                         {"interior", j_verdict(eq.interior)}};

    ordered_json ladders = ordered_json::array();
    std::vector<std::string> rows;
    const auto side_ladders = [&](const char* side, const ac::ACVerdict& v) {
        for (const auto& k : v.kernels) {
            ordered_json entry{{"side", side}};
            const ordered_json rep = j_kernel_report(k);
            for (const auto& [key, value] : rep.items()) {
                entry[key] = value;
            }
            ladders.push_back(std::move(entry));
            ladder_plot_rows(k, std::string(side) + ",", rows);
        }
    };
    side_ladders("boundary", eq.boundary);
    side_ladders("interior", eq.interior);

    ordered_json checks;
    if (o.fns.size() > 1) {
        const ac::HalfPlaneFunction g = ac::parse_half_plane(o.fns.at(1));
        const ac::ProductCheck pc =
            with_horizon_fallback(cfg, horizon_defaulted, [&](const auto& c) {
                return ac::multiplicativity_check(f, g, c);
            });
        checks["multiplicativity"] =
            ordered_json{{"alpha", j_complex(pc.alpha)},
                         {"beta", j_complex(pc.beta)},
                         {"product_status", status_name(pc.product_status)},
                         {"product_alpha", j_complex(pc.product_alpha)},
                         {"hinf_inputs", pc.hinf_inputs},
                         {"multiplicative", pc.multiplicative},
                         {"hypothesis_violation", pc.hypothesis_violation},
                         {"fault", pc.fault},
                         {"note", pc.note}};
    }
    if (o.seed_given) {
        // Seeded spot check along a path receding into the half plane:
        // doubling real parts with jitter, uniform imaginary parts.  The
        // path starts at x = 16 so near-boundary transients do not masquerade
        // as extra limit points.
        std::mt19937_64 rng(o.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        ac::SamplePath path;
        ordered_json jpath = ordered_json::array();
        for (int j = 0; j < 12; ++j) {
            const double x = (1.0 + 0.5 * unit(rng)) * std::ldexp(1.0, j + 4);
            const double y = -10.0 + 20.0 * unit(rng);
            path.x.push_back(x);
            path.y.push_back(y);
            jpath.push_back(ordered_json{{"x", x}, {"y", y}});
        }
        const ac::ClusterReport cr =
            ac::cluster_sample(f, path, cfg.eps_div, cfg.tol);
        ordered_json values = ordered_json::array();
        for (const auto& v : cr.values) values.push_back(j_complex(v));
        ordered_json clusters = ordered_json::array();
        for (const auto& c : cr.clusters) clusters.push_back(j_complex(c));
        checks["cluster"] = ordered_json{{"eps", cfg.eps_div},
                                         {"path", std::move(jpath)},
                                         {"values", std::move(values)},
                                         {"cluster_of", cr.cluster_of},
                                         {"clusters", std::move(clusters)},
                                         {"annotation", cr.annotation}};
    }

    Extra extra{{"fn", ordered_json(o.fns)}};
    if (horizon_defaulted) {
        extra.emplace_back("horizon_effective", kHardyHorizonFallback);
    }
    write_report(o, ordered_json{{"verdict", std::move(verdict)},
                                 {"ladders", std::move(ladders)},
                                 {"checks", std::move(checks)},
                                 {"provenance",
                                  j_provenance(o, "hardy", extra)}});
    write_plot(
        o, "side,kernel,part,r,F_bar,F_under,slack,H,delta,horizon_limited",
        rows);
    return 0;
}

int run_tauber(const Options& o) {
    const ac::LadderConfig cfg = ladder_config(o);
    const std::vector<ac::Kernel> kernels = kernel_list(o.kernels);
    const ac::BoundedSignal sig = ac::parse_signal(o.signal);

    ordered_json verdict;
    ordered_json ladders = ordered_json::array();
    ordered_json checks;
    std::vector<std::string> rows;
    const auto point_rows = [&](const std::string& name,
                                const std::string& kernel,
                                const ac::PointLadder& lad) {
        for (std::size_t i = 0; i < lad.rungs.size(); ++i) {
            rows.push_back(name + "," + kernel + "," + csv_num(lad.rungs[i]) +
                           "," + csv_num(lad.values[i].real()) + "," +
                           csv_num(lad.values[i].imag()));
        }
    };

    if (o.gamma == "zero") {
        const std::string spec = kernels.front().spec_string();
        const ac::PointLadder lad =
            ac::fatou_small_r(kernels.front(), sig, o.x, cfg);
        verdict = ordered_json{{"gamma", "zero"},
                               {"x", o.x},
                               {"kernel", spec},
                               {"limit", j_complex(lad.limit)},
                               {"stable", lad.stable}};
        ladders.push_back(j_point_ladder("fatou", spec, lad, cfg.tol));
        point_rows("fatou", spec, lad);
        checks["admissibility"] = ordered_json{{"checked", false}};
    } else if (o.gamma == "inf") {
        const ac::Kernel& f = kernels.front();
        const ac::Kernel& g = kernels.size() > 1 ? kernels[1] : kernels[0];
        const ac::TransferReport tr = ac::kernel_transfer_check(
            f, g, sig, o.x, ac::GammaLimit::Infinity, cfg);
        verdict = ordered_json{
            {"gamma", "inf"},
            {"x", o.x},
            {"transfer_ok", tr.transfer_ok},
            {"f",
             ordered_json{{"kernel", f.spec_string()},
                          {"limit", j_complex(tr.f_ladder.limit)},
                          {"stable", tr.f_ladder.stable}}},
            {"g",
             ordered_json{{"kernel", g.spec_string()},
                          {"limit", j_complex(tr.g_ladder.limit)},
                          {"stable", tr.g_ladder.stable}}}};
        ladders.push_back(
            j_point_ladder("f", f.spec_string(), tr.f_ladder, cfg.tol));
        ladders.push_back(
            j_point_ladder("g", g.spec_string(), tr.g_ladder, cfg.tol));
        point_rows("f", f.spec_string(), tr.f_ladder);
        point_rows("g", g.spec_string(), tr.g_ladder);
        // kernel_transfer_check would have thrown had the scan failed.
        checks["admissibility"] = ordered_json{
            {"checked", cfg.check_admissibility}, {"kernel", f.spec_string()}};
    } else {
        throw ConfigError("--gamma wants `inf` or `zero`, got '" + o.gamma +
                          "'");
    }

    write_report(o, ordered_json{{"verdict", std::move(verdict)},
                                 {"ladders", std::move(ladders)},
                                 {"checks", std::move(checks)},
                                 {"provenance", j_provenance(
                                      o, "tauber",
                                      {{"signal", o.signal},
                                       {"x", o.x},
                                       {"gamma", o.gamma}})}});
    write_plot(o, "ladder,kernel,r,re,im", rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Dilation-ladder analysis of almost convergence for bounded "
                 "signals on the line"};
    app.require_subcommand(1);

    const auto add_common = [&o](CLI::App* c) {
        c->add_option("--kernels", o.kernels,
                      "comma list of kernel specs (box, poisson, gauss, "
                      "gauss:sigma=<v>, custom:<density>)");
        c->add_option("--r0", o.r0, "first dilation rung");
        c->add_option("--rho", o.rho, "geometric rung ratio (> 1)");
        c->add_option("--K", o.K, "last rung exponent (>= 3)");
        c->add_option("--tol", o.tol, "per-point convolution tolerance");
        c->add_option("--eps-conv", o.eps_conv,
                      "ladder stabilization threshold");
        c->add_option("--eps-agree", o.eps_agree,
                      "cross-kernel agreement threshold");
        c->add_option("--eps-div", o.eps_div, "stable wide band threshold");
        c->add_option("--horizon", o.horizon,
                      "sup/inf scan half-width: `auto` or a positive number");
        c->add_option("--out", o.out, "report JSON path (default: stdout)");
        c->add_option("--plot-out", o.plot_out, "CSV plot data path");
        c->add_option("--seed", o.seed, "spot-check sampling seed")
            ->each([&o](const std::string&) { o.seed_given = true; });
    };

    CLI::App* cmd_analyze = app.add_subcommand(
        "analyze", "almost-convergence verdict for a signal");
    add_common(cmd_analyze);
    cmd_analyze
        ->add_option("--signal", o.signal, "signal in the surface grammar")
        ->required();

    CLI::App* cmd_kernel = app.add_subcommand(
        "kernel", "Mellin profile and admissibility of one kernel");
    add_common(cmd_kernel);
    cmd_kernel->add_option("--spec", o.spec, "kernel spec");
    cmd_kernel->add_option("--xi", o.xi, "Mellin grid: value or lo:hi:step");

    CLI::App* cmd_hardy = app.add_subcommand(
        "hardy", "boundary trace vs interior limit of a half-plane function");
    add_common(cmd_hardy);
    cmd_hardy
        ->add_option("--fn", o.fns,
                     "half-plane function; give it twice for a product check")
        ->required()
        ->expected(1, 2);

    CLI::App* cmd_tauber = app.add_subcommand(
        "tauber", "pointwise dilation ladders: kernel transfer and Fatou");
    add_common(cmd_tauber);
    cmd_tauber
        ->add_option("--signal", o.signal, "signal in the surface grammar")
        ->required();
    cmd_tauber->add_option("--x", o.x, "evaluation point");
    cmd_tauber->add_option("--gamma", o.gamma, "ladder end: `inf` or `zero`");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const char* name = "";
    int code = 5;
    try {
        if (app.got_subcommand(cmd_analyze)) {
            name = "analyze";
            code = run_analyze(o);
        } else if (app.got_subcommand(cmd_kernel)) {
            name = "kernel";
            code = run_kernel(o);
        } else if (app.got_subcommand(cmd_hardy)) {
            name = "hardy";
            code = run_hardy(o);
        } else {
            name = "tauber";
            code = run_tauber(o);
        }
    } catch (const ConfigError& e) {
        std::cerr << "almostconv: " << e.what() << "\n";
        return 3;
    } catch (const ac::InadmissibleKernel& e) {
        std::cerr << "almostconv: " << e.what() << "\n"
                  << "hint: the transfer source needs a Mellin transform "
                     "bounded away from zero; box, poisson and gauss all "
                     "qualify, or list the admissible kernel first\n";
        return 4;
    } catch (const std::runtime_error& e) {
        std::cerr << "almostconv: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "almostconv: internal error: " << e.what() << "\n";
        return 5;
    }

    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    // Stderr on purpose: the report must be byte-stable across identical
    // runs, and wall time is the one number that never is.
    std::cerr << "almostconv: " << name << " finished in " << ms << " ms\n";
    return code;
}
