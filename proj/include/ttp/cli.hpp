#pragma once

// Command-line front end: `ttp simulate|ensemble|verify|fields`.
// Exit codes: 0 success, 2 usage/config/validation error, 3 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ttp/config.hpp"
#include "ttp/fd_check.hpp"
#include "ttp/io.hpp"
#include "ttp/verify.hpp"

namespace ttp::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_runtime = 3;

namespace detail {

inline std::ofstream open_output(const std::string& dir, const std::string& file)
{
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / file;
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

inline bool wants(const RunConfig& c, const std::string& format)
{
    return std::find(c.output.formats.begin(), c.output.formats.end(), format) != c.output.formats.end();
}

// Initial state from the particle block. auto_tangent picks e1 of the
// tangent frame at r0, or x when the isobaric normal is undefined there.
inline TtpState initial_state(const RunConfig& c, const FieldProvider& provider)
{
    TtpState s;
    s.t = c.particle.t0;
    s.r = c.particle.r0;
    s.beta = c.particle.beta;
    if (c.particle.n0) {
        s.n = c.particle.n0->normalized();
    } else {
        const FluidSample smp = provider.sample(s.r, s.t);
        const auto b = isobaric_normal(smp, c.integrator.eps_grad);
        s.n = b ? tangent_frame(*b).first : Vec3::UnitX();
    }
    return s;
}

inline std::vector<double> parse_list(const std::string& text, const char* what)
{
    std::vector<double> out;
    std::string s = text;
    for (char& ch : s) {
        if (ch == ',') ch = ' ';
    }
    for (const auto& tok : ttp::detail::split_ws(s)) {
        double v = 0.0;
        if (!ttp::detail::parse_double(tok, v) || !(v > 0.0))
            throw ValidationError(std::string(what) + ": expected positive reals, got '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

inline ParameterMap parse_params(const std::vector<std::string>& kv)
{
    ParameterMap out;
    for (const auto& item : kv) {
        const auto eq = item.find('=');
        double v = 0.0;
        if (eq == std::string::npos || !ttp::detail::parse_double(item.substr(eq + 1), v))
            throw ValidationError("--param expects key=value, got '" + item + "'");
        out[item.substr(0, eq)] = v;
    }
    return out;
}

inline std::string order_text(double order)
{
    return std::isfinite(order) ? io::real(order) : std::string("n/a (errors at zero)");
}

// Evaluation point used when verify runs on every builtin provider.
inline Vec3 probe_point(const FieldProviderDescriptor& d)
{
    const Box& b = d.sample_box;
    return b.lo + 0.37 * (b.hi - b.lo);
}

} // namespace detail

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out)
{
    const ProviderPtr provider = make_provider(cfg.field);
    const TtpState s0 = detail::initial_state(cfg, *provider);
    const Trajectory tr = integrate_trajectory(s0, *provider, cfg.integrator);
    if (detail::wants(cfg, "csv")) {
        auto f = detail::open_output(cfg.output.directory, "trajectory.csv");
        io::write_trajectory_csv(f, tr.records, cfg.output.stride);
    }
    if (detail::wants(cfg, "txt")) {
        auto f = detail::open_output(cfg.output.directory, "summary.txt");
        io::write_summary(f, tr.summary);
    }
    out << "field: " << provider->name() << '\n';
    io::write_summary(out, tr.summary);
    return exit_ok;
}

inline int cmd_ensemble(const RunConfig& cfg, std::ostream& out)
{
    const ProviderPtr provider = make_provider(cfg.field);
    EnsembleSpec spec;
    spec.r0 = cfg.particle.r0;
    spec.t0 = cfg.particle.t0;
    spec.count = cfg.ensemble.count;
    spec.sampling = cfg.ensemble.sampling;
    spec.seed = cfg.ensemble.seed;
    spec.beta = cfg.particle.beta;
    const auto states = seed_tangent_circle(spec, *provider, cfg.integrator.eps_grad);
    const EnsembleRun run = evolve_ensemble(states, *provider, cfg.integrator, cfg.ensemble.stats_every,
                                            static_cast<unsigned>(cfg.ensemble.threads));
    if (detail::wants(cfg, "csv")) {
        auto f = detail::open_output(cfg.output.directory, "ensemble_stats.csv");
        io::write_stats_csv(f, run.series);
    }
    const EnsembleStats& first = run.series.front();
    const EnsembleStats& last = run.series.back();
    const FluidSample s0 = provider->sample(spec.r0, spec.t0);
    std::ostringstream rep;
    rep << "field: " << provider->name() << '\n';
    rep << "members: " << spec.count << '\n';
    rep << "outputs: " << run.series.size() << '\n';
    rep << "t0 |mean_v - V(r0)|: " << io::real((first.mean_v - s0.V).norm()) << '\n';
    rep << "t0 |mean_u|: " << io::real(first.mean_u.norm()) << '\n';
    rep << "final t: " << io::real(last.t) << '\n';
    rep << "final n_effective: " << last.n_effective << " (excluded " << last.excluded << ")\n";
    rep << "final |mean_u|: " << io::real(last.mean_u.norm()) << '\n';
    if (detail::wants(cfg, "txt")) {
        auto f = detail::open_output(cfg.output.directory, "ensemble_summary.txt");
        f << rep.str();
    }
    out << rep.str();
    return exit_ok;
}

struct VerifyOptions {
    int points = 100;
    std::uint64_t seed = 1;
    double h = 1e-5;
    std::vector<double> h_list{4e-3, 2e-3, 1e-3};
    std::vector<double> dt_list{4e-3, 2e-3, 1e-3};
    bool all_builtins = false;
};

inline int cmd_verify(const RunConfig& cfg, const VerifyOptions& opt, std::ostream& out)
{
    struct Target {
        ProviderPtr provider;
        TtpState state;
    };
    std::vector<Target> targets;
    if (opt.all_builtins) {
        for (const auto& d : builtin_registry().list()) {
            ProviderPtr p = builtin_registry().make(d.name);
            TtpState s{cfg.particle.t0, detail::probe_point(p->descriptor()), Vec3::UnitX(), cfg.particle.beta};
            if (const auto b = isobaric_normal(p->sample(s.r, s.t), cfg.integrator.eps_grad))
                s.n = tangent_frame(*b).first;
            targets.push_back({p, s});
        }
    } else {
        ProviderPtr p = make_provider(cfg.field);
        targets.push_back({p, detail::initial_state(cfg, *p)});
    }

    std::ostringstream rep;
    std::ofstream sweep_csv, drift_csv, conv_csv;
    const bool csv = detail::wants(cfg, "csv");
    for (const auto& [provider, state] : targets) {
        const std::string& name = provider->name();
        rep << "== " << name << " ==\n";

        OmegaSweepOptions so;
        so.n_points = opt.points;
        so.seed = opt.seed;
        so.h = opt.h;
        so.beta = cfg.particle.beta;
        so.t_lo = cfg.particle.t0;
        so.t_hi = cfg.particle.t0 + 1.0;
        const OmegaSweepReport sweep = omega_identity_sweep(*provider, so);
        rep << "omega sweep (h=" << io::real(opt.h) << "): evaluated " << sweep.evaluated << ", skipped "
            << sweep.skipped << '\n';
        rep << "  b x db/dt finite-difference residual: max " << io::real(sweep.max_fd) << ", median "
            << io::real(sweep.median_fd) << '\n';
        rep << "  decomposed-route residual (diagnostic, not thresholded): max "
            << io::real(sweep.max_decomposition) << ", median " << io::real(sweep.median_decomposition) << '\n';
        if (sweep.evaluated > 0) {
            const OrderStudy os = omega_sweep_order(*provider, so, opt.h_list);
            rep << "  finite-difference residual order over h list: " << detail::order_text(os.order) << '\n';
        }
        if (csv) {
            auto f = detail::open_output(cfg.output.directory, "omega_sweep_" + name + ".csv");
            io::write_omega_sweep_csv(f, sweep);
        }

        try {
            const DriftStudy drift = tangency_drift_study(*provider, state, cfg.integrator, opt.dt_list);
            rep << "tangency drift:";
            for (const auto& r : drift.rows) rep << " dt=" << io::real(r.dt) << " -> " << io::real(r.max_abs_n_dot_b) << ';';
            rep << " fitted order " << detail::order_text(drift.order) << '\n';
            if (csv) {
                auto f = detail::open_output(cfg.output.directory, "tangency_drift_" + name + ".csv");
                io::write_drift_csv(f, name, drift);
            }
        } catch (const OutOfDomain& e) {
            rep << "tangency drift: skipped (" << e.what() << ")\n";
        }

        try {
            const ConvergenceStudy conv = convergence_study(*provider, state, cfg.integrator, opt.dt_list);
            rep << "convergence:";
            for (const auto& r : conv.rows) rep << " dt=" << io::real(r.dt) << " -> " << io::real(r.max_position_error) << ';';
            rep << " fitted order " << detail::order_text(conv.order) << '\n';
            if (csv) {
                auto f = detail::open_output(cfg.output.directory, "convergence_" + name + ".csv");
                io::write_convergence_csv(f, name, conv);
            }
        } catch (const NoOracle& e) {
            rep << "convergence: skipped (" << e.what() << ")\n";
        }
    }
    if (detail::wants(cfg, "txt")) {
        auto f = detail::open_output(cfg.output.directory, "verify_report.txt");
        f << rep.str();
    }
    out << rep.str();
    return exit_ok;
}

inline int cmd_fields_list(std::ostream& out)
{
    for (const auto& d : builtin_registry().list()) {
        out << d.name << (d.time_dependent ? " (time-dependent)" : " (steady)") << '\n';
        out << "  parameters:";
        for (const auto& [k, v] : d.parameters) out << ' ' << k << '=' << io::real(v);
        out << "\n  domain: " << (d.domain_bounds ? d.domain_bounds->to_string() : std::string("unbounded"));
        if (std::isfinite(d.t_min)) out << ", t > " << io::real(d.t_min);
        out << "\n  pressure: " << d.pressure_model << '\n';
    }
    return exit_ok;
}

inline int cmd_fields_check(const FieldProvider& provider, int points, std::uint64_t seed, double h, double t,
                            std::ostream& out)
{
    const Box& box = provider.descriptor().sample_box;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    DerivativeResiduals worst;
    for (int i = 0; i < points; ++i) {
        Vec3 r;
        for (int a = 0; a < 3; ++a) r[a] = box.lo[a] + (box.hi[a] - box.lo[a]) * unit(rng);
        const DerivativeResiduals res = fd_verify_derivatives(provider, r, t, h);
        worst.gradV = std::max(worst.gradV, res.gradV);
        worst.grad_p1hat = std::max(worst.grad_p1hat, res.grad_p1hat);
        worst.hess_p1hat = std::max(worst.hess_p1hat, res.hess_p1hat);
        worst.dt_grad_p1hat = std::max(worst.dt_grad_p1hat, res.dt_grad_p1hat);
    }
    out << "field: " << provider.name() << '\n';
    out << "points: " << points << ", h: " << io::real(h) << '\n';
    out << "max relative residual gradV: " << io::real(worst.gradV) << '\n';
    out << "max relative residual grad_p1hat: " << io::real(worst.grad_p1hat) << '\n';
    out << "max relative residual hess_p1hat: " << io::real(worst.hess_p1hat) << '\n';
    out << "max relative residual dt_grad_p1hat: " << io::real(worst.dt_grad_p1hat) << '\n';
    out << "max relative residual: " << io::real(worst.max()) << '\n';
    if (provider.descriptor().hessian_discontinuous)
        out << "note: interpolated Hessian is discontinuous across cell faces\n";
    return exit_ok;
}

/// Entry point; never throws.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Thermal tracer particle simulator and verification suite", "ttp"};
    app.require_subcommand(1);
    // `--h` is the finite-difference step, so help is long-form only.
    app.set_help_flag("--help", "Print this help message and exit");

    std::string config_path;
    bool print_cfg = false;
    std::string out_dir;

    auto add_common = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("config", config_path, "Run configuration file");
        if (required) opt->required();
        sub->add_flag("--print-config", print_cfg, "Print the parsed configuration and exit");
        sub->add_option("-o,--output", out_dir, "Override output.directory");
    };

    auto* simulate = app.add_subcommand("simulate", "Integrate one particle trajectory");
    add_common(simulate, true);
    auto* ensemble = app.add_subcommand("ensemble", "Evolve a tangent-circle ensemble and write moment time series");
    add_common(ensemble, true);

    VerifyOptions vopt;
    std::string h_list, dt_list;
    int seed_arg = 1;
    auto* verify = app.add_subcommand("verify", "Omega identity sweep, tangency drift and convergence studies");
    add_common(verify, false);
    verify->add_option("--points", vopt.points, "Sweep points per provider")->check(CLI::PositiveNumber);
    verify->add_option("--seed", seed_arg, "Sweep RNG seed")->check(CLI::NonNegativeNumber);
    verify->add_option("--h", vopt.h, "Finite-difference step for the sweep")->check(CLI::PositiveNumber);
    verify->add_option("--h-list", h_list, "Comma-separated steps for the sweep order fit");
    verify->add_option("--dt-list", dt_list, "Comma-separated time steps for drift and convergence studies");
    verify->add_flag("--all-builtins", vopt.all_builtins, "Run on every builtin provider");

    bool list = false;
    std::string check_name, export_name, grid_out, interp = "tricubic";
    std::vector<std::string> params;
    double fd_h = 1e-4, fd_t = 0.0;
    int fd_points = 20;
    std::vector<int> dims;
    std::vector<double> origin, spacing;
    auto* fields = app.add_subcommand("fields", "List providers, audit derivatives, or export a grid file");
    fields->add_flag("--list", list, "List builtin providers");
    fields->add_option("--check", check_name, "Finite-difference audit of a builtin provider");
    fields->add_option("--check-grid", grid_out, "Finite-difference audit of a grid file");
    fields->add_option("--interpolation", interp, "Grid interpolation: tricubic or trilinear");
    fields->add_option("--param", params, "Provider parameter override key=value");
    fields->add_option("--h", fd_h, "Finite-difference step")->check(CLI::PositiveNumber);
    fields->add_option("--t", fd_t, "Evaluation time");
    fields->add_option("--points", fd_points, "Random interior points")->check(CLI::PositiveNumber);
    fields->add_option("--seed", seed_arg, "RNG seed")->check(CLI::NonNegativeNumber);
    fields->add_option("--export-grid", export_name, "Sample a builtin provider onto a grid file");
    fields->add_option("--dims", dims, "Grid nodes per axis")->expected(3);
    fields->add_option("--origin", origin, "Grid origin")->expected(3);
    fields->add_option("--spacing", spacing, "Grid spacing")->expected(3);
    std::string export_path;
    fields->add_option("--out", export_path, "Output grid file path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        if (*fields) {
            const auto seed = static_cast<std::uint64_t>(seed_arg);
            if (list) return cmd_fields_list(out);
            if (!check_name.empty()) {
                const ProviderPtr p = builtin_registry().make(check_name, detail::parse_params(params));
                return cmd_fields_check(*p, fd_points, seed, fd_h, fd_t, out);
            }
            if (!grid_out.empty()) {
                const auto p = load_grid(grid_out, parse_interpolation(interp));
                return cmd_fields_check(*p, fd_points, seed, fd_h, fd_t, out);
            }
            if (!export_name.empty()) {
                if (dims.size() != 3 || origin.size() != 3 || spacing.size() != 3 || export_path.empty())
                    throw ValidationError("--export-grid needs --dims, --origin, --spacing and --out");
                GridGeometry g;
                g.dims = {dims[0], dims[1], dims[2]};
                g.origin = Vec3(origin[0], origin[1], origin[2]);
                g.spacing = Vec3(spacing[0], spacing[1], spacing[2]);
                for (int a = 0; a < 3; ++a) {
                    if (g.dims[a] < 1 || !(g.spacing[a] > 0.0))
                        throw ValidationError("--dims must be positive and --spacing positive");
                }
                const ProviderPtr p = builtin_registry().make(export_name, detail::parse_params(params));
                std::ofstream f(export_path);
                if (!f) throw Error("cannot write '" + export_path + "'");
                write_grid(f, *p, g, fd_t);
                out << "wrote " << export_path << '\n';
                return exit_ok;
            }
            throw ValidationError("fields: give one of --list, --check, --check-grid, --export-grid");
        }

        RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config(config_path);
        if (!out_dir.empty()) cfg.output.directory = out_dir;
        if (print_cfg) {
            out << print_config(cfg);
            return exit_ok;
        }
        if (*simulate) return cmd_simulate(cfg, out);
        if (*ensemble) return cmd_ensemble(cfg, out);
        if (*verify) {
            vopt.seed = static_cast<std::uint64_t>(seed_arg);
            if (!h_list.empty()) vopt.h_list = detail::parse_list(h_list, "--h-list");
            if (!dt_list.empty()) vopt.dt_list = detail::parse_list(dt_list, "--dt-list");
            if (config_path.empty()) vopt.all_builtins = true;
            return cmd_verify(cfg, vopt, out);
        }
    } catch (const ValidationError& e) {
        err << "ttp: validation error: " << e.what() << '\n';
        return exit_validation;
    } catch (const ConfigParseError& e) {
        err << "ttp: config error: " << e.what() << '\n';
        return exit_validation;
    } catch (const NotFound& e) {
        err << "ttp: " << e.what() << '\n';
        return exit_validation;
    } catch (const std::exception& e) {
        err << "ttp: error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_runtime;
}

} // namespace ttp::cli
