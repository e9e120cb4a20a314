#pragma once

// Sectioned key = value run configuration.
//
//   [field]       name, grid, interpolation, plus provider parameters
//   [particle]    r0, n0 | auto_tangent, beta, t0, project_initial
//   [integrator]  dt, t_end, method, renormalize_every, project_tangency_every,
//                 eps_grad, omega_route, degenerate_policy
//   [ensemble]    count, sampling, seed, stats_every, threads
//   [output]      directory, formats, stride
//
// '#' and ';' start comments. Unknown sections and keys are rejected.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ttp/ensemble.hpp"
#include "ttp/grid.hpp"
#include "ttp/integrate.hpp"
#include "ttp/providers.hpp"

namespace ttp {

struct FieldBlock {
    std::string name = "uniform";
    std::string grid;  // path; when set, `name` is ignored
    Interpolation interpolation = Interpolation::tricubic;
    ParameterMap parameters;  // overrides of the provider defaults

    bool operator==(const FieldBlock&) const = default;
};

struct ParticleBlock {
    Vec3 r0 = Vec3::Zero();
    std::optional<Vec3> n0;  // nullopt = auto_tangent
    double beta = 1.0;
    double t0 = 0.0;

    bool auto_tangent() const { return !n0.has_value(); }
    bool operator==(const ParticleBlock&) const = default;
};

struct EnsembleBlock {
    int count = 64;
    Sampling sampling = Sampling::equispaced_circle;
    std::uint64_t seed = 1;
    int stats_every = 10;
    int threads = 0;  // 0 = hardware concurrency

    bool operator==(const EnsembleBlock&) const = default;
};

struct OutputBlock {
    std::string directory = ".";
    std::vector<std::string> formats{"csv", "txt"};
    int stride = 1;

    bool operator==(const OutputBlock&) const = default;
};

struct RunConfig {
    FieldBlock field;
    ParticleBlock particle;
    IntegratorConfig integrator;
    EnsembleBlock ensemble;
    OutputBlock output;

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string fmt_real(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_vec(const Vec3& v) { return fmt_real(v.x()) + " " + fmt_real(v.y()) + " " + fmt_real(v.z()); }

class ValueReader {
public:
    ValueReader(std::string section, std::string key, std::string value)
        : section_(std::move(section)), key_(std::move(key)), value_(std::move(value))
    {
    }

    double real() const
    {
        double v = 0.0;
        if (!parse_double(value_, v) || !std::isfinite(v)) fail("expected a real number");
        return v;
    }

    int integer() const
    {
        int v = 0;
        if (!parse_int(value_, v)) fail("expected an integer");
        return v;
    }

    // "never" and 0 both disable a periodic action.
    int every() const { return value_ == "never" ? 0 : integer(); }

    bool boolean() const
    {
        if (value_ == "true" || value_ == "yes" || value_ == "1") return true;
        if (value_ == "false" || value_ == "no" || value_ == "0") return false;
        fail("expected true or false");
        return false;
    }

    Vec3 vec() const
    {
        std::string s = value_;
        for (char& c : s) {
            if (c == ',') c = ' ';
        }
        const auto tok = split_ws(s);
        Vec3 v;
        if (tok.size() != 3) fail("expected three components");
        for (int i = 0; i < 3; ++i) {
            if (!parse_double(tok[i], v[i]) || !std::isfinite(v[i])) fail("expected three real components");
        }
        return v;
    }

    std::vector<std::string> list() const
    {
        std::string s = value_;
        for (char& c : s) {
            if (c == ',') c = ' ';
        }
        return split_ws(s);
    }

    const std::string& text() const { return value_; }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ValidationError("[" + section_ + "] " + key_ + " = '" + value_ + "': " + what);
    }

private:
    std::string section_, key_, value_;
};

} // namespace detail

/// Checks cross-field invariants; throws ValidationError naming the key.
inline void validate(const RunConfig& c)
{
    auto bad = [](const std::string& key, const std::string& what) { throw ValidationError(key + ": " + what); };
    if (c.field.grid.empty()) {
        if (!builtin_registry().contains(c.field.name)) bad("field.name", "unknown field provider '" + c.field.name + "'");
        const auto& defaults = builtin_registry().lookup(c.field.name).parameters;
        for (const auto& [k, v] : c.field.parameters) {
            if (!defaults.count(k)) bad("field." + k, "not a parameter of '" + c.field.name + "'");
        }
    } else if (!c.field.parameters.empty()) {
        bad("field." + c.field.parameters.begin()->first, "gridded fields take no parameters");
    }
    if (!(c.integrator.dt > 0.0)) bad("integrator.dt", "dt must be positive");
    if (!(c.integrator.t_end > c.particle.t0)) bad("integrator.t_end", "t_end must exceed particle.t0");
    if (c.integrator.renormalize_every < 0) bad("integrator.renormalize_every", "must be >= 0");
    if (c.integrator.project_tangency_every < 0) bad("integrator.project_tangency_every", "must be >= 0");
    if (!(c.integrator.eps_grad >= 0.0)) bad("integrator.eps_grad", "must be non-negative");
    if (!(c.particle.beta >= 0.0)) bad("particle.beta", "must be non-negative");
    if (c.particle.n0 && !(c.particle.n0->norm() > 0.0)) bad("particle.n0", "must be nonzero");
    if (c.ensemble.count < 1) bad("ensemble.count", "must be >= 1");
    if (c.ensemble.stats_every < 1) bad("ensemble.stats_every", "must be >= 1");
    if (c.ensemble.threads < 0) bad("ensemble.threads", "must be >= 0");
    if (c.output.stride < 1) bad("output.stride", "stride must be >= 1");
    if (c.output.formats.empty()) bad("output.formats", "at least one format is required");
    for (const auto& f : c.output.formats) {
        if (f != "csv" && f != "txt") bad("output.formats", "unknown format '" + f + "' (expected csv, txt)");
    }
}

inline RunConfig parse_config_text(const std::string& text)
{
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    bool saw_n0 = false, saw_auto = false, auto_value = false;
    std::map<std::string, int> seen;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigParseError(lineno, "unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "field" && section != "particle" && section != "integrator" && section != "ensemble" &&
                section != "output")
                throw ConfigParseError(lineno, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigParseError(lineno, "expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigParseError(lineno, "missing key before '='");
        if (section.empty()) throw ConfigParseError(lineno, "key '" + key + "' outside any section");
        if (value.empty()) throw ConfigParseError(lineno, "missing value for '" + key + "'");
        const std::string qualified = section + "." + key;
        if (seen.count(qualified))
            throw ConfigParseError(lineno, "duplicate key '" + qualified + "' (first on line " +
                                               std::to_string(seen[qualified]) + ")");
        seen[qualified] = lineno;
        const detail::ValueReader v(section, key, value);

        if (section == "field") {
            if (key == "name") cfg.field.name = value;
            else if (key == "grid") cfg.field.grid = value;
            else if (key == "interpolation") cfg.field.interpolation = parse_interpolation(value);
            else cfg.field.parameters[key] = v.real();
        } else if (section == "particle") {
            if (key == "r0") cfg.particle.r0 = v.vec();
            else if (key == "n0") {
                cfg.particle.n0 = v.vec();
                saw_n0 = true;
            } else if (key == "auto_tangent") {
                saw_auto = true;
                auto_value = v.boolean();
            } else if (key == "beta") cfg.particle.beta = v.real();
            else if (key == "t0") cfg.particle.t0 = v.real();
            else if (key == "project_initial") cfg.integrator.project_initial = v.boolean();
            else throw ValidationError("unknown key '" + qualified + "'");
        } else if (section == "integrator") {
            auto& ic = cfg.integrator;
            if (key == "dt") ic.dt = v.real();
            else if (key == "t_end") ic.t_end = v.real();
            else if (key == "method") ic.method = parse_method(value);
            else if (key == "renormalize_every") ic.renormalize_every = v.every();
            else if (key == "project_tangency_every") ic.project_tangency_every = v.every();
            else if (key == "eps_grad") ic.eps_grad = v.real();
            else if (key == "omega_route") ic.omega_route = parse_omega_route(value);
            else if (key == "degenerate_policy") ic.degenerate_policy = parse_degenerate_policy(value);
            else if (key == "initial_tangency_tol") ic.initial_tangency_tol = v.real();
            else throw ValidationError("unknown key '" + qualified + "'");
        } else if (section == "ensemble") {
            auto& e = cfg.ensemble;
            if (key == "count") e.count = v.integer();
            else if (key == "sampling") e.sampling = parse_sampling(value);
            else if (key == "seed") {
                std::uint64_t s = 0;
                const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
                if (ec != std::errc() || ptr != value.data() + value.size()) v.fail("expected a non-negative integer");
                e.seed = s;
            } else if (key == "stats_every") e.stats_every = v.integer();
            else if (key == "threads") e.threads = v.integer();
            else throw ValidationError("unknown key '" + qualified + "'");
        } else if (section == "output") {
            if (key == "directory") cfg.output.directory = value;
            else if (key == "formats") cfg.output.formats = v.list();
            else if (key == "stride") cfg.output.stride = v.integer();
            else throw ValidationError("unknown key '" + qualified + "'");
        }
    }
    if (saw_n0 && saw_auto && auto_value)
        throw ValidationError("particle.n0 and particle.auto_tangent are mutually exclusive");
    if (saw_auto && !auto_value && !saw_n0)
        throw ValidationError("particle.auto_tangent = false requires particle.n0");
    validate(cfg);
    return cfg;
}

inline RunConfig parse_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Canonical text form; parse_config_text(print_config(c)) == c.
inline std::string print_config(const RunConfig& c)
{
    using detail::fmt_real;
    using detail::fmt_vec;
    std::ostringstream os;
    os << "[field]\n";
    if (c.field.grid.empty()) os << "name = " << c.field.name << "\n";
    else os << "grid = " << c.field.grid << "\n";
    os << "interpolation = " << to_string(c.field.interpolation) << "\n";
    for (const auto& [k, v] : c.field.parameters) os << k << " = " << fmt_real(v) << "\n";

    os << "\n[particle]\n";
    os << "r0 = " << fmt_vec(c.particle.r0) << "\n";
    if (c.particle.n0) os << "n0 = " << fmt_vec(*c.particle.n0) << "\n";
    else os << "auto_tangent = true\n";
    os << "beta = " << fmt_real(c.particle.beta) << "\n";
    os << "t0 = " << fmt_real(c.particle.t0) << "\n";
    os << "project_initial = " << (c.integrator.project_initial ? "true" : "false") << "\n";

    const auto& ic = c.integrator;
    os << "\n[integrator]\n";
    os << "dt = " << fmt_real(ic.dt) << "\n";
    os << "t_end = " << fmt_real(ic.t_end) << "\n";
    os << "method = " << to_string(ic.method) << "\n";
    os << "renormalize_every = " << ic.renormalize_every << "\n";
    os << "project_tangency_every = " << ic.project_tangency_every << "\n";
    os << "eps_grad = " << fmt_real(ic.eps_grad) << "\n";
    os << "omega_route = " << to_string(ic.omega_route) << "\n";
    os << "degenerate_policy = " << to_string(ic.degenerate_policy) << "\n";
    os << "initial_tangency_tol = " << fmt_real(ic.initial_tangency_tol) << "\n";

    os << "\n[ensemble]\n";
    os << "count = " << c.ensemble.count << "\n";
    os << "sampling = " << to_string(c.ensemble.sampling) << "\n";
    os << "seed = " << c.ensemble.seed << "\n";
    os << "stats_every = " << c.ensemble.stats_every << "\n";
    os << "threads = " << c.ensemble.threads << "\n";

    os << "\n[output]\n";
    os << "directory = " << c.output.directory << "\n";
    os << "formats =";
    for (std::size_t i = 0; i < c.output.formats.size(); ++i) os << (i ? ", " : " ") << c.output.formats[i];
    os << "\nstride = " << c.output.stride << "\n";
    return os.str();
}

/// Builds the provider a config describes.
inline ProviderPtr make_provider(const FieldBlock& f)
{
    if (!f.grid.empty()) return load_grid(f.grid, f.interpolation);
    return builtin_registry().make(f.name, f.parameters);
}

} // namespace ttp
