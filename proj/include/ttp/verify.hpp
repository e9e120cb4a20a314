#pragma once

// Numerical verification campaigns: the Omega identity, tangency drift and
// convergence order of the integrator.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ttp/ensemble.hpp"
#include "ttp/integrate.hpp"
#include "ttp/providers.hpp"

namespace ttp {

/// Least-squares slope of log(err) against log(step).
inline double fit_order(std::span<const double> steps, std::span<const double> errors)
{
    if (steps.size() != errors.size()) throw ValidationError("fit_order: size mismatch");
    if (steps.size() < 3) throw ValidationError("need at least 3 step sizes to fit an order");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (!(steps[i] > 0.0) || !(errors[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        const double x = std::log(steps[i]), y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double median(std::vector<double> v)
{
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// ---------------------------------------------------------------------------
// Omega identity sweep
// ---------------------------------------------------------------------------

struct OmegaSweepOptions {
    int n_points = 100;
    std::uint64_t seed = 1;
    double h = 1e-5;
    double beta = 1.0;
    double t_lo = 0.0;
    double t_hi = 1.0;
    double min_gradient = 1e-6;  // points with |grad p1hat| below this are skipped
};

struct OmegaSweepPoint {
    Vec3 r = Vec3::Zero();
    double t = 0.0;
    Vec3 n = Vec3::Zero();
    double omega_norm = 0.0;
    double rate_scale = 0.0;
    double fd_residual = 0.0;             // omega_direct vs b x (finite-difference db/dt)
    double decomposition_residual = 0.0;  // omega_direct vs omega_decomposed
};

struct OmegaSweepReport {
    std::string provider;
    double h = 0.0;
    int evaluated = 0;
    int skipped = 0;
    std::vector<OmegaSweepPoint> points;
    double max_fd = 0.0;
    double median_fd = 0.0;
    double max_decomposition = 0.0;
    double median_decomposition = 0.0;
};

/// Both residuals are measured relative to the local rate scale
/// (|d_t g| + ||H||_F |V + u|) / |g|, an upper bound on |db/dt|; where that
/// scale is zero the absolute difference is reported.
///
/// The finite-difference estimate of db/dt uses two samples displaced by
/// +-h along the particle velocity and +-h in time.
inline OmegaSweepReport omega_identity_sweep(const FieldProvider& provider, const OmegaSweepOptions& opt)
{
    if (opt.n_points < 1) throw ValidationError("omega sweep needs at least one point");
    if (!(opt.h > 0.0)) throw ValidationError("finite-difference step must be positive");
    const auto& d = provider.descriptor();
    const Box& box = d.sample_box;

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    OmegaSweepReport rep;
    rep.provider = provider.name();
    rep.h = opt.h;
    std::vector<double> fd, dec;

    for (int i = 0; i < opt.n_points; ++i) {
        Vec3 r;
        for (int a = 0; a < 3; ++a) r[a] = box.lo[a] + (box.hi[a] - box.lo[a]) * unit(rng);
        const double t = d.time_dependent ? opt.t_lo + (opt.t_hi - opt.t_lo) * unit(rng) : opt.t_lo;
        const double angle = 2.0 * std::numbers::pi * unit(rng);

        const FluidSample s = provider.sample(r, t);
        const double gnorm = s.grad_p1hat.norm();
        if (!(gnorm > opt.min_gradient)) {
            ++rep.skipped;
            continue;
        }
        const Vec3 b = s.grad_p1hat / gnorm;
        const auto [e1, e2] = tangent_frame(b);
        const TtpState st{t, r, (std::cos(angle) * e1 + std::sin(angle) * e2).normalized(), opt.beta};

        const OmegaBreakdown br = omega_decomposed(s, st, 0.0);
        const Vec3 w = s.V + relative_velocity(st, s);
        const double dt_step = d.time_dependent ? opt.h : 0.0;
        const FluidSample sp = provider.sample(r + opt.h * w, t + dt_step);
        const FluidSample sm = provider.sample(r - opt.h * w, t - dt_step);
        const Vec3 bdot_fd = (sp.grad_p1hat.normalized() - sm.grad_p1hat.normalized()) / (2.0 * opt.h);
        const Vec3 omega_fd = b.cross(bdot_fd);

        OmegaSweepPoint p;
        p.r = r;
        p.t = t;
        p.n = st.n;
        p.omega_norm = br.omega_direct.norm();
        p.rate_scale = (s.dt_grad_p1hat.norm() + s.hess_p1hat.norm() * w.norm()) / gnorm;
        const double denom = p.rate_scale > 0.0 ? p.rate_scale : 1.0;
        p.fd_residual = (br.omega_direct - omega_fd).norm() / denom;
        p.decomposition_residual = br.residual / denom;
        rep.points.push_back(p);
        fd.push_back(p.fd_residual);
        dec.push_back(p.decomposition_residual);
    }
    rep.evaluated = static_cast<int>(rep.points.size());
    if (!fd.empty()) {
        rep.max_fd = *std::max_element(fd.begin(), fd.end());
        rep.max_decomposition = *std::max_element(dec.begin(), dec.end());
    }
    rep.median_fd = median(fd);
    rep.median_decomposition = median(dec);
    return rep;
}

struct OrderStudy {
    std::vector<double> steps;
    std::vector<double> errors;
    double order = std::numeric_limits<double>::quiet_NaN();
};

/// Repeats the sweep (same points) for each h and fits the decay order of the
/// maximum finite-difference residual.
inline OrderStudy omega_sweep_order(const FieldProvider& provider, OmegaSweepOptions opt, std::span<const double> hs)
{
    OrderStudy out;
    for (double h : hs) {
        opt.h = h;
        out.steps.push_back(h);
        out.errors.push_back(omega_identity_sweep(provider, opt).max_fd);
    }
    out.order = fit_order(out.steps, out.errors);
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form trajectories
// ---------------------------------------------------------------------------

struct OracleSolution {
    std::function<Vec3(double)> position;
    std::function<Vec3(double)> direction;
    double period = std::numeric_limits<double>::infinity();  // revolution time, if periodic
};

/// Exact trajectories where they exist:
///  - rigid_rotation with c > 0: a helix of constant radius R about the
///    rotation axis. With n0 = cos(a) phi + sin(a) axis, the particle turns at
///    |w| + beta v_th cos(a) / R and climbs at beta v_th sin(a);
///  - uniform with zero gradient, or with n0 and V0 both normal to it:
///    straight line at V0 + beta v_th n0.
inline OracleSolution trajectory_oracle(const FieldProvider& provider, const TtpState& s0)
{
    if (const auto* rot = dynamic_cast<const RigidRotationField*>(&provider)) {
        if (!(rot->curvature() > 0.0)) throw NoOracle("rigid_rotation oracle needs c > 0");
        const Vec3 axis = rot->axis();
        const double wmag = rot->angular_velocity().norm();
        const Vec3 r_axial = axis.dot(s0.r) * axis;
        const Vec3 r_perp = s0.r - r_axial;
        const double R = r_perp.norm();
        if (!(R > 0.0)) throw NoOracle("rigid_rotation oracle undefined on the rotation axis");
        const Vec3 e_r = r_perp / R;
        const Vec3 e_phi = axis.cross(e_r);
        const double cos_a = s0.n.dot(e_phi);
        const double sin_a = s0.n.dot(axis);
        if (std::abs(s0.n.dot(e_r)) > 1e-9) throw NoOracle("rigid_rotation oracle needs n0 tangent to the cylinder");
        const double vth = std::sqrt(2.0 * (rot->base_pressure() + 0.5 * rot->curvature() * R * R));
        const double rate = wmag + s0.beta * vth * cos_a / R;
        const double climb = s0.beta * vth * sin_a;
        const double t0 = s0.t;
        OracleSolution sol;
        sol.position = [=](double t) {
            const double th = rate * (t - t0);
            return Vec3(r_axial + climb * (t - t0) * axis + R * (std::cos(th) * e_r + std::sin(th) * e_phi));
        };
        sol.direction = [=](double t) {
            const double th = rate * (t - t0);
            const Vec3 phi = std::cos(th) * e_phi - std::sin(th) * e_r;
            return Vec3(cos_a * phi + sin_a * axis);
        };
        sol.period = rate != 0.0 ? 2.0 * std::numbers::pi / std::abs(rate) : std::numeric_limits<double>::infinity();
        return sol;
    }
    if (const auto* uni = dynamic_cast<const UniformField*>(&provider)) {
        const Vec3& g = uni->pressure_gradient();
        const Vec3& V0 = uni->velocity();
        if (g.norm() != 0.0 && (std::abs(g.dot(V0)) > 0.0 || std::abs(g.dot(s0.n)) > 1e-12 * g.norm()))
            throw NoOracle("uniform oracle needs V0 and n0 normal to the pressure gradient");
        const double p = uni->base_pressure() + g.dot(s0.r);
        const Vec3 w = V0 + s0.beta * std::sqrt(2.0 * p) * s0.n;
        const Vec3 r0 = s0.r, n0 = s0.n;
        const double t0 = s0.t;
        OracleSolution sol;
        sol.position = [=](double t) { return Vec3(r0 + w * (t - t0)); };
        sol.direction = [=](double) { return n0; };
        return sol;
    }
    throw NoOracle("no closed-form trajectory for field '" + provider.name() + "'");
}

// ---------------------------------------------------------------------------
// Step-size studies
// ---------------------------------------------------------------------------

struct DriftRow {
    double dt = 0.0;
    double max_abs_n_dot_b = 0.0;
    double max_norm_err = 0.0;
    std::int64_t steps = 0;
};

struct DriftStudy {
    std::vector<DriftRow> rows;
    double order = std::numeric_limits<double>::quiet_NaN();
};

inline DriftStudy tangency_drift_study(const FieldProvider& provider, const TtpState& state0, IntegratorConfig cfg,
                                       std::span<const double> dt_list)
{
    if (dt_list.size() < 3) throw ValidationError("need at least 3 step sizes to fit an order");
    DriftStudy out;
    std::vector<double> dts, errs;
    for (double dt : dt_list) {
        cfg.dt = dt;
        const Trajectory tr = integrate_trajectory(state0, provider, cfg, std::numeric_limits<int>::max());
        if (!tr.summary.completed) throw OutOfDomain("drift study run ended early: " + tr.summary.termination_reason);
        out.rows.push_back({dt, tr.summary.max_abs_n_dot_b, tr.summary.max_norm_err, tr.summary.steps});
        dts.push_back(dt);
        errs.push_back(tr.summary.max_abs_n_dot_b);
    }
    out.order = fit_order(dts, errs);
    return out;
}

struct ConvergenceRow {
    double dt = 0.0;
    double max_position_error = 0.0;
    double final_position_error = 0.0;
    double max_direction_error = 0.0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    double order = std::numeric_limits<double>::quiet_NaN();
};

/// Global error against the closed-form trajectory for each dt.
inline ConvergenceStudy convergence_study(const FieldProvider& provider, const TtpState& state0, IntegratorConfig cfg,
                                          std::span<const double> dt_list)
{
    if (dt_list.size() < 3) throw ValidationError("need at least 3 step sizes to fit an order");
    const OracleSolution oracle = trajectory_oracle(provider, state0);
    ConvergenceStudy out;
    std::vector<double> dts, errs;
    for (double dt : dt_list) {
        cfg.dt = dt;
        const Trajectory tr = integrate_trajectory(state0, provider, cfg);
        if (!tr.summary.completed)
            throw OutOfDomain("convergence run ended early: " + tr.summary.termination_reason);
        ConvergenceRow row;
        row.dt = dt;
        for (const auto& rec : tr.records) {
            const double e = (rec.r - oracle.position(rec.t)).norm();
            row.max_position_error = std::max(row.max_position_error, e);
            row.max_direction_error = std::max(row.max_direction_error, (rec.n - oracle.direction(rec.t)).norm());
        }
        row.final_position_error = (tr.records.back().r - oracle.position(tr.records.back().t)).norm();
        out.rows.push_back(row);
        dts.push_back(dt);
        errs.push_back(row.max_position_error);
    }
    out.order = fit_order(dts, errs);
    return out;
}

} // namespace ttp
