#pragma once

// Fixed-step integration of the reduced (r, n) system.
//
// rk4_rodrigues is a Runge-Kutta-Munthe-Kaas scheme: r follows classical RK4
// while n is only ever moved by exact rotations, so |n| = 1 up to rounding.
// rk4_naive integrates n as a free 3-vector and is kept for comparison.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ttp/kinetics.hpp"

namespace ttp {

enum class Method { rk4_rodrigues, rk4_naive };

inline std::string to_string(Method m) { return m == Method::rk4_rodrigues ? "rk4_rodrigues" : "rk4_naive"; }

inline Method parse_method(const std::string& s)
{
    if (s == "rk4_rodrigues") return Method::rk4_rodrigues;
    if (s == "rk4_naive") return Method::rk4_naive;
    throw ValidationError("unknown method '" + s + "' (expected rk4_rodrigues or rk4_naive)");
}

enum class DegeneratePolicy { freeze, error };

inline std::string to_string(DegeneratePolicy p) { return p == DegeneratePolicy::freeze ? "freeze" : "error"; }

inline DegeneratePolicy parse_degenerate_policy(const std::string& s)
{
    if (s == "freeze") return DegeneratePolicy::freeze;
    if (s == "error") return DegeneratePolicy::error;
    throw ValidationError("unknown degenerate_policy '" + s + "' (expected freeze or error)");
}

struct IntegratorConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    Method method = Method::rk4_rodrigues;
    int renormalize_every = 0;       // 0 = never
    int project_tangency_every = 0;  // 0 = never
    double eps_grad = default_eps_grad;
    OmegaRoute omega_route = OmegaRoute::direct;
    DegeneratePolicy degenerate_policy = DegeneratePolicy::freeze;
    bool project_initial = false;
    double initial_tangency_tol = 1e-10;

    bool operator==(const IntegratorConfig&) const = default;
};

inline void validate(const IntegratorConfig& c, double t0)
{
    if (!(c.dt > 0.0)) throw ValidationError("dt must be positive");
    if (!(c.t_end > t0)) throw ValidationError("t_end must exceed the initial time");
    if (c.renormalize_every < 0) throw ValidationError("renormalize_every must be >= 0");
    if (c.project_tangency_every < 0) throw ValidationError("project_tangency_every must be >= 0");
    if (!(c.eps_grad >= 0.0)) throw ValidationError("eps_grad must be non-negative");
}

/// Rotates n about omega by the angle |omega| dt (right-handed), which is the
/// exact flow of dn/dt = omega x n for constant omega.
inline Vec3 rotate_unit(const Vec3& n, const Vec3& omega, double dt)
{
    const double rate = omega.norm();
    if (rate == 0.0) return n;
    const Vec3 k = omega / rate;
    const double angle = rate * dt;
    const double c = std::cos(angle), s = std::sin(angle);
    return n * c + k.cross(n) * s + k * (k.dot(n) * (1.0 - c));
}

/// Rotation by a rotation vector phi (axis phi/|phi|, angle |phi|).
inline Vec3 rotate_by(const Vec3& n, const Vec3& phi) { return rotate_unit(n, phi, 1.0); }

// Inverse differential of the so(3) exponential, truncated after the second
// bracket (enough for fourth order).
inline Vec3 dexp_inverse(const Vec3& theta, const Vec3& omega)
{
    const Vec3 t1 = theta.cross(omega);
    return omega - 0.5 * t1 + theta.cross(t1) / 12.0;
}

enum StepFlags : std::uint32_t {
    flag_none = 0,
    flag_degenerate = 1u << 0,    // b undefined at the recorded point
    flag_renormalized = 1u << 1,
    flag_projected = 1u << 2,
    flag_stage_degenerate = 1u << 3,  // some RK stage hit the degenerate set
};

struct StepResult {
    TtpState state;
    std::uint32_t flags = flag_none;
};

namespace detail {

struct StageEval {
    Vec3 dr = Vec3::Zero();
    Vec3 omega = Vec3::Zero();
    bool degenerate = false;
};

inline StageEval eval_stage(const FieldProvider& provider, const IntegratorConfig& cfg, double t, const Vec3& r,
                            const Vec3& n, double beta)
{
    const FluidSample s = provider.sample(r, t);
    const TtpState st{t, r, n, beta};
    const StateDerivative d = state_rhs(s, st, cfg.eps_grad, cfg.omega_route);
    if (d.degenerate && cfg.degenerate_policy == DegeneratePolicy::error) {
        std::ostringstream os;
        os.precision(17);
        os << "degenerate pressure gradient at " << format_point(r) << ", t=" << t;
        throw DegenerateGradient(os.str());
    }
    return {d.dr_dt, d.omega, d.degenerate};
}

} // namespace detail

/// One step of size h from `state`. Throws OutOfDomain if any stage leaves
/// the provider's domain.
inline StepResult advance(const TtpState& state, const FieldProvider& provider, const IntegratorConfig& cfg, double h,
                          std::int64_t step_index = 1)
{
    const double t = state.t;
    const Vec3& r = state.r;
    const Vec3& n = state.n;
    const double beta = state.beta;
    StepResult out;
    out.state = state;

    if (cfg.method == Method::rk4_rodrigues) {
        const auto k1 = detail::eval_stage(provider, cfg, t, r, n, beta);
        const Vec3 th2 = 0.5 * h * k1.omega;
        const auto k2 = detail::eval_stage(provider, cfg, t + 0.5 * h, r + 0.5 * h * k1.dr, rotate_by(n, th2), beta);
        const Vec3 K2 = dexp_inverse(th2, k2.omega);
        const Vec3 th3 = 0.5 * h * K2;
        const auto k3 = detail::eval_stage(provider, cfg, t + 0.5 * h, r + 0.5 * h * k2.dr, rotate_by(n, th3), beta);
        const Vec3 K3 = dexp_inverse(th3, k3.omega);
        const Vec3 th4 = h * K3;
        const auto k4 = detail::eval_stage(provider, cfg, t + h, r + h * k3.dr, rotate_by(n, th4), beta);
        const Vec3 K4 = dexp_inverse(th4, k4.omega);

        out.state.r = r + (h / 6.0) * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);
        out.state.n = rotate_by(n, (h / 6.0) * (k1.omega + 2.0 * K2 + 2.0 * K3 + K4));
        if (k1.degenerate || k2.degenerate || k3.degenerate || k4.degenerate) out.flags |= flag_stage_degenerate;
    } else {
        auto dn = [](const detail::StageEval& e, const Vec3& nn) { return Vec3(e.omega.cross(nn)); };
        const auto k1 = detail::eval_stage(provider, cfg, t, r, n, beta);
        const Vec3 dn1 = dn(k1, n);
        const Vec3 n2 = n + 0.5 * h * dn1;
        const auto k2 = detail::eval_stage(provider, cfg, t + 0.5 * h, r + 0.5 * h * k1.dr, n2, beta);
        const Vec3 dn2 = dn(k2, n2);
        const Vec3 n3 = n + 0.5 * h * dn2;
        const auto k3 = detail::eval_stage(provider, cfg, t + 0.5 * h, r + 0.5 * h * k2.dr, n3, beta);
        const Vec3 dn3 = dn(k3, n3);
        const Vec3 n4 = n + h * dn3;
        const auto k4 = detail::eval_stage(provider, cfg, t + h, r + h * k3.dr, n4, beta);
        const Vec3 dn4 = dn(k4, n4);

        out.state.r = r + (h / 6.0) * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);
        out.state.n = n + (h / 6.0) * (dn1 + 2.0 * dn2 + 2.0 * dn3 + dn4);
        if (k1.degenerate || k2.degenerate || k3.degenerate || k4.degenerate) out.flags |= flag_stage_degenerate;
    }
    out.state.t = t + h;

    if (cfg.renormalize_every > 0 && step_index % cfg.renormalize_every == 0) {
        out.state.n.normalize();
        out.flags |= flag_renormalized;
    }
    if (cfg.project_tangency_every > 0 && step_index % cfg.project_tangency_every == 0) {
        const FluidSample s = provider.sample(out.state.r, out.state.t);
        if (const auto b = isobaric_normal(s, cfg.eps_grad)) {
            const Vec3 tangent = out.state.n - out.state.n.dot(*b) * *b;
            if (tangent.norm() > 0.0) {
                out.state.n = tangent.normalized();
                out.flags |= flag_projected;
            }
        }
    }
    return out;
}

/// One step of the configured size.
inline TtpState step(const TtpState& state, const FieldProvider& provider, const IntegratorConfig& cfg)
{
    return advance(state, provider, cfg, cfg.dt).state;
}

struct TrajectoryRecord {
    double t = 0.0;
    Vec3 r = Vec3::Zero();
    Vec3 n = Vec3::Zero();
    Vec3 u = Vec3::Zero();
    Vec3 v = Vec3::Zero();  // V + u
    double vth = 0.0;
    double p1hat = 0.0;
    Vec3 b = Vec3::Zero();  // zero when degenerate
    bool degenerate = false;
    double n_dot_b = 0.0;
    double norm_err = 0.0;
    Vec3 omega = Vec3::Zero();
    // | |u| - beta v_th | relative to beta v_th (absolute when that is zero)
    double constraint_residual = 0.0;
    double divergence = 0.0;
    std::uint32_t flags = flag_none;
};

inline TrajectoryRecord make_record(const TtpState& st, const FluidSample& s, const IntegratorConfig& cfg,
                                    std::uint32_t flags = flag_none)
{
    TrajectoryRecord rec;
    rec.t = st.t;
    rec.r = st.r;
    rec.n = st.n;
    rec.p1hat = s.p1hat;
    rec.vth = thermal_velocity(s);
    rec.u = relative_velocity(st, s);
    rec.v = s.V + rec.u;
    const OmegaResult om = rotation_rate(s, st, cfg.eps_grad, cfg.omega_route);
    rec.degenerate = om.degenerate;
    rec.b = om.b;
    rec.omega = om.omega;
    rec.n_dot_b = om.degenerate ? 0.0 : st.n.dot(om.b);
    rec.norm_err = std::abs(st.n.norm() - 1.0);
    const double speed = st.beta * rec.vth;
    const double miss = std::abs(rec.u.norm() - speed);
    rec.constraint_residual = speed > 0.0 ? miss / speed : miss;
    rec.divergence = reduced_divergence(s, st, cfg.eps_grad);
    rec.flags = flags | (om.degenerate ? flag_degenerate : flag_none);
    return rec;
}

struct InvariantSummary {
    double max_norm_err = 0.0;
    double max_abs_n_dot_b = 0.0;
    double max_constraint_residual = 0.0;
    double max_abs_divergence = 0.0;
    std::int64_t steps = 0;
    std::int64_t degenerate_steps = 0;
    bool completed = false;
    std::string termination_reason;
    double t_final = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    InvariantSummary summary;
};

/// Checks |n| = 1 and n . b = 0 at the initial point; projects n onto the
/// tangent plane instead of failing when cfg.project_initial is set.
inline TtpState prepare_initial_state(TtpState state, const FieldProvider& provider, const IntegratorConfig& cfg)
{
    if (!(std::abs(state.n.norm() - 1.0) <= 1e-9)) throw ValidationError("initial direction n0 must be a unit vector");
    if (!(state.beta >= 0.0)) throw ValidationError("beta must be non-negative");
    const FluidSample s = provider.sample(state.r, state.t);
    const auto b = isobaric_normal(s, cfg.eps_grad);
    if (!b) return state;
    const double nb = state.n.dot(*b);
    if (std::abs(nb) <= cfg.initial_tangency_tol) return state;
    if (!cfg.project_initial) {
        std::ostringstream os;
        os.precision(17);
        os << "initial direction is not tangent to the isobaric surface: n0 . b = " << nb << " at "
           << format_point(state.r) << " (enable project_initial to project it)";
        throw InitialTangencyViolation(os.str());
    }
    const Vec3 tangent = state.n - nb * *b;
    if (tangent.norm() == 0.0) throw InitialTangencyViolation("n0 is parallel to b; cannot project onto tangent plane");
    state.n = tangent.normalized();
    return state;
}

/// Number of steps from t0 to t_end; the last one may be shorter than dt.
inline std::int64_t step_count(double t0, const IntegratorConfig& cfg)
{
    return static_cast<std::int64_t>(std::ceil((cfg.t_end - t0) / cfg.dt * (1.0 - 1e-12)));
}

/// Integrates from state0 to cfg.t_end. The last step is shortened to land on
/// t_end. Records every `record_every`-th step plus the final state; the
/// invariant summary covers every step. Leaving the domain ends the run early
/// with the reason recorded.
inline Trajectory integrate_trajectory(const TtpState& state0, const FieldProvider& provider,
                                       const IntegratorConfig& cfg, int record_every = 1)
{
    validate(cfg, state0.t);
    if (record_every < 1) throw ValidationError("record stride must be >= 1");
    TtpState state = prepare_initial_state(state0, provider, cfg);

    Trajectory traj;
    auto& sum = traj.summary;
    auto account = [&](const TrajectoryRecord& rec) {
        sum.max_norm_err = std::max(sum.max_norm_err, rec.norm_err);
        sum.max_abs_n_dot_b = std::max(sum.max_abs_n_dot_b, std::abs(rec.n_dot_b));
        sum.max_constraint_residual = std::max(sum.max_constraint_residual, rec.constraint_residual);
        sum.max_abs_divergence = std::max(sum.max_abs_divergence, std::abs(rec.divergence));
        if (rec.degenerate) ++sum.degenerate_steps;
        sum.t_final = rec.t;
    };

    const double t0 = state.t;
    const std::int64_t n_steps = step_count(t0, cfg);
    {
        const TrajectoryRecord rec = make_record(state, provider.sample(state.r, state.t), cfg);
        account(rec);
        traj.records.push_back(rec);
    }
    for (std::int64_t k = 1; k <= n_steps; ++k) {
        const double t_next = k == n_steps ? cfg.t_end : t0 + static_cast<double>(k) * cfg.dt;
        StepResult res;
        TrajectoryRecord rec;
        try {
            res = advance(state, provider, cfg, t_next - state.t, k);
            res.state.t = t_next;
            rec = make_record(res.state, provider.sample(res.state.r, res.state.t), cfg, res.flags);
        } catch (const OutOfDomain& e) {
            sum.termination_reason = std::string("out_of_domain: ") + e.what();
            return traj;
        } catch (const NegativePressure& e) {
            sum.termination_reason = std::string("negative_pressure: ") + e.what();
            return traj;
        }
        state = res.state;
        ++sum.steps;
        account(rec);
        if (k % record_every == 0 || k == n_steps) traj.records.push_back(rec);
    }
    sum.completed = true;
    sum.termination_reason = "completed";
    return traj;
}

} // namespace ttp
