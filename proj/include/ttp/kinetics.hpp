#pragma once

// Thermal tracer particle kinematics: isobaric normal, thermal speed,
// relative velocity, and the rotation rate of the relative-velocity direction.

#include <cmath>
#include <optional>
#include <sstream>

#include "ttp/fields.hpp"

namespace ttp {

/// Reduced particle state. The relative velocity is u = beta * v_th * n.
struct TtpState {
    double t = 0.0;
    Vec3 r = Vec3::Zero();
    Vec3 n = Vec3::UnitX();
    double beta = 1.0;

    bool operator==(const TtpState&) const = default;
};

enum class OmegaRoute { direct, decomposed };

inline std::string to_string(OmegaRoute r) { return r == OmegaRoute::direct ? "direct" : "decomposed"; }

inline OmegaRoute parse_omega_route(const std::string& s)
{
    if (s == "direct") return OmegaRoute::direct;
    if (s == "decomposed") return OmegaRoute::decomposed;
    throw ValidationError("unknown omega_route '" + s + "' (expected direct or decomposed)");
}

inline constexpr double default_eps_grad = 1e-10;

/// Unit normal b = grad p1hat / |grad p1hat| of the local isobaric surface, or
/// nullopt where |grad p1hat| <= eps_grad.
inline std::optional<Vec3> isobaric_normal(const FluidSample& s, double eps_grad = default_eps_grad)
{
    const double g = s.grad_p1hat.norm();
    if (!(g > eps_grad)) return std::nullopt;
    return Vec3(s.grad_p1hat / g);
}

/// v_th = sqrt(2 p1hat).
inline double thermal_velocity(const FluidSample& s)
{
    if (s.p1hat < 0.0) {
        std::ostringstream os;
        os.precision(17);
        os << "thermal velocity undefined for p1hat = " << s.p1hat;
        throw NegativePressure(os.str());
    }
    return std::sqrt(2.0 * s.p1hat);
}

// n is a direction; its stored norm may drift by rounding, which must not leak
// into the speed.
inline Vec3 relative_velocity(const TtpState& state, const FluidSample& s)
{
    return state.beta * thermal_velocity(s) * state.n.normalized();
}

/// Total rate of change of b seen by a point moving with velocity w:
/// (1 - bb)(d_t g + H w) / |g|.
inline Vec3 normal_rate(const FluidSample& s, const Vec3& b, const Vec3& w)
{
    const Vec3 raw = (s.dt_grad_p1hat + s.hess_p1hat * w) / s.grad_p1hat.norm();
    return raw - b.dot(raw) * b;
}

struct OmegaResult {
    Vec3 omega = Vec3::Zero();
    Vec3 b = Vec3::Zero();  // zero when degenerate
    bool degenerate = false;
};

/// Omega = b x db/dt along the particle path, which moves at V + u.
/// Where the pressure gradient vanishes Omega is set to zero and flagged.
inline OmegaResult omega_direct(const FluidSample& s, const TtpState& state, double eps_grad = default_eps_grad)
{
    OmegaResult out;
    const auto b = isobaric_normal(s, eps_grad);
    if (!b) {
        out.degenerate = true;
        return out;
    }
    out.b = *b;
    const Vec3 w = s.V + relative_velocity(state, s);
    out.omega = b->cross(normal_rate(s, *b, w));
    return out;
}

/// Term-by-term evaluation of the split of Omega into a fluid-convective part
/// and the closed form claimed for b x (u . grad) b.
struct OmegaBreakdown {
    Vec3 b = Vec3::Zero();
    Vec3 omega_direct = Vec3::Zero();
    Vec3 omega_decomposed = Vec3::Zero();
    Vec3 term_convective = Vec3::Zero();          // b x Db/Dt, Db/Dt = d_t b + (V . grad) b
    Vec3 term_vorticity = Vec3::Zero();           // -xi . (1 - bb)
    Vec3 term_pressure_velocity = Vec3::Zero();   // [b x grad(g . V) - b x (g . grad) V] / |g|
    Vec3 term_relative_advection = Vec3::Zero();  // b x (u . grad) b, evaluated directly
    double residual = 0.0;                        // |omega_direct - omega_decomposed|
};

inline OmegaBreakdown omega_decomposed(const FluidSample& s, const TtpState& state,
                                       double eps_grad = default_eps_grad)
{
    const auto bn = isobaric_normal(s, eps_grad);
    if (!bn) throw DegenerateGradient("pressure gradient below eps_grad; isobaric normal undefined");
    const Vec3& b = *bn;
    const Vec3& g = s.grad_p1hat;
    const double gnorm = g.norm();
    const Vec3 u = relative_velocity(state, s);

    OmegaBreakdown out;
    out.b = b;
    out.omega_direct = b.cross(normal_rate(s, b, s.V + u));
    out.term_convective = b.cross(normal_rate(s, b, s.V));
    out.term_vorticity = -(s.xi - s.xi.dot(b) * b);
    const Vec3 grad_gV = s.hess_p1hat * s.V + s.gradV * g;
    const Vec3 g_dot_grad_V = s.gradV.transpose() * g;
    out.term_pressure_velocity = (b.cross(grad_gV) - b.cross(g_dot_grad_V)) / gnorm;
    out.term_relative_advection = b.cross((s.hess_p1hat * u - b.dot(s.hess_p1hat * u) * b) / gnorm);
    out.omega_decomposed = out.term_convective + out.term_vorticity + out.term_pressure_velocity;
    out.residual = (out.omega_direct - out.omega_decomposed).norm();
    return out;
}

/// Omega by the selected route; degenerate points give zero, flagged.
inline OmegaResult rotation_rate(const FluidSample& s, const TtpState& state, double eps_grad, OmegaRoute route)
{
    if (route == OmegaRoute::direct) return omega_direct(s, state, eps_grad);
    OmegaResult out;
    const auto b = isobaric_normal(s, eps_grad);
    if (!b) {
        out.degenerate = true;
        return out;
    }
    const OmegaBreakdown d = omega_decomposed(s, state, eps_grad);
    out.b = d.b;
    out.omega = d.omega_decomposed;
    return out;
}

struct StateDerivative {
    Vec3 dr_dt = Vec3::Zero();
    Vec3 dn_dt = Vec3::Zero();
    Vec3 omega = Vec3::Zero();
    bool degenerate = false;
};

inline StateDerivative state_rhs(const FluidSample& s, const TtpState& state, double eps_grad = default_eps_grad,
                                 OmegaRoute route = OmegaRoute::direct)
{
    const OmegaResult om = rotation_rate(s, state, eps_grad, route);
    StateDerivative d;
    d.dr_dt = s.V + relative_velocity(state, s);
    d.omega = om.omega;
    d.dn_dt = om.omega.cross(state.n);
    d.degenerate = om.degenerate;
    return d;
}

inline StateDerivative state_rhs(const TtpState& state, const FieldProvider& provider,
                                 double eps_grad = default_eps_grad, OmegaRoute route = OmegaRoute::direct)
{
    return state_rhs(provider.sample(state.r, state.t), state, eps_grad, route);
}

/// Phase-space divergence of the reduced (r, n) vector field with the direct
/// Omega: div_r(V + u) plus the surface divergence of Omega x n on the unit
/// sphere. Reported as a diagnostic; zero where b is degenerate and v_th = 0.
inline double reduced_divergence(const FluidSample& s, const TtpState& state, double eps_grad = default_eps_grad)
{
    const double vth = thermal_velocity(s);
    double div = s.gradV.trace();
    if (vth > 0.0) div += state.beta * s.grad_p1hat.dot(state.n) / vth;

    const auto b = isobaric_normal(s, eps_grad);
    if (!b) return div;
    // d Omega / d n = (beta v_th / |g|) [b]x (1 - bb) H
    const Mat3 P = Mat3::Identity() - *b * b->transpose();
    Mat3 bx;
    bx << 0.0, -b->z(), b->y(), b->z(), 0.0, -b->x(), -b->y(), b->x(), 0.0;
    const Mat3 M = (state.beta * vth / s.grad_p1hat.norm()) * bx * P * s.hess_p1hat;
    const Vec3 n = state.n.normalized();
    const Vec3 a = std::abs(n.z()) > 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
    const Vec3 e1 = a.cross(n).normalized();
    const Vec3 e2 = n.cross(e1);
    for (const Vec3& e : {e1, e2}) div += e.dot((M * e).cross(n));
    return div;
}

} // namespace ttp
