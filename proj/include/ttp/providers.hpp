#pragma once

// Closed-form field providers and the builtin registry.
//
// Every provider returns exact derivatives of its own formulas; the vorticity
// is coded from its own closed form rather than from gradV so that the two
// can be cross-checked.

#include <cmath>
#include <numbers>

#include "ttp/fields.hpp"

namespace ttp {

namespace detail {

inline double param(const ParameterMap& p, const std::string& key)
{
    auto it = p.find(key);
    if (it == p.end()) throw ValidationError("missing parameter '" + key + "'");
    return it->second;
}

} // namespace detail

/// Constant velocity V0 with p1hat = p0 + g . r (g defaults to zero, which
/// leaves the isobaric normal undefined everywhere).
class UniformField final : public FieldProvider {
public:
    explicit UniformField(const ParameterMap& p)
        : FieldProvider(make_descriptor(p)),
          V0_(detail::param(p, "vx"), detail::param(p, "vy"), detail::param(p, "vz")),
          p0_(detail::param(p, "p1hat")),
          g_(detail::param(p, "gx"), detail::param(p, "gy"), detail::param(p, "gz"))
    {
    }

    const Vec3& velocity() const noexcept { return V0_; }
    double base_pressure() const noexcept { return p0_; }
    const Vec3& pressure_gradient() const noexcept { return g_; }

    static FieldProviderDescriptor make_descriptor(const ParameterMap& p)
    {
        FieldProviderDescriptor d;
        d.name = "uniform";
        d.parameters = p;
        d.time_dependent = false;
        d.sample_box = Box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
        d.pressure_model = "p1hat = p1hat + (gx,gy,gz).r";
        return d;
    }

    static ParameterMap defaults()
    {
        return {{"vx", 1.0}, {"vy", 0.0}, {"vz", 0.0}, {"p1hat", 1.0}, {"gx", 0.0}, {"gy", 0.0}, {"gz", 0.0}};
    }

protected:
    FluidSample evaluate(const Vec3& r, double) const override
    {
        FluidSample s;
        s.V = V0_;
        s.p1hat = p0_ + g_.dot(r);
        s.grad_p1hat = g_;
        return s;
    }

private:
    Vec3 V0_;
    double p0_;
    Vec3 g_;
};

/// Solid-body rotation V = w x r with axisymmetric pressure
/// p1hat = p0 + c/2 |r_perp|^2, r_perp the component of r normal to w.
class RigidRotationField final : public FieldProvider {
public:
    explicit RigidRotationField(const ParameterMap& p)
        : FieldProvider(make_descriptor(p)),
          omega_(detail::param(p, "wx"), detail::param(p, "wy"), detail::param(p, "wz")),
          p0_(detail::param(p, "p0")),
          c_(detail::param(p, "c"))
    {
        if (omega_.norm() == 0.0) throw ValidationError("rigid_rotation: angular velocity must be nonzero");
        if (p0_ < 0.0 || c_ < 0.0) throw ValidationError("rigid_rotation: p0 and c must be non-negative");
        axis_ = omega_.normalized();
        projector_ = Mat3::Identity() - axis_ * axis_.transpose();
    }

    const Vec3& angular_velocity() const noexcept { return omega_; }
    const Vec3& axis() const noexcept { return axis_; }
    double base_pressure() const noexcept { return p0_; }
    double curvature() const noexcept { return c_; }

    static FieldProviderDescriptor make_descriptor(const ParameterMap& p)
    {
        FieldProviderDescriptor d;
        d.name = "rigid_rotation";
        d.parameters = p;
        d.time_dependent = false;
        // Keeps sweeps away from the axis, where b is undefined.
        d.sample_box = Box{Vec3(0.5, 0.5, -1.0), Vec3(2.0, 2.0, 1.0)};
        d.pressure_model = "p1hat = p0 + c/2 |r_perp|^2";
        return d;
    }

    static ParameterMap defaults()
    {
        return {{"wx", 0.0}, {"wy", 0.0}, {"wz", 1.0}, {"p0", 1.0}, {"c", 1.0}};
    }

protected:
    FluidSample evaluate(const Vec3& r, double) const override
    {
        FluidSample s;
        s.V = omega_.cross(r);
        // dV_j/dx_i = eps_jki w_k
        s.gradV << 0.0, omega_.z(), -omega_.y(),
                   -omega_.z(), 0.0, omega_.x(),
                   omega_.y(), -omega_.x(), 0.0;
        s.xi = 2.0 * omega_;
        const Vec3 r_perp = projector_ * r;
        s.p1hat = p0_ + 0.5 * c_ * r_perp.squaredNorm();
        s.grad_p1hat = c_ * r_perp;
        s.hess_p1hat = c_ * projector_;
        return s;
    }

private:
    Vec3 omega_;
    Vec3 axis_;
    Mat3 projector_;
    double p0_;
    double c_;
};

/// Taylor-Green vortex cells, V = A F(t) (cos kx sin ky, -sin kx cos ky, 0)
/// with F(t) = exp(-2 nu k^2 t). Pressure is the Navier-Stokes pressure of the
/// same flow shifted to stay positive, plus an axial ripple so the isobaric
/// normal has a z component:
///   p1hat = p0 + A^2/4 F^2 (2 - cos 2kx - cos 2ky) + q (1 - cos kz).
class TaylorGreenField final : public FieldProvider {
public:
    TaylorGreenField(const ParameterMap& p, bool steady)
        : FieldProvider(make_descriptor(p, steady)),
          A_(detail::param(p, "A")),
          k_(detail::param(p, "k")),
          nu_(steady ? 0.0 : detail::param(p, "nu")),
          p0_(detail::param(p, "p0")),
          q_(detail::param(p, "q"))
    {
        if (k_ <= 0.0) throw ValidationError("taylor_green: k must be positive");
        if (nu_ < 0.0) throw ValidationError("taylor_green: nu must be non-negative");
        if (p0_ <= 0.0 || q_ < 0.0) throw ValidationError("taylor_green: need p0 > 0 and q >= 0");
    }

    static FieldProviderDescriptor make_descriptor(const ParameterMap& p, bool steady)
    {
        FieldProviderDescriptor d;
        d.name = steady ? "taylor_green_steady" : "taylor_green";
        d.parameters = p;
        d.time_dependent = !steady;
        const double k = p.count("k") ? p.at("k") : 1.0;
        const double L = 2.0 * std::numbers::pi / k;
        d.sample_box = Box{Vec3(0.0, 0.0, -0.5 * L), Vec3(L, L, 0.5 * L)};
        d.pressure_model = "p1hat = p0 + A^2/4 F^2 (2 - cos 2kx - cos 2ky) + q (1 - cos kz)";
        return d;
    }

    static ParameterMap defaults(bool steady)
    {
        ParameterMap p{{"A", 1.0}, {"k", 1.0}, {"p0", 1.0}, {"q", 0.25}};
        if (!steady) p["nu"] = 0.05;
        return p;
    }

protected:
    FluidSample evaluate(const Vec3& r, double t) const override
    {
        const double F = std::exp(-2.0 * nu_ * k_ * k_ * t);
        const double sx = std::sin(k_ * r.x()), cx = std::cos(k_ * r.x());
        const double sy = std::sin(k_ * r.y()), cy = std::cos(k_ * r.y());
        const double a = A_ * F;

        FluidSample s;
        s.V = Vec3(a * cx * sy, -a * sx * cy, 0.0);
        s.gradV(0, 0) = -a * k_ * sx * sy;
        s.gradV(1, 0) = a * k_ * cx * cy;
        s.gradV(0, 1) = -a * k_ * cx * cy;
        s.gradV(1, 1) = a * k_ * sx * sy;
        s.xi = Vec3(0.0, 0.0, -2.0 * a * k_ * cx * cy);

        const double amp = 0.25 * a * a;
        const double c2x = std::cos(2.0 * k_ * r.x()), c2y = std::cos(2.0 * k_ * r.y());
        const double kz = k_ * r.z();
        s.p1hat = p0_ + amp * (2.0 - c2x - c2y) + q_ * (1.0 - std::cos(kz));
        const Vec3 g_xy(amp * 2.0 * k_ * std::sin(2.0 * k_ * r.x()), amp * 2.0 * k_ * std::sin(2.0 * k_ * r.y()),
                        0.0);
        s.grad_p1hat = g_xy + Vec3(0.0, 0.0, q_ * k_ * std::sin(kz));
        s.hess_p1hat(0, 0) = amp * 4.0 * k_ * k_ * c2x;
        s.hess_p1hat(1, 1) = amp * 4.0 * k_ * k_ * c2y;
        s.hess_p1hat(2, 2) = q_ * k_ * k_ * std::cos(kz);
        // amp scales as F^2, so d/dt amp = -4 nu k^2 amp.
        s.dt_grad_p1hat = -4.0 * nu_ * k_ * k_ * g_xy;
        return s;
    }

private:
    double A_, k_, nu_, p0_, q_;
};

/// Lamb-Oseen vortex along z with a uniform axial stream w:
///   V = f(s) (-y, x, 0) + (0, 0, w),  f(s) = Gamma/(2 pi s) (1 - exp(-s/a)),
///   s = x^2 + y^2,  a(t) = 4 nu (t + t0).
/// Pressure is a Gaussian core depression that spreads with the vortex:
///   p1hat = p0 - dp exp(-s/a).
/// Defined for t > -t0.
class LambOseenField final : public FieldProvider {
public:
    explicit LambOseenField(const ParameterMap& p)
        : FieldProvider(make_descriptor(p)),
          gamma_(detail::param(p, "gamma")),
          nu_(detail::param(p, "nu")),
          t0_(detail::param(p, "t0")),
          w_(detail::param(p, "w")),
          p0_(detail::param(p, "p0")),
          dp_(detail::param(p, "dp"))
    {
        if (nu_ <= 0.0) throw ValidationError("lamb_oseen: nu must be positive");
        if (dp_ < 0.0 || dp_ >= p0_) throw ValidationError("lamb_oseen: need 0 <= dp < p0");
    }

    static FieldProviderDescriptor make_descriptor(const ParameterMap& p)
    {
        FieldProviderDescriptor d;
        d.name = "lamb_oseen";
        d.parameters = p;
        d.time_dependent = true;
        d.t_min = -(p.count("t0") ? p.at("t0") : 10.0);
        d.sample_box = Box{Vec3(-1.5, -1.5, -1.0), Vec3(1.5, 1.5, 1.0)};
        d.pressure_model = "p1hat = p0 - dp exp(-(x^2+y^2)/(4 nu (t+t0)))";
        return d;
    }

    static ParameterMap defaults()
    {
        return {{"gamma", 1.0}, {"nu", 0.01}, {"t0", 10.0}, {"w", 0.1}, {"p0", 1.0}, {"dp", 0.5}};
    }

protected:
    FluidSample evaluate(const Vec3& r, double t) const override
    {
        const double a = 4.0 * nu_ * (t + t0_);
        if (!(a > 0.0)) throw OutOfDomain("lamb_oseen: t must exceed -t0");
        const double da_dt = 4.0 * nu_;
        const double x = r.x(), y = r.y();
        const double s = x * x + y * y;
        const double chi = s / a;
        const double scale = gamma_ / (2.0 * std::numbers::pi * a);
        const double f = scale * phi(chi);
        const double fp = scale / a * dphi(chi);  // df/ds

        FluidSample out;
        out.V = Vec3(-y * f, x * f, w_);
        out.gradV(0, 0) = -2.0 * x * y * fp;
        out.gradV(1, 0) = -f - 2.0 * y * y * fp;
        out.gradV(0, 1) = f + 2.0 * x * x * fp;
        out.gradV(1, 1) = 2.0 * x * y * fp;
        out.xi = Vec3(0.0, 0.0, 2.0 * f + 2.0 * s * fp);

        const double e = std::exp(-chi);
        out.p1hat = p0_ - dp_ * e;
        const double ge = dp_ * e * 2.0 / a;
        out.grad_p1hat = Vec3(ge * x, ge * y, 0.0);
        out.hess_p1hat(0, 0) = ge * (1.0 - 2.0 * x * x / a);
        out.hess_p1hat(1, 1) = ge * (1.0 - 2.0 * y * y / a);
        out.hess_p1hat(0, 1) = out.hess_p1hat(1, 0) = -ge * 2.0 * x * y / a;
        const double dge_dt = dp_ * e * 2.0 * (s - a) / (a * a * a) * da_dt;
        out.dt_grad_p1hat = Vec3(dge_dt * x, dge_dt * y, 0.0);
        return out;
    }

private:
    // (1 - e^-x) / x and its derivative, both smooth through x = 0.
    static double phi(double x) { return x == 0.0 ? 1.0 : -std::expm1(-x) / x; }

    static double dphi(double x)
    {
        if (x < 1e-2) {
            // sum_{k>=1} (-1)^k k x^(k-1) / (k+1)!
            return -0.5 + x * (1.0 / 3.0 + x * (-1.0 / 8.0 + x * (1.0 / 30.0 + x * (-1.0 / 144.0 + x / 840.0))));
        }
        return (std::exp(-x) * (x + 1.0) - 1.0) / (x * x);
    }

    double gamma_, nu_, t0_, w_, p0_, dp_;
};

/// Adds the analytic providers to `registry` and returns their descriptors.
inline std::vector<FieldProviderDescriptor> register_builtin_providers(FieldRegistry& registry)
{
    std::vector<FieldProviderDescriptor> added;
    auto add = [&](FieldProviderDescriptor d, FieldRegistry::Factory f) {
        added.push_back(d);
        registry.add(std::move(d), std::move(f));
    };
    add(UniformField::make_descriptor(UniformField::defaults()),
        [](const ParameterMap& p) { return std::make_shared<UniformField>(p); });
    add(RigidRotationField::make_descriptor(RigidRotationField::defaults()),
        [](const ParameterMap& p) { return std::make_shared<RigidRotationField>(p); });
    add(TaylorGreenField::make_descriptor(TaylorGreenField::defaults(false), false),
        [](const ParameterMap& p) { return std::make_shared<TaylorGreenField>(p, false); });
    add(TaylorGreenField::make_descriptor(TaylorGreenField::defaults(true), true),
        [](const ParameterMap& p) { return std::make_shared<TaylorGreenField>(p, true); });
    add(LambOseenField::make_descriptor(LambOseenField::defaults()),
        [](const ParameterMap& p) { return std::make_shared<LambOseenField>(p); });
    return added;
}

/// Process-wide registry preloaded with the builtins.
inline const FieldRegistry& builtin_registry()
{
    static const FieldRegistry registry = [] {
        FieldRegistry r;
        register_builtin_providers(r);
        return r;
    }();
    return registry;
}

/// Builtin providers whose fields are smooth everywhere they are sampled.
inline std::vector<std::string> smooth_builtin_names()
{
    return {"rigid_rotation", "taylor_green", "taylor_green_steady", "lamb_oseen"};
}

} // namespace ttp
