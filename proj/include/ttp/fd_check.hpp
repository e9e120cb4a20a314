#pragma once

// Central-difference audit of the derivatives a provider reports.

#include <algorithm>
#include <cmath>

#include "ttp/fields.hpp"

namespace ttp {

/// Relative errors ||analytic - fd||_inf / ||analytic||_inf per derivative.
/// A derivative whose analytic value and estimate are both zero scores 0.
struct DerivativeResiduals {
    double gradV = 0.0;
    double grad_p1hat = 0.0;
    double hess_p1hat = 0.0;
    double dt_grad_p1hat = 0.0;
    double h = 0.0;

    double max() const { return std::max({gradV, grad_p1hat, hess_p1hat, dt_grad_p1hat}); }
};

namespace detail {

template <class A, class B>
double relative_inf(const A& analytic, const B& estimate)
{
    const double diff = (analytic - estimate).cwiseAbs().maxCoeff();
    if (diff == 0.0) return 0.0;
    const double scale = analytic.cwiseAbs().maxCoeff();
    // A vanishing analytic value with a nonzero estimate is reported as an
    // absolute error.
    return scale > 0.0 ? diff / scale : diff;
}

} // namespace detail

/// Estimates gradV, grad p1hat, the Hessian and d/dt grad p1hat from sample()
/// values at r +- h e_i and t +- h, and compares with the provider's own
/// derivatives. The time difference is skipped for steady providers.
inline DerivativeResiduals fd_verify_derivatives(const FieldProvider& provider, const Vec3& r, double t, double h)
{
    if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
    provider.check_domain(r, t, 2.0 * h);
    if (provider.descriptor().time_dependent && !(t - 2.0 * h >= provider.descriptor().t_min))
        throw OutOfDomain(provider.name() + ": t - 2h precedes the field's validity interval");

    const FluidSample s0 = provider.sample(r, t);
    Mat3 gradV_fd, hess_fd;
    Vec3 grad_fd;
    for (int i = 0; i < 3; ++i) {
        Vec3 e = Vec3::Zero();
        e[i] = h;
        const FluidSample sp = provider.sample(r + e, t);
        const FluidSample sm = provider.sample(r - e, t);
        gradV_fd.row(i) = ((sp.V - sm.V) / (2.0 * h)).transpose();
        grad_fd[i] = (sp.p1hat - sm.p1hat) / (2.0 * h);
        hess_fd.row(i) = ((sp.grad_p1hat - sm.grad_p1hat) / (2.0 * h)).transpose();
    }
    Vec3 dt_fd = Vec3::Zero();
    if (provider.descriptor().time_dependent) {
        const FluidSample tp = provider.sample(r, t + h);
        const FluidSample tm = provider.sample(r, t - h);
        dt_fd = (tp.grad_p1hat - tm.grad_p1hat) / (2.0 * h);
    }

    DerivativeResiduals out;
    out.h = h;
    out.gradV = detail::relative_inf(s0.gradV, gradV_fd);
    out.grad_p1hat = detail::relative_inf(s0.grad_p1hat, grad_fd);
    out.hess_p1hat = detail::relative_inf(s0.hess_p1hat, hess_fd);
    out.dt_grad_p1hat = detail::relative_inf(s0.dt_grad_p1hat, dt_fd);
    return out;
}

} // namespace ttp
