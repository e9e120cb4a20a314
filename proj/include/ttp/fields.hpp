#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ttp/errors.hpp"

namespace ttp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Local state of the prescribed fluid at one (r, t).
///
/// Index convention for `gradV`: gradV(i, j) = dV_j / dx_i, so the directional
/// derivative (a . grad) V is gradV^T a.
struct FluidSample {
    Vec3 V = Vec3::Zero();
    Mat3 gradV = Mat3::Zero();
    Vec3 xi = Vec3::Zero();  // vorticity, curl V
    double p1hat = 0.0;      // normalized kinetic pressure
    Vec3 grad_p1hat = Vec3::Zero();
    Mat3 hess_p1hat = Mat3::Zero();
    Vec3 dt_grad_p1hat = Vec3::Zero();
};

/// xi_k = eps_kij dV_j/dx_i, evaluated from a velocity-gradient tensor.
inline Vec3 curl_from_gradient(const Mat3& gradV)
{
    return {gradV(1, 2) - gradV(2, 1), gradV(2, 0) - gradV(0, 2), gradV(0, 1) - gradV(1, 0)};
}

struct Box {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();

    bool contains(const Vec3& r, double margin = 0.0) const
    {
        for (int i = 0; i < 3; ++i) {
            if (!(r[i] >= lo[i] + margin && r[i] <= hi[i] - margin)) return false;
        }
        return true;
    }

    std::string to_string() const
    {
        std::ostringstream os;
        os.precision(17);
        os << "[" << lo.x() << ", " << hi.x() << "] x [" << lo.y() << ", " << hi.y() << "] x [" << lo.z()
           << ", " << hi.z() << "]";
        return os.str();
    }

    bool operator==(const Box&) const = default;
};

inline std::string format_point(const Vec3& r)
{
    std::ostringstream os;
    os.precision(17);
    os << "(" << r.x() << ", " << r.y() << ", " << r.z() << ")";
    return os.str();
}

struct FieldProviderDescriptor {
    std::string name;
    std::map<std::string, double> parameters;
    bool time_dependent = false;
    std::optional<Box> domain_bounds;  // nullopt = unbounded
    // Earliest time at which the fields are defined; -inf when unrestricted.
    double t_min = -std::numeric_limits<double>::infinity();
    // Interior region used when a sweep draws random evaluation points.
    Box sample_box;
    std::string pressure_model;
    // Set for fields whose p1hat Hessian jumps across cell faces.
    bool hessian_discontinuous = false;
};

/// Immutable source of fluid fields. sample() is safe to call concurrently.
class FieldProvider {
public:
    virtual ~FieldProvider() = default;

    const FieldProviderDescriptor& descriptor() const noexcept { return descriptor_; }
    const std::string& name() const noexcept { return descriptor_.name; }

    bool in_domain(const Vec3& r, double t, double margin = 0.0) const
    {
        if (!(t >= descriptor_.t_min)) return false;
        return !descriptor_.domain_bounds || descriptor_.domain_bounds->contains(r, margin);
    }

    void check_domain(const Vec3& r, double t, double margin = 0.0) const
    {
        if (in_domain(r, t, margin)) return;
        std::ostringstream os;
        os.precision(17);
        os << name() << ": point " << format_point(r) << " at t=" << t << " outside domain ";
        os << (descriptor_.domain_bounds ? descriptor_.domain_bounds->to_string() : std::string("unbounded"));
        if (std::isfinite(descriptor_.t_min)) os << " with t >= " << descriptor_.t_min;
        if (margin > 0.0) os << " (required clearance " << margin << ")";
        throw OutOfDomain(os.str());
    }

    FluidSample sample(const Vec3& r, double t) const
    {
        check_domain(r, t);
        FluidSample s = evaluate(r, t);
        if (s.p1hat < 0.0) {
            std::ostringstream os;
            os.precision(17);
            os << name() << ": p1hat = " << s.p1hat << " < 0 at " << format_point(r);
            throw NegativePressure(os.str());
        }
        return s;
    }

protected:
    explicit FieldProvider(FieldProviderDescriptor d) : descriptor_(std::move(d)) {}

    // r and t are already inside the domain.
    virtual FluidSample evaluate(const Vec3& r, double t) const = 0;

private:
    FieldProviderDescriptor descriptor_;
};

using ProviderPtr = std::shared_ptr<const FieldProvider>;
using ParameterMap = std::map<std::string, double>;

/// Name -> (descriptor with default parameters, factory).
class FieldRegistry {
public:
    using Factory = std::function<ProviderPtr(const ParameterMap&)>;

    void add(FieldProviderDescriptor descriptor, Factory factory)
    {
        const std::string key = descriptor.name;
        if (entries_.count(key)) throw ValidationError("field provider '" + key + "' already registered");
        entries_.emplace(key, Entry{std::move(descriptor), std::move(factory)});
    }

    const FieldProviderDescriptor& lookup(const std::string& name) const { return entry(name).descriptor; }

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }

    /// Builds a provider, overriding any subset of its default parameters.
    ProviderPtr make(const std::string& name, const ParameterMap& overrides = {}) const
    {
        const Entry& e = entry(name);
        ParameterMap params = e.descriptor.parameters;
        for (const auto& [key, value] : overrides) {
            auto it = params.find(key);
            if (it == params.end())
                throw ValidationError("field '" + name + "' has no parameter '" + key + "'");
            it->second = value;
        }
        return e.factory(params);
    }

    std::vector<FieldProviderDescriptor> list() const
    {
        std::vector<FieldProviderDescriptor> out;
        for (const auto& [name, e] : entries_) out.push_back(e.descriptor);
        return out;
    }

private:
    struct Entry {
        FieldProviderDescriptor descriptor;
        Factory factory;
    };

    const Entry& entry(const std::string& name) const
    {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw NotFound("no field provider named '" + name + "'");
        return it->second;
    }

    std::map<std::string, Entry> entries_;
};

} // namespace ttp
