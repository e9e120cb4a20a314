#pragma once

// Steady gridded fields on a uniform rectilinear grid.
//
// File format (text):
//   TTPGRID 1
//   dims nx ny nz
//   origin ox oy oz
//   spacing dx dy dz
//   fields V p1hat
//   nx*ny*nz records "Vx Vy Vz p1hat", x fastest, then y, then z.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ttp/fields.hpp"

namespace ttp {

enum class Interpolation { tricubic, trilinear };

inline std::string to_string(Interpolation i) { return i == Interpolation::tricubic ? "tricubic" : "trilinear"; }

inline Interpolation parse_interpolation(const std::string& s)
{
    if (s == "tricubic") return Interpolation::tricubic;
    if (s == "trilinear") return Interpolation::trilinear;
    throw ValidationError("unknown interpolation '" + s + "' (expected tricubic or trilinear)");
}

struct GridGeometry {
    std::array<int, 3> dims{};
    Vec3 origin = Vec3::Zero();
    Vec3 spacing = Vec3::Ones();

    std::size_t node_count() const
    {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
    }

    Vec3 upper() const
    {
        return origin + Vec3(spacing.x() * (dims[0] - 1), spacing.y() * (dims[1] - 1), spacing.z() * (dims[2] - 1));
    }

    Vec3 node(int i, int j, int k) const
    {
        return origin + Vec3(spacing.x() * i, spacing.y() * j, spacing.z() * k);
    }
};

/// One grid node: velocity and pressure.
struct GridRecord {
    Vec3 V = Vec3::Zero();
    double p1hat = 0.0;
};

namespace detail {

// Weights of a 1D interpolant over its stencil, with first and second
// derivatives in the local coordinate t in [0, 1].
struct Weights1D {
    std::array<double, 4> w{}, dw{}, d2w{};
    int first = 0;  // grid index of stencil entry 0
    int size = 0;
};

// Catmull-Rom (Keys, a = -1/2) over nodes i-1 .. i+2. Reproduces quadratics.
inline Weights1D catmull_rom(int i, double t)
{
    Weights1D out;
    const double t2 = t * t, t3 = t2 * t;
    out.first = i - 1;
    out.size = 4;
    out.w = {0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2), 0.5 * (-3 * t3 + 4 * t2 + t), 0.5 * (t3 - t2)};
    out.dw = {0.5 * (-3 * t2 + 4 * t - 1), 0.5 * (9 * t2 - 10 * t), 0.5 * (-9 * t2 + 8 * t + 1), 0.5 * (3 * t2 - 2 * t)};
    out.d2w = {0.5 * (-6 * t + 4), 0.5 * (18 * t - 10), 0.5 * (-18 * t + 8), 0.5 * (6 * t - 2)};
    return out;
}

inline Weights1D linear(int i, double t)
{
    Weights1D out;
    out.first = i;
    out.size = 2;
    out.w = {1.0 - t, t, 0.0, 0.0};
    out.dw = {-1.0, 1.0, 0.0, 0.0};
    return out;
}

inline bool parse_double(std::string_view tok, double& out)
{
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc() && ptr == end;
}

inline bool parse_int(std::string_view tok, int& out)
{
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc() && ptr == end;
}

inline std::vector<std::string> split_ws(const std::string& line)
{
    std::istringstream is(line);
    std::vector<std::string> out;
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

} // namespace detail

class GridField final : public FieldProvider {
public:
    GridField(GridGeometry geometry, std::vector<GridRecord> records, Interpolation interp, std::string source = {})
        : FieldProvider(make_descriptor(geometry, interp, source)),
          geom_(geometry),
          interp_(interp),
          records_(std::move(records))
    {
        const int min_nodes = interp == Interpolation::tricubic ? 3 : 2;
        for (int a = 0; a < 3; ++a) {
            if (geom_.dims[a] < min_nodes)
                throw ValidationError(to_string(interp) + " interpolation needs at least " +
                                      std::to_string(min_nodes) + " nodes per axis");
            if (!(geom_.spacing[a] > 0.0)) throw ValidationError("grid spacing must be positive");
        }
        if (records_.size() != geom_.node_count())
            throw ParseError("grid has " + std::to_string(records_.size()) + " records, expected " +
                             std::to_string(geom_.node_count()));
    }

    /// Builds a grid from explicit node coordinates, which must be equally
    /// spaced on every axis.
    static std::shared_ptr<GridField> from_nodes(const std::array<std::vector<double>, 3>& coords,
                                                 std::vector<GridRecord> records, Interpolation interp)
    {
        GridGeometry g;
        for (int a = 0; a < 3; ++a) {
            const auto& c = coords[a];
            if (c.size() < 2) throw ValidationError("each axis needs at least two nodes");
            const double h = (c.back() - c.front()) / static_cast<double>(c.size() - 1);
            for (std::size_t i = 1; i < c.size(); ++i) {
                if (std::abs((c[i] - c[i - 1]) - h) > 1e-9 * std::abs(h))
                    throw NonUniformSpacing("axis " + std::to_string(a) + " is not uniformly spaced at node " +
                                            std::to_string(i));
            }
            g.dims[a] = static_cast<int>(c.size());
            g.origin[a] = c.front();
            g.spacing[a] = h;
        }
        return std::make_shared<GridField>(g, std::move(records), interp);
    }

    const GridGeometry& geometry() const noexcept { return geom_; }
    Interpolation interpolation() const noexcept { return interp_; }
    const std::vector<GridRecord>& records() const noexcept { return records_; }

    static FieldProviderDescriptor make_descriptor(const GridGeometry& g, Interpolation interp, const std::string& src)
    {
        FieldProviderDescriptor d;
        d.name = src.empty() ? "grid" : "grid:" + src;
        d.parameters = {{"nx", g.dims[0]}, {"ny", g.dims[1]}, {"nz", g.dims[2]}};
        d.time_dependent = false;
        d.domain_bounds = Box{g.origin, g.upper()};
        const Vec3 pad = 0.1 * (g.upper() - g.origin);
        d.sample_box = Box{g.origin + pad, g.upper() - pad};
        d.pressure_model = "interpolated (" + to_string(interp) + ")";
        d.hessian_discontinuous = true;
        return d;
    }

protected:
    FluidSample evaluate(const Vec3& r, double) const override
    {
        std::array<detail::Weights1D, 3> wt;
        for (int a = 0; a < 3; ++a) {
            const double u = (r[a] - geom_.origin[a]) / geom_.spacing[a];
            int cell = static_cast<int>(std::floor(u));
            cell = std::clamp(cell, 0, geom_.dims[a] - 2);
            const double t = u - cell;
            wt[a] = interp_ == Interpolation::tricubic ? detail::catmull_rom(cell, t) : detail::linear(cell, t);
        }

        // Accumulate value, gradient and (for p1hat) Hessian in local units.
        std::array<double, 4> val{};
        std::array<Vec3, 4> grad{};
        for (auto& gv : grad) gv.setZero();
        Mat3 hess = Mat3::Zero();

        for (int c = 0; c < wt[2].size; ++c) {
            const int k = wt[2].first + c;
            for (int b = 0; b < wt[1].size; ++b) {
                const int j = wt[1].first + b;
                for (int a = 0; a < wt[0].size; ++a) {
                    const int i = wt[0].first + a;
                    const std::array<double, 4> f = node_values(i, j, k);
                    const double wx = wt[0].w[a], wy = wt[1].w[b], wz = wt[2].w[c];
                    const double dx = wt[0].dw[a], dy = wt[1].dw[b], dz = wt[2].dw[c];
                    const double w = wx * wy * wz;
                    const Vec3 dwv(dx * wy * wz, wx * dy * wz, wx * wy * dz);
                    for (int m = 0; m < 4; ++m) {
                        val[m] += w * f[m];
                        grad[m] += f[m] * dwv;
                    }
                    const double p = f[3];
                    hess(0, 0) += p * wt[0].d2w[a] * wy * wz;
                    hess(1, 1) += p * wx * wt[1].d2w[b] * wz;
                    hess(2, 2) += p * wx * wy * wt[2].d2w[c];
                    hess(0, 1) += p * dx * dy * wz;
                    hess(0, 2) += p * dx * wy * dz;
                    hess(1, 2) += p * wx * dy * dz;
                }
            }
        }

        const Vec3 inv = geom_.spacing.cwiseInverse();
        FluidSample s;
        s.V = Vec3(val[0], val[1], val[2]);
        for (int m = 0; m < 3; ++m) s.gradV.col(m) = grad[m].cwiseProduct(inv);
        s.xi = curl_from_gradient(s.gradV);
        s.p1hat = val[3];
        s.grad_p1hat = grad[3].cwiseProduct(inv);
        hess(1, 0) = hess(0, 1);
        hess(2, 0) = hess(0, 2);
        hess(2, 1) = hess(1, 2);
        s.hess_p1hat = inv.asDiagonal() * hess * inv.asDiagonal();
        return s;
    }

private:
    // Node values with quadratic extrapolation one node past each face.
    std::array<double, 4> node_values(int i, int j, int k) const
    {
        const std::array<int, 3> idx{i, j, k};
        for (int a = 0; a < 3; ++a) {
            const int n = geom_.dims[a];
            if (idx[a] < 0 || idx[a] >= n) {
                const int base = idx[a] < 0 ? 0 : n - 1;
                const int step = idx[a] < 0 ? 1 : -1;
                std::array<int, 3> i0 = idx, i1 = idx, i2 = idx;
                i0[a] = base;
                i1[a] = base + step;
                i2[a] = base + 2 * step;
                const auto f0 = node_values(i0[0], i0[1], i0[2]);
                const auto f1 = node_values(i1[0], i1[1], i1[2]);
                const auto f2 = node_values(i2[0], i2[1], i2[2]);
                std::array<double, 4> out{};
                for (int m = 0; m < 4; ++m) out[m] = 3.0 * f0[m] - 3.0 * f1[m] + f2[m];
                return out;
            }
        }
        const auto& rec = records_[(static_cast<std::size_t>(k) * geom_.dims[1] + j) * geom_.dims[0] + i];
        return {rec.V.x(), rec.V.y(), rec.V.z(), rec.p1hat};
    }

    GridGeometry geom_;
    Interpolation interp_;
    std::vector<GridRecord> records_;
};

/// Parses a grid file from a stream. `source` only labels error messages.
inline std::shared_ptr<GridField> read_grid(std::istream& in, Interpolation interp = Interpolation::tricubic,
                                            const std::string& source = "grid")
{
    auto fail = [&](int line, const std::string& what) -> ParseError {
        return ParseError(source + ":" + std::to_string(line) + ": " + what);
    };
    std::string line;
    std::vector<std::vector<std::string>> header;
    for (int n = 1; n <= 5; ++n) {
        if (!std::getline(in, line)) throw fail(n, "unexpected end of file in header");
        header.push_back(detail::split_ws(line));
    }
    if (header[0] != std::vector<std::string>{"TTPGRID", "1"}) throw fail(1, "expected 'TTPGRID 1'");

    GridGeometry g;
    auto expect_triple = [&](int n, const char* key) {
        const auto& tok = header[n - 1];
        if (tok.size() != 4 || tok[0] != key) throw fail(n, std::string("expected '") + key + " a b c'");
        return std::array<std::string, 3>{tok[1], tok[2], tok[3]};
    };
    const auto dims = expect_triple(2, "dims");
    for (int a = 0; a < 3; ++a) {
        if (!detail::parse_int(dims[a], g.dims[a]) || g.dims[a] <= 0)
            throw fail(2, "dims must be positive integers");
    }
    const auto origin = expect_triple(3, "origin");
    for (int a = 0; a < 3; ++a) {
        if (!detail::parse_double(origin[a], g.origin[a])) throw fail(3, "origin must be real numbers");
    }
    const auto spacing = expect_triple(4, "spacing");
    for (int a = 0; a < 3; ++a) {
        if (!detail::parse_double(spacing[a], g.spacing[a]) || !(g.spacing[a] > 0.0))
            throw fail(4, "spacing must be positive reals");
    }
    if (header[4] != std::vector<std::string>{"fields", "V", "p1hat"}) throw fail(5, "expected 'fields V p1hat'");

    const std::size_t count = g.node_count();
    std::vector<GridRecord> records;
    records.reserve(count);
    std::vector<double> pending;
    int lineno = 5;
    while (std::getline(in, line)) {
        ++lineno;
        for (const auto& tok : detail::split_ws(line)) {
            double v = 0.0;
            if (!detail::parse_double(tok, v)) throw fail(lineno, "bad number '" + tok + "'");
            pending.push_back(v);
            if (pending.size() == 4) {
                if (records.size() == count) throw fail(lineno, "more records than dims declare");
                records.push_back(GridRecord{Vec3(pending[0], pending[1], pending[2]), pending[3]});
                pending.clear();
            }
        }
    }
    if (!pending.empty()) throw fail(lineno, "truncated record");
    if (records.size() != count)
        throw fail(lineno, "value count mismatch: " + std::to_string(records.size()) + " records, expected " +
                               std::to_string(count));
    return std::make_shared<GridField>(g, std::move(records), interp, source);
}

inline std::shared_ptr<GridField> load_grid(const std::string& path, Interpolation interp = Interpolation::tricubic)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open grid file '" + path + "'");
    return read_grid(in, interp, path);
}

/// Samples `provider` at time t on the given geometry and writes a grid file.
inline void write_grid(std::ostream& out, const FieldProvider& provider, const GridGeometry& g, double t = 0.0)
{
    char buf[128];
    out << "TTPGRID 1\n";
    out << "dims " << g.dims[0] << ' ' << g.dims[1] << ' ' << g.dims[2] << '\n';
    std::snprintf(buf, sizeof buf, "origin %.17g %.17g %.17g\n", g.origin.x(), g.origin.y(), g.origin.z());
    out << buf;
    std::snprintf(buf, sizeof buf, "spacing %.17g %.17g %.17g\n", g.spacing.x(), g.spacing.y(), g.spacing.z());
    out << buf;
    out << "fields V p1hat\n";
    for (int k = 0; k < g.dims[2]; ++k) {
        for (int j = 0; j < g.dims[1]; ++j) {
            for (int i = 0; i < g.dims[0]; ++i) {
                const FluidSample s = provider.sample(g.node(i, j, k), t);
                std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", s.V.x(), s.V.y(), s.V.z(), s.p1hat);
                out << buf;
            }
        }
    }
}

} // namespace ttp
