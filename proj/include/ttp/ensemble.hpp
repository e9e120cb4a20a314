#pragma once

// Tangent-circle ensembles and their velocity moments.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <random>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "ttp/integrate.hpp"

namespace ttp {

enum class Sampling { equispaced_circle, random_circle };

inline std::string to_string(Sampling s) { return s == Sampling::equispaced_circle ? "equispaced_circle" : "random_circle"; }

inline Sampling parse_sampling(const std::string& s)
{
    if (s == "equispaced_circle") return Sampling::equispaced_circle;
    if (s == "random_circle") return Sampling::random_circle;
    throw ValidationError("unknown sampling '" + s + "' (expected equispaced_circle or random_circle)");
}

struct EnsembleSpec {
    Vec3 r0 = Vec3::Zero();
    double t0 = 0.0;
    int count = 64;
    Sampling sampling = Sampling::equispaced_circle;
    std::uint64_t seed = 1;
    double beta = 1.0;
};

struct EnsembleStats {
    double t = 0.0;
    Vec3 mean_v = Vec3::Zero();
    Vec3 mean_u = Vec3::Zero();
    Mat3 cov_u = Mat3::Zero();
    int n_effective = 0;
    int excluded = 0;
};

/// Right-handed orthonormal frame {e1, e2, b}: e1 = normalize(a x b) with
/// a = z unless |b . z| > 0.9, in which case a = x; e2 = b x e1.
inline std::pair<Vec3, Vec3> tangent_frame(const Vec3& b)
{
    const Vec3 a = std::abs(b.z()) > 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
    const Vec3 e1 = a.cross(b).normalized();
    return {e1, b.cross(e1)};
}

/// Unit directions on the circle tangent to the isobaric surface at r0.
/// `frame_angle` rotates the reference frame within the tangent plane.
inline std::vector<TtpState> seed_tangent_circle(const EnsembleSpec& spec, const FieldProvider& provider,
                                                 double eps_grad = default_eps_grad, double frame_angle = 0.0)
{
    if (spec.count < 1) throw ValidationError("ensemble count must be >= 1");
    const FluidSample s = provider.sample(spec.r0, spec.t0);
    const auto b = isobaric_normal(s, eps_grad);
    if (!b) throw DegenerateGradient("isobaric normal undefined at the seed point " + format_point(spec.r0));
    auto [f1, f2] = tangent_frame(*b);
    const Vec3 e1 = std::cos(frame_angle) * f1 + std::sin(frame_angle) * f2;
    const Vec3 e2 = b->cross(e1);

    std::vector<double> angles(static_cast<std::size_t>(spec.count));
    if (spec.sampling == Sampling::equispaced_circle) {
        for (int k = 0; k < spec.count; ++k) angles[k] = 2.0 * std::numbers::pi * k / spec.count;
    } else {
        std::mt19937_64 rng(spec.seed);
        std::uniform_real_distribution<double> dist(0.0, 2.0 * std::numbers::pi);
        for (auto& a : angles) a = dist(rng);
    }

    std::vector<TtpState> out;
    out.reserve(angles.size());
    for (double a : angles) {
        Vec3 n = std::cos(a) * e1 + std::sin(a) * e2;
        n -= n.dot(*b) * *b;  // remove rounding leakage along b
        out.push_back(TtpState{spec.t0, spec.r0, n.normalized(), spec.beta});
    }
    return out;
}

/// Pairwise (cascade) sum; the summation order depends only on the size.
template <class T>
T pairwise_sum(std::span<const T> xs)
{
    if (xs.size() <= 8) {
        T acc = T::Zero();
        for (const auto& x : xs) acc += x;
        return acc;
    }
    const std::size_t half = xs.size() / 2;
    return T(pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half)));
}

/// Population moments (1/N) of lab velocities v and relative velocities u.
inline EnsembleStats moments(std::span<const Vec3> v, std::span<const Vec3> u)
{
    if (u.empty()) throw EmptyEnsemble("ensemble has no particles to average");
    const double inv = 1.0 / static_cast<double>(u.size());
    EnsembleStats st;
    st.n_effective = static_cast<int>(u.size());
    st.mean_v = pairwise_sum(v) * inv;
    st.mean_u = pairwise_sum(u) * inv;
    std::vector<Mat3> outer(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Vec3 d = u[i] - st.mean_u;
        outer[i] = d * d.transpose();
    }
    const Mat3 c = pairwise_sum(std::span<const Mat3>(outer)) * inv;
    st.cov_u = 0.5 * (c + c.transpose());
    return st;
}

inline EnsembleStats ensemble_stats(std::span<const TtpState> states, const FieldProvider& provider)
{
    if (states.empty()) throw EmptyEnsemble("ensemble has no particles to average");
    std::vector<Vec3> v, u;
    v.reserve(states.size());
    u.reserve(states.size());
    for (const auto& st : states) {
        if (st.t != states.front().t) throw ValidationError("ensemble states must share a common time");
        const FluidSample s = provider.sample(st.r, st.t);
        u.push_back(relative_velocity(st, s));
        v.push_back(s.V + u.back());
    }
    EnsembleStats out = moments(v, u);
    out.t = states.front().t;
    return out;
}

struct EnsembleRun {
    std::vector<Trajectory> trajectories;  // records at the output times only
    std::vector<EnsembleStats> series;
};

/// Integrates every member independently and reduces moments every
/// `stats_every` steps (and at t_end) over the members still inside the
/// domain. `threads` = 0 uses the hardware concurrency.
inline EnsembleRun evolve_ensemble(std::span<const TtpState> states, const FieldProvider& provider,
                                   const IntegratorConfig& cfg, int stats_every = 1, unsigned threads = 0)
{
    if (states.empty()) throw EmptyEnsemble("ensemble has no particles");
    if (stats_every < 1) throw ValidationError("stats_every must be >= 1");
    validate(cfg, states.front().t);

    EnsembleRun run;
    run.trajectories.resize(states.size());
    std::vector<std::exception_ptr> errors(states.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < states.size();) {
            try {
                run.trajectories[i] = integrate_trajectory(states[i], provider, cfg, stats_every);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, states.size()));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    // Output steps are 0, stats_every, 2 stats_every, ... and the final step.
    const std::int64_t n_steps = step_count(states.front().t, cfg);
    const auto n_out = static_cast<std::size_t>(n_steps / stats_every + 1 + (n_steps % stats_every ? 1 : 0));
    const int total = static_cast<int>(states.size());
    for (std::size_t m = 0; m < n_out; ++m) {
        std::vector<Vec3> v, u;
        double t = 0.0;
        for (const auto& tr : run.trajectories) {
            // Records sit at the same output steps for every member; one that
            // left the domain early simply has fewer of them.
            if (m < tr.records.size()) {
                v.push_back(tr.records[m].v);
                u.push_back(tr.records[m].u);
                t = tr.records[m].t;
            }
        }
        if (u.empty()) throw EmptyEnsemble("all ensemble members left the domain before output " + std::to_string(m));
        EnsembleStats st = moments(v, u);
        st.t = t;
        st.excluded = total - st.n_effective;
        run.series.push_back(st);
    }
    return run;
}

} // namespace ttp
