#pragma once

// CSV and plain-text serialization. Reals use 17 significant digits.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "ttp/ensemble.hpp"
#include "ttp/integrate.hpp"
#include "ttp/verify.hpp"

namespace ttp::io {

inline constexpr const char* trajectory_header =
    "t,rx,ry,rz,nx,ny,nz,ux,uy,uz,vx,vy,vz,vth,p1hat,bx,by,bz,n_dot_b,norm_err,degenerate_flag";

inline constexpr const char* stats_header =
    "t,n_effective,mean_vx,mean_vy,mean_vz,mean_ux,mean_uy,mean_uz,cov_uxx,cov_uxy,cov_uxz,cov_uyy,cov_uyz,cov_uzz";

inline std::string real(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvRow {
public:
    CsvRow& operator<<(double v)
    {
        sep();
        line_ += real(v);
        return *this;
    }
    CsvRow& operator<<(int v)
    {
        sep();
        line_ += std::to_string(v);
        return *this;
    }
    CsvRow& operator<<(std::int64_t v)
    {
        sep();
        line_ += std::to_string(v);
        return *this;
    }
    CsvRow& operator<<(const std::string& v)
    {
        sep();
        line_ += v;
        return *this;
    }
    CsvRow& operator<<(const Vec3& v) { return *this << v.x() << v.y() << v.z(); }

    const std::string& str() const { return line_; }

private:
    void sep()
    {
        if (!first_) line_ += ',';
        first_ = false;
    }
    std::string line_;
    bool first_ = true;
};

/// Writes every `stride`-th record plus the last one.
inline void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records, int stride = 1)
{
    out << trajectory_header << '\n';
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i % static_cast<std::size_t>(stride) != 0 && i + 1 != records.size()) continue;
        const auto& r = records[i];
        CsvRow row;
        row << r.t << r.r << r.n << r.u << r.v << r.vth << r.p1hat << r.b << r.n_dot_b << r.norm_err
            << (r.degenerate ? 1 : 0);
        out << row.str() << '\n';
    }
}

inline void write_stats_csv(std::ostream& out, const std::vector<EnsembleStats>& series)
{
    out << stats_header << '\n';
    for (const auto& s : series) {
        CsvRow row;
        row << s.t << s.n_effective << s.mean_v << s.mean_u << s.cov_u(0, 0) << s.cov_u(0, 1) << s.cov_u(0, 2)
            << s.cov_u(1, 1) << s.cov_u(1, 2) << s.cov_u(2, 2);
        out << row.str() << '\n';
    }
}

inline void write_summary(std::ostream& out, const InvariantSummary& s)
{
    out << "termination: " << s.termination_reason << '\n';
    out << "steps: " << s.steps << '\n';
    out << "t_final: " << real(s.t_final) << '\n';
    out << "max_norm_err: " << real(s.max_norm_err) << '\n';
    out << "max_abs_n_dot_b: " << real(s.max_abs_n_dot_b) << '\n';
    out << "max_constraint_residual: " << real(s.max_constraint_residual) << '\n';
    out << "max_abs_phase_divergence: " << real(s.max_abs_divergence) << '\n';
    out << "degenerate_records: " << s.degenerate_steps << '\n';
}

inline void write_omega_sweep_csv(std::ostream& out, const OmegaSweepReport& rep)
{
    out << "provider,h,rx,ry,rz,t,omega_norm,rate_scale,fd_residual,decomposition_residual\n";
    for (const auto& p : rep.points) {
        CsvRow row;
        row << rep.provider << rep.h << p.r << p.t << p.omega_norm << p.rate_scale << p.fd_residual
            << p.decomposition_residual;
        out << row.str() << '\n';
    }
}

inline void write_drift_csv(std::ostream& out, const std::string& provider, const DriftStudy& d)
{
    out << "provider,dt,max_abs_n_dot_b,max_norm_err,steps\n";
    for (const auto& r : d.rows) {
        CsvRow row;
        row << provider << r.dt << r.max_abs_n_dot_b << r.max_norm_err << r.steps;
        out << row.str() << '\n';
    }
}

inline void write_convergence_csv(std::ostream& out, const std::string& provider, const ConvergenceStudy& c)
{
    out << "provider,dt,max_position_error,final_position_error,max_direction_error\n";
    for (const auto& r : c.rows) {
        CsvRow row;
        row << provider << r.dt << r.max_position_error << r.final_position_error << r.max_direction_error;
        out << row.str() << '\n';
    }
}

} // namespace ttp::io
