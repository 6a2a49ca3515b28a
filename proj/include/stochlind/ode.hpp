#pragma once

// Fixed-step RK4 integration of the Lindblad equation for E[rho].

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <charconv>
#include <string>
#include <vector>

#include "stochlind/errors.hpp"
#include "stochlind/lindblad.hpp"
#include "stochlind/operator_algebra.hpp"

namespace stochlind {

struct OdeTrajectory {
    std::vector<double> times;
    std::vector<ComplexMatrix> states;
    double max_trace_drift = 0.0;  // max |Tr rho - Tr rho0| over all steps
    double min_eigenvalue = 0.0;   // over recorded states
};

namespace detail {

/// Shortest decimal that round-trips.
inline std::string shortest(double x)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Number of steps of size dt covering t_final. Throws ConfigError naming
/// both values when dt does not divide t_final (relative slack 1e-9).
inline std::uint64_t step_count(double t_final, double dt)
{
    if (!(t_final > 0.0) || !(dt > 0.0) || !std::isfinite(t_final) || !std::isfinite(dt)) {
        throw ConfigError("t_final and dt must be positive and finite (t_final=" + detail::shortest(t_final) +
                          ", dt=" + detail::shortest(dt) + ")");
    }
    const double ratio = t_final / dt;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
        throw ConfigError("dt=" + detail::shortest(dt) + " does not divide t_final=" + detail::shortest(t_final));
    }
    return static_cast<std::uint64_t>(n);
}

/// One classical RK4 step followed by re-Hermitization. Trace and
/// positivity are left alone so that drift shows up in diagnostics.
inline ComplexMatrix rk4_step(const LindbladModel& model, const ComplexMatrix& rho, double dt)
{
    const ComplexMatrix k1 = lindblad_rhs(model, rho);
    const ComplexMatrix k2 = lindblad_rhs(model, rho + (0.5 * dt) * k1);
    const ComplexMatrix k3 = lindblad_rhs(model, rho + (0.5 * dt) * k2);
    const ComplexMatrix k4 = lindblad_rhs(model, rho + dt * k3);
    ComplexMatrix next = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return hermitian_part(next);
}

inline OdeTrajectory integrate_ode(const LindbladModel& model, const DensityMatrix& rho0, double t_final, double dt,
                                   std::size_t record_every = 1)
{
    if (rho0.dim() != model.dim()) {
        throw DimensionError("integrate_ode: initial state dimension " + std::to_string(rho0.dim()) +
                             " differs from model dimension " + std::to_string(model.dim()));
    }
    if (record_every < 1) {
        throw ConfigError("integrate_ode: record_every must be >= 1");
    }
    const std::uint64_t steps = step_count(t_final, dt);

    OdeTrajectory out;
    ComplexMatrix rho = rho0.matrix();
    const Complex trace0 = rho.trace();
    out.times.push_back(0.0);
    out.states.push_back(rho);
    out.min_eigenvalue = min_eigenvalue(rho);

    for (std::uint64_t k = 1; k <= steps; ++k) {
        rho = rk4_step(model, rho, dt);
        if (!rho.allFinite()) {
            throw NumericalError("integrate_ode: non-finite state at t=" + std::to_string(k * dt) +
                                 " (dt too large for this model?)");
        }
        out.max_trace_drift = std::max(out.max_trace_drift, std::abs(rho.trace() - trace0));
        if (k % record_every == 0 || k == steps) {
            out.times.push_back(static_cast<double>(k) * dt);
            out.states.push_back(rho);
            out.min_eigenvalue = std::min(out.min_eigenvalue, min_eigenvalue(rho));
        }
    }
    return out;
}

}  // namespace stochlind
