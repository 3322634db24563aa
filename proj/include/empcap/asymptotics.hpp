#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "empcap/capacity_solver.hpp"
#include "empcap/system_model.hpp"

namespace empcap {

enum class AsymptoteRegime { InfiniteHorizon, SmallT, TauLimit };

[[nodiscard]] std::string_view to_string(AsymptoteRegime regime);

/// One limiting-regime estimate with the diagnostics that back it. A report
/// whose diagnostics fall outside their declared tolerances is marked
/// unreliable and keeps the numbers anyway, so callers can see how it failed.
struct AsymptoteReport {
    AsymptoteRegime regime = AsymptoteRegime::InfiniteHorizon;
    double value_nats = 0.0;  // small-horizon regime: nats per second
    double value_bits = 0.0;
    bool half_factor_applied = true;
    bool perfect_sensor = false;
    bool per_unit_time = false;
    bool reliable = true;
    /// Worst relative residual of the stationary Gramian equations
    /// (infinite-horizon and damping-limit regimes). Tolerance 1e-10.
    double lyapunov_residual = 0.0;
    /// Relative disagreement between Richardson levels of C(T)/T
    /// (small-horizon regime). Tolerance 1e-2.
    double extrapolation_error = 0.0;
    /// C(2T)/C(T) at T = 1e-4; linear growth puts this in [1.99, 2.01].
    double linearity_ratio = 0.0;
    /// Capacity probed at T = 1e-6; linear growth requires it to be far
    /// below the capacity at T = 1e-3.
    double origin_value = 0.0;
    std::vector<std::string> notes;
};

/// Stationary capacity from the infinite-horizon Gramians under the
/// perfect-sensor convention (the state itself is observed, and the
/// stationary process covariance is the noise). Anti-stable spectra run
/// through the time-reversed Gramians; mixed or marginal spectra refuse.
[[nodiscard]] AsymptoteReport capacity_at_infinity(const ValidatedSystem& system,
                                                   double p_budget,
                                                   const SolverOptions& options = {});

/// Slope of C(T) near T = 0 by Richardson extrapolation of C(T)/T at
/// T in {1e-3, 5e-4, 2.5e-4}, with a doubling check at T = 1e-4 and a probe
/// at T = 1e-6. Every covariance in the model scales linearly in T at small
/// horizons, so the ratio C(T)/T need not converge; the diagnostics decide
/// whether the extrapolated slope deserves trust. Refuses when the
/// small-horizon output noise sigma_eta C GG' C' + sigma_nu F F' is
/// singular, since no capacity is defined there.
[[nodiscard]] AsymptoteReport small_t_slope(const ValidatedSystem& system, double p_budget,
                                            const SolverOptions& options = {});

struct TauPoint {
    double tau = 0.0;
    double capacity_nats = 0.0;
    double capacity_bits = 0.0;
    bool converged = false;
};

/// Capacity along a family of progressively faster systems A * (tau_base /
/// tau), together with the tau -> 0 limit. Scaling time compresses every
/// process Gramian by the same factor, so the limit is the capacity of the
/// ratio bundle built from the stationary Lyapunov solutions
/// X_m = Lyap(A, b_m b_m') against noise sigma_eta * Lyap(A, GG').
struct TauSweepResult {
    std::vector<TauPoint> points;  // same order as the tau list, descending
    double limit_nats = 0.0;
    double limit_bits = 0.0;
    /// Alternative placement that multiplies by sigma_eta instead of
    /// dividing, i.e. gains from sigma_eta (GG')^{-1} sum_m b_m b_m'. The
    /// two placements disagree whenever sigma_eta != 1; both are reported
    /// rather than picking one silently. NaN when GG' is singular.
    double sigma_scaled_limit_nats = 0.0;
    AsymptoteReport report;
};

/// Sweeps tau over a positive strictly descending list via damping rescale +
/// capacity, then attaches the closed-form limit. The base system must be
/// stable. A fixed measurement-noise floor (sigma_nu FF' != 0) does not
/// rescale with tau, so the limit collapses to zero in that case.
[[nodiscard]] TauSweepResult tau_sweep(const ValidatedSystem& base_system,
                                       const std::vector<double>& tau_list, double p_budget,
                                       double t_horizon, const SolverOptions& options = {});

}  // namespace empcap
