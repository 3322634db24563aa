#pragma once

#include <optional>
#include <vector>

#include "empcap/gramian_engine.hpp"

namespace empcap {

struct SolverOptions {
    bool paper_convention = false;  // drop the Gaussian 1/2 factor
    int max_sweeps = 10000;
    double fixed_point_tol = 1e-10;
    double waterline_tol = 1e-10;
    /// Starting variances, aligned with ModeSet entries. Defaults to the
    /// uniform split P / (number of modes). The objective is concave, so the
    /// optimum does not depend on this; it exists for multi-start diagnostics.
    std::optional<std::vector<double>> initial_sigma;
};

/// Power split over the modes plus solver diagnostics.
struct Allocation {
    std::vector<double> sigma;  // one entry per mode, aligned with ModeSet
    double waterline = 0.0;     // re-solved at the final gains
    double budget = 0.0;
    int iterations = 0;
    bool converged = false;
    double kkt_residual = 0.0;
    /// Objective value (nats, no 1/2 factor) after each sweep; ascent is an
    /// invariant of the update.
    std::vector<double> objective_trace;
};

/// Rate carried by one mode at the converged allocation, measured against
/// the noise plus all other modes.
struct ModeContribution {
    int channel = 0;
    int index = 0;
    double sigma = 0.0;
    double gain = 0.0;
    double nats = 0.0;  // ln(1 + sigma * gain), convention-scaled
};

struct CapacityResult {
    double value_nats = 0.0;
    double value_bits = 0.0;
    bool half_factor_applied = true;
    double t_horizon = 0.0;
    bool infinite_horizon = false;
    bool perfect_sensor = false;  // infinite-horizon observation convention
    bool ridge_applied = false;
    std::vector<ModeContribution> contributions;
    Allocation allocation;
};

/// Objective ln det(Sigma_n + sum sigma_j (C z_j)(C z_j)') - ln det(Sigma_n)
/// in nats, halved unless paper_convention. Never negative. The bundle ridge
/// is added to Sigma_n before inversion.
[[nodiscard]] double mutual_information(const GramianBundle& bundle, const ModeSet& modes,
                                        const Allocation& allocation,
                                        bool paper_convention = false);

/// Signal-to-noise gain z' C' cov^{-1} C z of one mode against a conditional
/// output covariance. Throws NumericError when cov is not positive definite.
[[nodiscard]] double mode_gain(const Vector& z, const Matrix& c_obs,
                               const Matrix& conditional_cov);

/// Water level lambda with sum max(0, 1/lambda - 1/a_j) = p_budget, found by
/// bisection on (0, max a] and finished with a Newton polish so the budget
/// closes to machine precision. Gains below 1e-14 can never receive water and
/// are excluded. Returns nullopt when no gain survives the floor: the
/// zero-capacity signal. Throws NumericError for p_budget <= 0.
[[nodiscard]] std::optional<double> waterline_solve(const std::vector<double>& gains,
                                                    double p_budget,
                                                    double tol = 1e-10);

/// Two-phase fixed point: recompute every gain against the current
/// conditional covariance, then rebalance through waterline_solve, with a
/// backtracking step that keeps the objective non-decreasing. Stops when the
/// proposed (undamped) step drops below fixed_point_tol or after max_sweeps.
[[nodiscard]] Allocation iterative_water_filling(const GramianBundle& bundle,
                                                 const ModeSet& modes, double p_budget,
                                                 const SolverOptions& options = {});

/// True when the allocation puts positive weight on a mode with z = 0, the
/// degenerate configuration whose realized channel carries no information;
/// callers must force capacity to zero. Assumes full-rank C.
[[nodiscard]] bool zero_capacity_guard(const ModeSet& modes, const Allocation& allocation);

/// Largest violation of I[u; y] = I[u_j; y] + I[u_rest; y | u_j] over modes j,
/// with the conditional covariance evaluated along two independent routes
/// (fresh accumulation vs subtraction from the full covariance). Reported in
/// nats without the 1/2 factor, which only rescales it.
[[nodiscard]] double chain_rule_audit(const GramianBundle& bundle, const ModeSet& modes,
                                      const Allocation& allocation);

/// End-to-end capacity: Gramians, modes, water-filling, objective. T may be
/// infinity (perfect-sensor stationary analysis). P = 0 and T = 0 return an
/// exact zero. Throws ConfigError for P < 0.
[[nodiscard]] CapacityResult capacity(const ValidatedSystem& system, double t_horizon,
                                      double p_budget, const SolverOptions& options = {});

/// Sampled realization of the optimal control process on a time grid.
struct SynthesizedControls {
    std::vector<double> grid;     // sample times in [0, T]
    std::vector<int> mode_index;  // rows of g, as indices into ModeSet entries
    Matrix g;                     // modes x samples, g_j(t) = v_j' e^{A(T-t)} b_m / sqrt(omega_j)
    std::vector<Matrix> r_u;      // per channel: sampled covariance sum sigma_j g_j(s) g_j(t)
    double realized_power = 0.0;  // trapezoid integral of the r_u diagonals
};

/// Samples g_j(t) for every non-negligible mode and assembles the realized
/// control covariance. Throws RefusalError when the allocation puts power on
/// a negligible mode, NumericError for a bad grid.
[[nodiscard]] SynthesizedControls synthesize_controls(const ValidatedSystem& system,
                                                      double t_horizon, const ModeSet& modes,
                                                      const Allocation& allocation,
                                                      const std::vector<double>& sample_grid);

}  // namespace empcap
