#pragma once

#include "empcap/system_model.hpp"

namespace empcap {

/// Finite linear Gaussian channel obtained by zero-order-hold sampling of the
/// control path: y(T) = sum_k H_k u_k + noise, with u_k the constant control
/// on step k. Block k of h is C e^{A(T-(k+1)D)} int_0^D e^{As} ds B.
struct DiscreteChannel {
    int steps = 0;        // N
    double delta = 0.0;   // T / N
    Matrix h;             // q x (N p), blocks left to right in time order
    Matrix noise_cov;     // q x q, positive definite (ridge already applied)
};

/// Exact zero-order-hold discretization of the control path. The output
/// noise covariance is taken from the finite-horizon covariance analysis,
/// deliberately: the oracle cross-checks the control-path optimization only.
/// Throws NumericError for steps < 1 or a non-positive horizon.
[[nodiscard]] DiscreteChannel discretize(const ValidatedSystem& system, double t_horizon,
                                         int steps);

/// Capacity of the sampled channel in nats under the continuous power
/// accounting sum_k |u_k|^2 delta <= P: whiten by the noise covariance,
/// eigen-decompose the squared channel map, and water-fill the levels with
/// the closed-form active-set scan. Shares no optimization code with the
/// mode-based solver. Halved unless paper_convention.
[[nodiscard]] double oracle_capacity(const DiscreteChannel& channel, double p_budget,
                                     bool paper_convention = false);

}  // namespace empcap
