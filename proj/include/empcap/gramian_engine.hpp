#pragma once

#include <vector>

#include "empcap/system_model.hpp"

namespace empcap {

/// Covariance objects of one (system, horizon) pair: per-channel
/// controllability Gramians plus the process, sensor, and total output-noise
/// covariances. Downstream consumers read the observation map and ridge from
/// here so finite- and infinite-horizon bundles share one code path.
struct GramianBundle {
    double t_horizon = 0.0;  // seconds; ignored when infinite
    bool infinite = false;
    bool tilde = false;  // anti-stable horizon: Gramians solve the +Q equation

    std::vector<Matrix> w;  // W_m per input channel, n x n PSD
    Matrix sigma_eta;       // n x n process-noise state covariance
    Matrix sigma_nu;        // q x q sensor-noise covariance
    Matrix sigma_n;         // q x q total output-noise covariance

    /// Observation map the noise and signal pass through: the system C at
    /// finite horizon, identity (perfect sensor) at infinite horizon.
    Matrix c_obs;

    /// Regularizer downstream inversions must add to sigma_n. Zero when
    /// sigma_n is already positive definite; sigma_n itself stays the exact
    /// sum so the bundle identity holds.
    double ridge_epsilon = 0.0;
};

/// One z-vector of the capacity parametrization: z = sqrt(omega) v with
/// (omega, v) an eigenpair of the channel Gramian.
struct Mode {
    int channel = 0;  // input channel m
    int index = 0;    // position within the channel, descending omega
    double omega = 0.0;
    Vector v;  // unit eigenvector
    Vector z;  // sqrt(max(omega, 0)) * v
    bool negligible = false;  // omega < 1e-12 * channel max
};

/// Exactly n modes per channel, channel-major, descending omega within each.
struct ModeSet {
    std::vector<Mode> entries;
};

/// Finite-horizon bundle: W_m over [0, T] per channel, process covariance
/// sigma_eta * gramian of G, sensor covariance T * sigma_nu * F F', and their
/// observed sum. Throws NumericError for T < 0 and RefusalError when the
/// output noise is exactly zero at T > 0 (the channel has infinite capacity).
[[nodiscard]] GramianBundle gramians_at(const ValidatedSystem& system, double t_horizon);

/// Infinite-horizon bundle under the perfect-sensor convention (c_obs = I,
/// sigma_n = stationary process covariance). Stable spectra use the -Q
/// Lyapunov Gramians, anti-stable spectra the +Q tilde Gramians. Throws
/// RefusalError for mixed or marginal spectra and for zero process noise.
[[nodiscard]] GramianBundle gramians_at_infinity(const ValidatedSystem& system);

/// Eigen-decomposes every channel Gramian into modes. Eigenvalues below
/// 1e-12 of the channel maximum are kept but flagged negligible.
[[nodiscard]] ModeSet extract_modes(const GramianBundle& bundle);

}  // namespace empcap
