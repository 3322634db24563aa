#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "empcap/matrix_kernels.hpp"

namespace empcap {

/// Sign pattern of Re(eig A). Marginal spectra (eigenvalues on the imaginary
/// axis) classify as Mixed; both are refused by infinite-horizon analyses.
enum class StabilityClass { Stable, AntiStable, Mixed };

[[nodiscard]] const char* to_string(StabilityClass c);

/// Continuous-time plant dx = Ax dt + Bu dt + G deta with sensor
/// y = Cx + Fnu. Noise intensities are the white-noise power levels
/// sigma_eta, sigma_nu (autocorrelation sigma * delta).
struct LtiSystem {
    Matrix a;  // n x n dynamics
    Matrix b;  // n x p control gain, columns are the input channels
    Matrix c;  // q x n sensor map
    Matrix g;  // n x n process-noise gain
    Matrix f;  // q x q sensor-noise gain
    double sigma_eta = 1.0;
    double sigma_nu = 1.0;

    [[nodiscard]] int order() const { return static_cast<int>(a.rows()); }
    [[nodiscard]] int inputs() const { return static_cast<int>(b.cols()); }
    [[nodiscard]] int outputs() const { return static_cast<int>(c.rows()); }
};

/// System plus the annotations every downstream analysis keys on.
struct ValidatedSystem {
    LtiSystem system;
    StabilityClass stability = StabilityClass::Mixed;
    std::vector<bool> channel_controllable;  // Kalman rank == n, per column of B
    std::optional<double> tau;               // 1 / min |Re eig A|; empty when marginal
};

/// Checks dimensions and finiteness, classifies stability, tests per-channel
/// controllability, and computes the time constant when defined.
/// Uncontrollable channels are flagged, not rejected.
/// Throws ConfigError on dimension mismatch, non-finite entries, or negative
/// noise intensity.
[[nodiscard]] ValidatedSystem validate(const LtiSystem& system);

/// Single-input transfer function given by its poles, zeros, and gain.
struct PoleZeroSpec {
    std::vector<std::complex<double>> poles;
    std::vector<std::complex<double>> zeros;
    double gain = 1.0;
    bool allow_marginal_poles = false;
};

/// Builds the controllable-canonical realization of the spec: companion A,
/// B = e_n. The readout row carrying zeros and gain is not stored; C, G, F
/// default to identity so the full companion state is observed.
/// Throws ConfigError when poles or zeros are not closed under conjugation,
/// when there are more zeros than poles, or on a marginal pole unless
/// allow_marginal_poles is set.
[[nodiscard]] LtiSystem from_pole_zero(const PoleZeroSpec& spec);

/// tau = 1 / min |Re eig A|, the decay time of the slowest mode.
/// Throws RefusalError when some eigenvalue sits on the imaginary axis.
[[nodiscard]] double time_constant(const LtiSystem& system);

/// Rescales A by tau(system) / tau_target, moving every pole radially so the
/// result has time constant tau_target. B, C, G, F and intensities unchanged.
/// Throws ConfigError when tau_target <= 0.
[[nodiscard]] LtiSystem scale_damping(const LtiSystem& system, double tau_target);

}  // namespace empcap
