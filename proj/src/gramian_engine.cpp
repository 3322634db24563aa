#include "empcap/gramian_engine.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "empcap/errors.hpp"

namespace empcap {

namespace {

// Positive-definiteness margin for sigma_n; below it the bundle carries a
// ridge for downstream inversions.
constexpr double kPdTolerance = 1e-14;
constexpr double kRidgeScale = 1e-12;

void finalize_noise(GramianBundle& bundle, bool allow_zero) {
    const Matrix& sn = bundle.sigma_n;
    const double trace = sn.trace();
    if (trace <= 0.0) {
        if (allow_zero) return;  // T = 0: capacity short-circuits upstream
        throw RefusalError(
            "output noise covariance is zero: mutual information is unbounded");
    }
    const Vector eigs = Eigen::SelfAdjointEigenSolver<Matrix>(
                            sn, Eigen::EigenvaluesOnly)
                            .eigenvalues();
    if (eigs.minCoeff() <= kPdTolerance * eigs.maxCoeff()) {
        bundle.ridge_epsilon = kRidgeScale * trace;
    }
}

}  // namespace

GramianBundle gramians_at(const ValidatedSystem& system, double t_horizon) {
    if (!(t_horizon >= 0.0) || !std::isfinite(t_horizon)) {
        throw NumericError("horizon must be finite and non-negative");
    }
    const LtiSystem& s = system.system;

    GramianBundle bundle;
    bundle.t_horizon = t_horizon;
    bundle.c_obs = s.c;
    bundle.w.reserve(static_cast<size_t>(s.inputs()));
    for (int m = 0; m < s.inputs(); ++m) {
        bundle.w.push_back(finite_gramian(s.a, s.b.col(m), t_horizon));
    }
    bundle.sigma_eta = s.sigma_eta * finite_gramian(s.a, s.g, t_horizon);
    bundle.sigma_nu = t_horizon * s.sigma_nu * (s.f * s.f.transpose());
    bundle.sigma_n = s.c * bundle.sigma_eta * s.c.transpose() + bundle.sigma_nu;
    bundle.sigma_n = 0.5 * (bundle.sigma_n + bundle.sigma_n.transpose()).eval();

    finalize_noise(bundle, t_horizon == 0.0);
    return bundle;
}

GramianBundle gramians_at_infinity(const ValidatedSystem& system) {
    if (system.stability == StabilityClass::Mixed) {
        throw RefusalError(
            "infinite-horizon analysis needs a stable or anti-stable spectrum");
    }
    const LtiSystem& s = system.system;
    const bool anti = system.stability == StabilityClass::AntiStable;
    const LyapunovSign sign = anti ? LyapunovSign::Plus : LyapunovSign::Minus;

    GramianBundle bundle;
    bundle.infinite = true;
    bundle.tilde = anti;
    bundle.c_obs = Matrix::Identity(s.order(), s.order());
    bundle.w.reserve(static_cast<size_t>(s.inputs()));
    for (int m = 0; m < s.inputs(); ++m) {
        const Vector b = s.b.col(m);
        bundle.w.push_back(lyapunov_solve(s.a, Matrix(b * b.transpose()), sign));
    }
    bundle.sigma_eta =
        s.sigma_eta * lyapunov_solve(s.a, Matrix(s.g * s.g.transpose()), sign);
    // Perfect-sensor convention: the sensor-noise covariance grows without
    // bound with the horizon, so the stationary objective observes the state
    // directly and the only noise is the accumulated process noise.
    bundle.sigma_nu = Matrix::Zero(s.order(), s.order());
    bundle.sigma_n = bundle.sigma_eta;

    finalize_noise(bundle, false);
    return bundle;
}

ModeSet extract_modes(const GramianBundle& bundle) {
    ModeSet set;
    const auto channels = bundle.w.size();
    if (channels == 0) return set;
    const auto n = bundle.w.front().rows();
    set.entries.reserve(channels * static_cast<size_t>(n));
    for (size_t m = 0; m < channels; ++m) {
        const SymEig eig = sym_eig(bundle.w[m]);
        const double omega_max = std::max(0.0, eig.eigenvalues.maxCoeff());
        for (Eigen::Index i = 0; i < n; ++i) {
            Mode mode;
            mode.channel = static_cast<int>(m);
            mode.index = static_cast<int>(i);
            mode.omega = eig.eigenvalues(i);
            mode.v = eig.eigenvectors.col(i);
            mode.z = std::sqrt(std::max(mode.omega, 0.0)) * mode.v;
            mode.negligible = mode.omega < 1e-12 * omega_max || omega_max == 0.0;
            set.entries.push_back(std::move(mode));
        }
    }
    return set;
}

}  // namespace empcap
