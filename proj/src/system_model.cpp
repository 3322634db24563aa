#include "empcap/system_model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <string>

#include "empcap/errors.hpp"

namespace empcap {

namespace {

// Real parts below this (relative) threshold count as lying on the imaginary
// axis, for both stability classification and time-constant refusal.
double marginal_tolerance(const Matrix& a) {
    return 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff());
}

void require_dimensions(const LtiSystem& s) {
    const auto n = s.a.rows();
    if (n == 0 || s.a.cols() != n) {
        throw ConfigError("A must be square and non-empty");
    }
    if (s.b.rows() != n || s.b.cols() < 1) {
        throw ConfigError("B must be n x p with p >= 1");
    }
    if (s.c.cols() != n || s.c.rows() < 1) {
        throw ConfigError("C must be q x n with q >= 1");
    }
    if (s.g.rows() != n || s.g.cols() != n) {
        throw ConfigError("G must be n x n");
    }
    if (s.f.rows() != s.c.rows() || s.f.cols() != s.c.rows()) {
        throw ConfigError("F must be q x q");
    }
    if (!(s.sigma_eta >= 0.0) || !(s.sigma_nu >= 0.0)) {
        throw ConfigError("noise intensities must be non-negative");
    }
    for (const Matrix* m : {&s.a, &s.b, &s.c, &s.g, &s.f}) {
        if (!m->allFinite()) throw ConfigError("system matrices must be finite");
    }
}

bool channel_controllable(const Matrix& a, const Vector& b_col) {
    const auto n = a.rows();
    Matrix krylov(n, n);
    Vector v = b_col;
    for (Eigen::Index k = 0; k < n; ++k) {
        // Normalizing each iterate keeps the rank test scale-free even when
        // A^k b grows or decays by orders of magnitude.
        const double norm = v.norm();
        krylov.col(k) = (norm > 0.0) ? Vector(v / norm) : v;
        v = a * krylov.col(k);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(krylov);
    qr.setThreshold(1e-10);
    return qr.rank() == n;
}

}  // namespace

const char* to_string(StabilityClass c) {
    switch (c) {
        case StabilityClass::Stable: return "stable";
        case StabilityClass::AntiStable: return "anti-stable";
        case StabilityClass::Mixed: return "mixed";
    }
    return "mixed";
}

ValidatedSystem validate(const LtiSystem& system) {
    require_dimensions(system);

    ValidatedSystem out;
    out.system = system;

    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Matrix>(system.a, false).eigenvalues();
    const double tol = marginal_tolerance(system.a);
    bool any_marginal = false;
    bool any_negative = false;
    bool any_positive = false;
    double min_abs_re = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        const double re = eigs(i).real();
        min_abs_re = std::min(min_abs_re, std::abs(re));
        if (std::abs(re) <= tol) {
            any_marginal = true;
        } else if (re < 0.0) {
            any_negative = true;
        } else {
            any_positive = true;
        }
    }
    if (any_marginal || (any_negative && any_positive)) {
        out.stability = StabilityClass::Mixed;
    } else if (any_negative) {
        out.stability = StabilityClass::Stable;
    } else {
        out.stability = StabilityClass::AntiStable;
    }
    if (!any_marginal) out.tau = 1.0 / min_abs_re;

    out.channel_controllable.reserve(static_cast<size_t>(system.inputs()));
    for (int m = 0; m < system.inputs(); ++m) {
        out.channel_controllable.push_back(channel_controllable(system.a, system.b.col(m)));
    }
    return out;
}

LtiSystem from_pole_zero(const PoleZeroSpec& spec) {
    const size_t n = spec.poles.size();
    if (n == 0) throw ConfigError("at least one pole required");
    if (spec.zeros.size() > n) throw ConfigError("more zeros than poles");
    if (!std::isfinite(spec.gain)) throw ConfigError("gain must be finite");

    if (!spec.allow_marginal_poles) {
        for (const auto& p : spec.poles) {
            if (std::abs(p.real()) <= 1e-12 * std::max(1.0, std::abs(p))) {
                throw ConfigError("pole on the imaginary axis");
            }
        }
    }

    // Monic characteristic polynomial from the pole set. Coefficients of a
    // conjugation-closed set are real; a residual imaginary part flags the
    // violation without needing to pair roots explicitly.
    auto real_poly = [](const std::vector<std::complex<double>>& roots,
                        const char* what) {
        std::vector<std::complex<double>> coeff{1.0};
        for (const auto& r : roots) {
            coeff.push_back(0.0);
            for (size_t k = coeff.size() - 1; k > 0; --k) {
                coeff[k] = coeff[k] - r * coeff[k - 1];
            }
        }
        double scale = 0.0;
        for (const auto& c : coeff) scale = std::max(scale, std::abs(c));
        std::vector<double> out(coeff.size());
        for (size_t k = 0; k < coeff.size(); ++k) {
            if (std::abs(coeff[k].imag()) > 1e-9 * std::max(1.0, scale)) {
                throw ConfigError(std::string(what) + " not closed under conjugation");
            }
            out[k] = coeff[k].real();
        }
        return out;  // out[0] = 1, out[k] multiplies s^{n-k}
    };

    const std::vector<double> denom = real_poly(spec.poles, "poles");
    (void)real_poly(spec.zeros, "zeros");

    const auto ni = static_cast<Eigen::Index>(n);
    LtiSystem sys;
    sys.a = Matrix::Zero(ni, ni);
    for (Eigen::Index i = 0; i + 1 < ni; ++i) sys.a(i, i + 1) = 1.0;
    for (Eigen::Index j = 0; j < ni; ++j) {
        sys.a(ni - 1, j) = -denom[n - static_cast<size_t>(j)];
    }
    sys.b = Matrix::Zero(ni, 1);
    sys.b(ni - 1, 0) = 1.0;
    sys.c = Matrix::Identity(ni, ni);
    sys.g = Matrix::Identity(ni, ni);
    sys.f = Matrix::Identity(ni, ni);
    return sys;
}

double time_constant(const LtiSystem& system) {
    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Matrix>(system.a, false).eigenvalues();
    const double tol = marginal_tolerance(system.a);
    double min_abs_re = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        min_abs_re = std::min(min_abs_re, std::abs(eigs(i).real()));
    }
    if (min_abs_re <= tol) {
        throw RefusalError("time constant undefined: eigenvalue on the imaginary axis");
    }
    return 1.0 / min_abs_re;
}

LtiSystem scale_damping(const LtiSystem& system, double tau_target) {
    if (!(tau_target > 0.0) || !std::isfinite(tau_target)) {
        throw ConfigError("target time constant must be positive");
    }
    const double tau_current = time_constant(system);
    LtiSystem out = system;
    out.a = system.a * (tau_current / tau_target);
    return out;
}

}  // namespace empcap
