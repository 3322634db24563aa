#include "empcap/asymptotics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include "empcap/errors.hpp"
#include "empcap/gramian_engine.hpp"

namespace empcap {

namespace {

constexpr double kResidualTolerance = 1e-10;
constexpr double kSlopeTolerance = 1e-2;

[[nodiscard]] double relative_residual(const Matrix& a, const Matrix& x, const Matrix& q,
                                       LyapunovSign sign) {
    const double flip = sign == LyapunovSign::Minus ? 1.0 : -1.0;
    const Matrix residual = a * x + x * a.transpose() + flip * q;
    return residual.norm() / std::max(q.norm(), std::numeric_limits<double>::min());
}

[[nodiscard]] std::string format_nats(double value) {
    std::ostringstream out;
    out.precision(6);
    out << value;
    return out.str();
}

}  // namespace

std::string_view to_string(AsymptoteRegime regime) {
    switch (regime) {
        case AsymptoteRegime::InfiniteHorizon: return "infinite_horizon";
        case AsymptoteRegime::SmallT: return "small_T";
        case AsymptoteRegime::TauLimit: return "tau_limit";
    }
    return "unknown";
}

AsymptoteReport capacity_at_infinity(const ValidatedSystem& system, double p_budget,
                                     const SolverOptions& options) {
    const CapacityResult result =
        capacity(system, std::numeric_limits<double>::infinity(), p_budget, options);

    // Re-derive the stationary Gramians and score them against their defining
    // equations; the solve itself reports no residual.
    const GramianBundle bundle = gramians_at_infinity(system);
    const LtiSystem& s = system.system;
    const LyapunovSign sign = bundle.tilde ? LyapunovSign::Plus : LyapunovSign::Minus;
    double worst = 0.0;
    for (Eigen::Index m = 0; m < s.b.cols(); ++m) {
        const Matrix q = s.b.col(m) * s.b.col(m).transpose();
        worst = std::max(worst, relative_residual(s.a, bundle.w[static_cast<size_t>(m)], q, sign));
    }
    const Matrix q_eta = s.sigma_eta * (s.g * s.g.transpose());
    worst = std::max(worst, relative_residual(s.a, bundle.sigma_eta, q_eta, sign));

    AsymptoteReport report;
    report.regime = AsymptoteRegime::InfiniteHorizon;
    report.value_nats = result.value_nats;
    report.value_bits = result.value_bits;
    report.half_factor_applied = result.half_factor_applied;
    report.perfect_sensor = true;
    report.lyapunov_residual = worst;
    report.reliable = worst < kResidualTolerance;
    if (!report.reliable) {
        std::ostringstream note;
        note << "stationary Gramian residual " << worst << " exceeds " << kResidualTolerance;
        report.notes.push_back(note.str());
    }
    return report;
}

AsymptoteReport small_t_slope(const ValidatedSystem& system, double p_budget,
                              const SolverOptions& options) {
    const LtiSystem& s = system.system;

    // Every covariance scales like T near zero; the common factor is the
    // matrix below, and capacity is undefined in the limit when it is
    // singular because the whitened channel loses directions.
    Matrix noise_rate = s.sigma_eta * (s.c * s.g * s.g.transpose() * s.c.transpose()) +
                        s.sigma_nu * (s.f * s.f.transpose());
    noise_rate = 0.5 * (noise_rate + noise_rate.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> noise_eig(noise_rate);
    const double max_rate = noise_eig.eigenvalues().maxCoeff();
    if (!(max_rate > 0.0) || noise_eig.eigenvalues().minCoeff() <= 1e-12 * max_rate) {
        throw RefusalError(
            "small-horizon output noise is singular; the slope of C(T) is undefined");
    }

    AsymptoteReport report;
    report.regime = AsymptoteRegime::SmallT;
    report.half_factor_applied = !options.paper_convention;
    report.per_unit_time = true;

    const auto cap = [&](double t) { return capacity(system, t, p_budget, options).value_nats; };

    const double c1 = cap(1e-3);  // validates the budget as a side effect
    if (p_budget == 0.0) {
        report.linearity_ratio = 2.0;
        return report;
    }

    const double f1 = c1 / 1e-3;
    const double f2 = cap(5e-4) / 5e-4;
    const double f3 = cap(2.5e-4) / 2.5e-4;
    const double r12 = 2.0 * f2 - f1;
    const double r23 = 2.0 * f3 - f2;
    const double slope = r23 + (r23 - r12) / 3.0;
    const double denom = std::max(std::abs(slope), std::numeric_limits<double>::min());

    report.value_nats = slope;
    report.value_bits = slope / std::numbers::ln2;
    report.extrapolation_error = std::abs(r23 - r12) / denom;

    const double c_half = cap(1e-4);
    report.linearity_ratio = c_half > 0.0 ? cap(2e-4) / c_half : 0.0;
    report.origin_value = cap(1e-6);

    const double self_consistency = std::abs(f1 - slope) / denom;
    const bool doubling_ok = report.linearity_ratio >= 1.99 && report.linearity_ratio <= 2.01;
    const bool vanishes = report.origin_value <= 0.02 * c1;
    report.reliable = report.extrapolation_error < kSlopeTolerance &&
                      self_consistency < kSlopeTolerance && doubling_ok && vanishes;

    if (report.extrapolation_error >= kSlopeTolerance || self_consistency >= kSlopeTolerance) {
        std::ostringstream note;
        note << "Richardson levels of C(T)/T disagree: error estimate "
             << report.extrapolation_error << ", self-consistency " << self_consistency;
        report.notes.push_back(note.str());
    }
    if (!doubling_ok) {
        std::ostringstream note;
        note << "C(2T)/C(T) = " << report.linearity_ratio
             << " at T = 1e-4; linear growth requires 2";
        report.notes.push_back(note.str());
    }
    if (!vanishes) {
        std::ostringstream note;
        note << "capacity approaches " << format_nats(report.origin_value)
             << " nats at T = 1e-6 instead of vanishing";
        report.notes.push_back(note.str());
    }
    return report;
}

TauSweepResult tau_sweep(const ValidatedSystem& base_system, const std::vector<double>& tau_list,
                         double p_budget, double t_horizon, const SolverOptions& options) {
    if (base_system.stability != StabilityClass::Stable) {
        throw RefusalError("damping sweep requires a stable base system");
    }
    if (tau_list.empty()) {
        throw ConfigError("tau list must not be empty");
    }
    for (size_t i = 0; i < tau_list.size(); ++i) {
        const bool descending = i == 0 || tau_list[i] < tau_list[i - 1];
        if (!(tau_list[i] > 0.0) || !descending) {
            throw ConfigError("tau values must be positive and strictly descending");
        }
    }

    TauSweepResult out;
    for (const double tau : tau_list) {
        const CapacityResult r =
            capacity(validate(scale_damping(base_system.system, tau)), t_horizon, p_budget, options);
        out.points.push_back({tau, r.value_nats, r.value_bits, r.allocation.converged});
    }

    AsymptoteReport& report = out.report;
    report.regime = AsymptoteRegime::TauLimit;
    report.half_factor_applied = !options.paper_convention;
    out.sigma_scaled_limit_nats = std::numeric_limits<double>::quiet_NaN();

    const LtiSystem& s = base_system.system;
    const Matrix gg = 0.5 * ((s.g * s.g.transpose()) + (s.g * s.g.transpose()).transpose());

    if (s.sigma_nu > 0.0 && s.f.squaredNorm() > 0.0) {
        // The measurement floor T sigma_nu FF' does not rescale with tau while
        // every process Gramian shrinks like tau, so all gains collapse.
        report.notes.emplace_back(
            "fixed measurement noise does not rescale with damping; the limit is zero");
        out.limit_nats = 0.0;
        out.limit_bits = 0.0;
        report.reliable = out.points.back().capacity_nats < 1e-6;
        if (!report.reliable) {
            report.notes.emplace_back("smallest tau has not reached the zero limit");
        }
        return out;
    }

    // On the rescaled family A tau_base/tau every Gramian is the stationary
    // Lyapunov solution shrunk by the same factor, which cancels in the
    // gains; the limit is the capacity of this ratio bundle.
    GramianBundle lb;
    lb.t_horizon = t_horizon;
    double worst = 0.0;
    for (Eigen::Index m = 0; m < s.b.cols(); ++m) {
        const Matrix qm = s.b.col(m) * s.b.col(m).transpose();
        Matrix x = lyapunov_solve(s.a, qm, LyapunovSign::Minus);
        worst = std::max(worst, relative_residual(s.a, x, qm, LyapunovSign::Minus));
        lb.w.push_back(std::move(x));
    }
    const Matrix xg = lyapunov_solve(s.a, gg, LyapunovSign::Minus);
    worst = std::max(worst, relative_residual(s.a, xg, gg, LyapunovSign::Minus));
    lb.sigma_eta = s.sigma_eta * xg;
    lb.sigma_nu = Matrix::Zero(s.c.rows(), s.c.rows());
    Matrix sn = s.c * lb.sigma_eta * s.c.transpose();
    sn = 0.5 * (sn + sn.transpose());
    lb.sigma_n = sn;
    lb.c_obs = s.c;
    const double trace = sn.trace();
    if (!(trace > 0.0)) {
        throw RefusalError("damping limit has zero output noise");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> sn_eig(sn);
    if (sn_eig.eigenvalues().minCoeff() <= 1e-14 * sn_eig.eigenvalues().maxCoeff()) {
        lb.ridge_epsilon = 1e-12 * trace;
    }
    report.lyapunov_residual = worst;

    if (p_budget == 0.0) {
        out.limit_nats = 0.0;
        out.limit_bits = 0.0;
        report.reliable = worst < kResidualTolerance;
        return out;
    }

    const ModeSet modes = extract_modes(lb);
    const Allocation allocation = iterative_water_filling(lb, modes, p_budget, options);
    out.limit_nats = mutual_information(lb, modes, allocation, options.paper_convention);
    out.limit_bits = out.limit_nats / std::numbers::ln2;
    report.value_nats = out.limit_nats;
    report.value_bits = out.limit_bits;

    // Alternative sigma_eta placement: gains from the eigenvalues of
    // sigma_eta (GG')^{-1/2} sum_m b_m b_m' (GG')^{-1/2}, water-filled with
    // the same budget. Undefined when GG' is singular.
    const SymEig gg_eig = sym_eig(gg);
    const Eigen::Index n = gg.rows();
    const double gg_max = gg_eig.eigenvalues(0);
    if (gg_max > 0.0 && gg_eig.eigenvalues(n - 1) > 1e-12 * gg_max) {
        const Matrix inv_sqrt = gg_eig.eigenvectors *
                                gg_eig.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
                                gg_eig.eigenvectors.transpose();
        Matrix bsum = Matrix::Zero(n, n);
        for (Eigen::Index m = 0; m < s.b.cols(); ++m) {
            bsum += s.b.col(m) * s.b.col(m).transpose();
        }
        Matrix alt = s.sigma_eta * (inv_sqrt * bsum * inv_sqrt);
        alt = 0.5 * (alt + alt.transpose());
        const SymEig alt_eig = sym_eig(alt);
        std::vector<double> gains;
        for (Eigen::Index i = 0; i < n; ++i) {
            gains.push_back(std::max(0.0, alt_eig.eigenvalues(i)));
        }
        double scaled = 0.0;
        if (const auto waterline = waterline_solve(gains, p_budget)) {
            for (const double a : gains) {
                if (a <= 0.0) continue;
                const double sigma = std::max(0.0, 1.0 / *waterline - 1.0 / a);
                scaled += std::log1p(sigma * a);
            }
        }
        out.sigma_scaled_limit_nats = options.paper_convention ? scaled : 0.5 * scaled;
        if (std::abs(out.sigma_scaled_limit_nats - out.limit_nats) >
            1e-9 * std::max(1.0, std::abs(out.limit_nats))) {
            report.notes.push_back("sigma_eta placement ambiguity: dividing the noise Gramian gives " +
                                   format_nats(out.limit_nats) + " nats, scaling by sigma_eta gives " +
                                   format_nats(out.sigma_scaled_limit_nats) + " nats");
        }
    } else {
        report.notes.emplace_back("GG' is singular; the sigma_eta-scaled placement is undefined");
    }

    report.reliable = worst < kResidualTolerance;
    if (out.limit_nats > 0.0) {
        const double gap = std::abs(out.points.back().capacity_nats - out.limit_nats) / out.limit_nats;
        if (gap >= 0.01) {
            report.reliable = false;
            std::ostringstream note;
            note << "smallest tau has not reached the limit: relative gap " << gap;
            report.notes.push_back(note.str());
        }
    }
    return out;
}

}  // namespace empcap
