#include "empcap/capacity_solver.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <string>

#include "empcap/errors.hpp"

namespace empcap {

namespace {

constexpr double kGainFloor = 1e-14;

double logdet_spd(const Matrix& m, const char* who) {
    const Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
        throw NumericError(std::string(who) + ": covariance is not positive definite");
    }
    double acc = 0.0;
    const Matrix l = llt.matrixL();
    for (Eigen::Index i = 0; i < m.rows(); ++i) acc += std::log(l(i, i));
    return 2.0 * acc;
}

// Observed mode vectors C z_j as columns, plus the ridge-adjusted noise.
struct Workspace {
    Matrix cz;         // q x k
    Matrix sigma_eff;  // q x q
    double logdet_noise = 0.0;

    Workspace(const GramianBundle& bundle, const ModeSet& modes) {
        const auto k = static_cast<Eigen::Index>(modes.entries.size());
        const auto q = bundle.sigma_n.rows();
        cz.resize(q, k);
        for (Eigen::Index j = 0; j < k; ++j) {
            cz.col(j) = bundle.c_obs * modes.entries[static_cast<size_t>(j)].z;
        }
        sigma_eff = bundle.sigma_n;
        sigma_eff.diagonal().array() += bundle.ridge_epsilon;
        logdet_noise = logdet_spd(sigma_eff, "output noise");
    }

    [[nodiscard]] Matrix mixed(const std::vector<double>& sigma, Eigen::Index skip = -1) const {
        Matrix sy = sigma_eff;
        for (Eigen::Index j = 0; j < cz.cols(); ++j) {
            const double s = sigma[static_cast<size_t>(j)];
            if (j == skip || s <= 0.0) continue;
            sy.noalias() += s * cz.col(j) * cz.col(j).transpose();
        }
        return sy;
    }

    [[nodiscard]] double objective(const std::vector<double>& sigma) const {
        return logdet_spd(mixed(sigma), "mixed output") - logdet_noise;
    }
};

void require_aligned(const ModeSet& modes, const Allocation& allocation) {
    if (allocation.sigma.size() != modes.entries.size()) {
        throw NumericError("allocation size does not match the mode set");
    }
}

// Conditional gains a_j = z_j' C' inv(Sigma_y - sigma_j M_j) C z_j for all
// modes, from one factorization of Sigma_y plus the rank-one downdate
// a = r / (1 - sigma r). Falls back to a direct solve near the singular
// denominator.
std::vector<double> conditional_gains(const Workspace& ws, const std::vector<double>& sigma) {
    const auto k = ws.cz.cols();
    std::vector<double> gains(static_cast<size_t>(k), 0.0);
    const Eigen::LLT<Matrix> llt(ws.mixed(sigma));
    if (llt.info() != Eigen::Success) {
        throw NumericError("mixed output covariance is not positive definite");
    }
    for (Eigen::Index j = 0; j < k; ++j) {
        if (ws.cz.col(j).norm() == 0.0) continue;
        const double r = ws.cz.col(j).dot(llt.solve(ws.cz.col(j)));
        const double denom = 1.0 - sigma[static_cast<size_t>(j)] * r;
        double a;
        if (denom < 1e-12) {
            a = ws.cz.col(j).dot(
                Eigen::LLT<Matrix>(ws.mixed(sigma, j)).solve(ws.cz.col(j)));
        } else {
            a = r / denom;
        }
        gains[static_cast<size_t>(j)] = std::max(0.0, a);
    }
    return gains;
}

std::vector<double> fill_to_waterline(const std::vector<double>& gains, double lambda) {
    std::vector<double> sigma(gains.size(), 0.0);
    for (size_t j = 0; j < gains.size(); ++j) {
        if (gains[j] >= kGainFloor) {
            sigma[j] = std::max(0.0, 1.0 / lambda - 1.0 / gains[j]);
        }
    }
    return sigma;
}

}  // namespace

double mutual_information(const GramianBundle& bundle, const ModeSet& modes,
                          const Allocation& allocation, bool paper_convention) {
    require_aligned(modes, allocation);
    const Workspace ws(bundle, modes);
    const double raw = ws.objective(allocation.sigma);
    const double scaled = paper_convention ? raw : 0.5 * raw;
    return std::max(0.0, scaled);
}

double mode_gain(const Vector& z, const Matrix& c_obs, const Matrix& conditional_cov) {
    const Eigen::LLT<Matrix> llt(conditional_cov);
    if (llt.info() != Eigen::Success) {
        throw NumericError("conditional covariance is not positive definite");
    }
    const Vector cz = c_obs * z;
    if (cz.norm() == 0.0) return 0.0;
    return std::max(0.0, cz.dot(llt.solve(cz)));
}

std::optional<double> waterline_solve(const std::vector<double>& gains, double p_budget,
                                      double tol) {
    if (!(p_budget > 0.0)) throw NumericError("power budget must be positive");
    double a_max = 0.0;
    for (const double a : gains) {
        if (!std::isfinite(a)) throw NumericError("non-finite gain");
        a_max = std::max(a_max, a);
    }
    if (a_max < kGainFloor) return std::nullopt;

    const auto spent = [&](double lambda) {
        double s = 0.0;
        for (const double a : gains) {
            if (a >= kGainFloor) s += std::max(0.0, 1.0 / lambda - 1.0 / a);
        }
        return s;
    };

    // spent() is decreasing in lambda: >= P at the lower bracket (the top
    // gain alone accounts for P there), 0 < P at lambda = a_max.
    double lo = a_max / (1.0 + p_budget * a_max);
    double hi = a_max;
    double mid = lo;
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        const double excess = spent(mid) - p_budget;
        if (std::abs(excess) < tol) break;
        if (excess > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish on the spent-power equation. The bisection tolerance is
    // absolute in power, and the leftover budget mismatch tilts every fill
    // target off the ascent cone near the optimum; a machine-exact waterline
    // removes that bias. The active count is locked between steps, so each
    // update is the exact solve of the current active set.
    for (int iter = 0; iter < 3; ++iter) {
        double active = 0.0;
        for (const double a : gains) {
            if (a >= kGainFloor && 1.0 / mid - 1.0 / a > 0.0) active += 1.0;
        }
        if (active == 0.0) break;
        const double derivative = -active / (mid * mid);
        mid -= (spent(mid) - p_budget) / derivative;
    }
    return mid;
}

Allocation iterative_water_filling(const GramianBundle& bundle, const ModeSet& modes,
                                   double p_budget, const SolverOptions& options) {
    if (modes.entries.empty()) throw NumericError("mode set is empty");
    if (!(p_budget > 0.0)) throw NumericError("power budget must be positive");
    const size_t k = modes.entries.size();
    const Workspace ws(bundle, modes);

    Allocation out;
    out.budget = p_budget;

    std::vector<double> sigma(k, p_budget / static_cast<double>(k));
    if (options.initial_sigma) {
        if (options.initial_sigma->size() != k) {
            throw NumericError("initial allocation size does not match the mode set");
        }
        for (const double s : *options.initial_sigma) {
            if (!(s >= 0.0) || !std::isfinite(s)) {
                throw NumericError("initial allocation must be finite and non-negative");
            }
        }
        sigma = *options.initial_sigma;
    }

    double f_cur = ws.objective(sigma);
    bool dead_channel = false;

    int sweep = 0;
    for (; sweep < options.max_sweeps && !out.converged; ++sweep) {
        const std::vector<double> gains = conditional_gains(ws, sigma);
        const std::optional<double> lambda =
            waterline_solve(gains, p_budget, options.waterline_tol);
        if (!lambda) {
            // No mode can carry information: the zero-capacity configuration.
            sigma.assign(k, 0.0);
            dead_channel = true;
            out.converged = true;
            out.objective_trace.push_back(0.0);
            break;
        }
        const std::vector<double> target = fill_to_waterline(gains, *lambda);

        double step = 0.0;
        for (size_t j = 0; j < k; ++j) step = std::max(step, std::abs(target[j] - sigma[j]));

        // The simultaneous update can overshoot; a convex backtrack toward the
        // waterline point keeps sigma feasible and the objective ascending.
        double beta = 1.0;
        std::vector<double> trial(k);
        double f_trial = f_cur;
        while (true) {
            for (size_t j = 0; j < k; ++j) {
                trial[j] = sigma[j] + beta * (target[j] - sigma[j]);
            }
            f_trial = ws.objective(trial);
            if (f_trial >= f_cur - 1e-14 * std::max(1.0, std::abs(f_cur)) || beta < 1e-9) {
                break;
            }
            beta *= 0.5;
        }
        sigma = trial;
        f_cur = std::max(f_cur, f_trial);
        out.objective_trace.push_back(f_cur);
        // Convergence is judged on the proposed displacement, not the damped
        // one: a backtracked step shrinks beta * step long before the iterate
        // reaches the fixed point, and stopping there leaves a KKT gap.
        if (step < options.fixed_point_tol) out.converged = true;
    }
    out.iterations = sweep;
    out.sigma = sigma;

    // Diagnostics against the final point: gains, re-solved waterline, KKT.
    if (dead_channel) {
        out.waterline = 0.0;
        out.kkt_residual = 0.0;
        return out;
    }
    const std::vector<double> gains = conditional_gains(ws, sigma);
    const std::optional<double> lambda =
        waterline_solve(gains, p_budget, options.waterline_tol);
    out.waterline = lambda.value_or(0.0);
    double kkt = 0.0;
    for (size_t j = 0; j < k; ++j) {
        if (sigma[j] > 0.0) {
            kkt = std::max(kkt,
                           std::abs(gains[j] / (1.0 + sigma[j] * gains[j]) - out.waterline));
        } else {
            kkt = std::max(kkt, std::max(0.0, gains[j] - out.waterline));
        }
    }
    out.kkt_residual = kkt;
    return out;
}

bool zero_capacity_guard(const ModeSet& modes, const Allocation& allocation) {
    require_aligned(modes, allocation);
    for (size_t j = 0; j < allocation.sigma.size(); ++j) {
        if (allocation.sigma[j] > 0.0 && modes.entries[j].z.isZero(0.0)) {
            return true;
        }
    }
    return false;
}

double chain_rule_audit(const GramianBundle& bundle, const ModeSet& modes,
                        const Allocation& allocation) {
    require_aligned(modes, allocation);
    const Workspace ws(bundle, modes);
    const size_t k = modes.entries.size();
    const std::vector<double>& sigma = allocation.sigma;

    const Matrix sy = ws.mixed(sigma);
    const double l_y = logdet_spd(sy, "mixed output");
    const double l_n = ws.logdet_noise;

    double worst = 0.0;
    for (size_t j = 0; j < k; ++j) {
        double rest_power = 0.0;
        for (size_t l = 0; l < k; ++l) {
            if (l != j) rest_power += sigma[l];
        }
        // Empty remainder: the conditional term vanishes identically and the
        // single-mode term is the full objective; the identity is exact.
        if (rest_power == 0.0) continue;

        // Two independent routes to the conditional covariance: subtract the
        // mode from the full mix, or accumulate the others afresh.
        Matrix cond_schur = sy;
        if (sigma[j] > 0.0) {
            cond_schur.noalias() -=
                sigma[j] * ws.cz.col(static_cast<Eigen::Index>(j)) *
                ws.cz.col(static_cast<Eigen::Index>(j)).transpose();
        }
        const double l_schur = logdet_spd(cond_schur, "conditional output");
        const double l_sum =
            logdet_spd(ws.mixed(sigma, static_cast<Eigen::Index>(j)), "conditional output");

        const double i_full = l_y - l_n;
        const double i_single = l_y - l_schur;
        const double i_cond = l_sum - l_n;
        worst = std::max(worst, std::abs(i_full - i_single - i_cond));
    }
    return worst;
}

CapacityResult capacity(const ValidatedSystem& system, double t_horizon, double p_budget,
                        const SolverOptions& options) {
    if (std::isnan(t_horizon)) throw NumericError("horizon is NaN");
    if (!(p_budget >= 0.0) || !std::isfinite(p_budget)) {
        throw ConfigError("power budget must be finite and non-negative");
    }

    CapacityResult res;
    res.half_factor_applied = !options.paper_convention;
    res.t_horizon = t_horizon;
    res.infinite_horizon = std::isinf(t_horizon);
    if (p_budget == 0.0 || t_horizon == 0.0) {
        res.allocation.converged = true;
        res.allocation.budget = p_budget;
        return res;
    }

    const GramianBundle bundle = res.infinite_horizon ? gramians_at_infinity(system)
                                                      : gramians_at(system, t_horizon);
    const ModeSet modes = extract_modes(bundle);
    res.ridge_applied = bundle.ridge_epsilon > 0.0;
    res.perfect_sensor = bundle.infinite;

    res.allocation = iterative_water_filling(bundle, modes, p_budget, options);
    if (zero_capacity_guard(modes, res.allocation)) {
        return res;  // degenerate weight on a null mode: capacity is zero
    }
    res.value_nats = mutual_information(bundle, modes, res.allocation, options.paper_convention);
    res.value_bits = res.value_nats / std::numbers::ln2;

    const Workspace ws(bundle, modes);
    const std::vector<double> gains = conditional_gains(ws, res.allocation.sigma);
    const double scale = options.paper_convention ? 1.0 : 0.5;
    for (size_t j = 0; j < modes.entries.size(); ++j) {
        if (res.allocation.sigma[j] <= 0.0) continue;
        ModeContribution c;
        c.channel = modes.entries[j].channel;
        c.index = modes.entries[j].index;
        c.sigma = res.allocation.sigma[j];
        c.gain = gains[j];
        c.nats = scale * std::log1p(c.sigma * c.gain);
        res.contributions.push_back(c);
    }
    return res;
}

SynthesizedControls synthesize_controls(const ValidatedSystem& system, double t_horizon,
                                        const ModeSet& modes, const Allocation& allocation,
                                        const std::vector<double>& sample_grid) {
    require_aligned(modes, allocation);
    if (!(t_horizon > 0.0) || !std::isfinite(t_horizon)) {
        throw NumericError("horizon must be finite and positive");
    }
    if (sample_grid.size() < 2) throw NumericError("sample grid needs at least two points");
    const double slack = 1e-12 * t_horizon;
    for (size_t i = 0; i < sample_grid.size(); ++i) {
        if (!std::isfinite(sample_grid[i])) throw NumericError("non-finite grid point");
        if (i > 0 && !(sample_grid[i] > sample_grid[i - 1])) {
            throw NumericError("sample grid must be strictly increasing");
        }
    }
    if (sample_grid.front() < -slack || sample_grid.back() > t_horizon + slack) {
        throw NumericError("sample grid must lie inside [0, T]");
    }
    for (size_t j = 0; j < modes.entries.size(); ++j) {
        if (allocation.sigma[j] > 0.0 && modes.entries[j].negligible) {
            throw RefusalError("cannot synthesize a control on a negligible mode");
        }
    }

    const LtiSystem& s = system.system;
    SynthesizedControls out;
    out.grid = sample_grid;
    for (size_t j = 0; j < modes.entries.size(); ++j) {
        if (!modes.entries[j].negligible) out.mode_index.push_back(static_cast<int>(j));
    }
    const auto rows = static_cast<Eigen::Index>(out.mode_index.size());
    const auto cols = static_cast<Eigen::Index>(sample_grid.size());
    out.g.resize(rows, cols);

    for (Eigen::Index kcol = 0; kcol < cols; ++kcol) {
        // Columns of wb are e^{A(T-t)} b_m: the response weight each channel
        // contributes at the horizon.
        const Matrix wb = mat_exp(s.a, t_horizon - sample_grid[static_cast<size_t>(kcol)]) * s.b;
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Mode& mode = modes.entries[static_cast<size_t>(out.mode_index[static_cast<size_t>(r)])];
            out.g(r, kcol) = mode.v.dot(wb.col(mode.channel)) / std::sqrt(mode.omega);
        }
    }

    out.r_u.assign(static_cast<size_t>(s.inputs()), Matrix::Zero(cols, cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const size_t j = static_cast<size_t>(out.mode_index[static_cast<size_t>(r)]);
        const Mode& mode = modes.entries[j];
        const double s_j = allocation.sigma[j];
        if (s_j <= 0.0) continue;
        out.r_u[static_cast<size_t>(mode.channel)].noalias() +=
            s_j * out.g.row(r).transpose() * out.g.row(r);
    }
    double power = 0.0;
    for (const Matrix& r_m : out.r_u) {
        for (Eigen::Index i = 0; i + 1 < cols; ++i) {
            power += 0.5 * (r_m(i, i) + r_m(i + 1, i + 1)) *
                     (sample_grid[static_cast<size_t>(i + 1)] - sample_grid[static_cast<size_t>(i)]);
        }
    }
    out.realized_power = power;
    return out;
}

}  // namespace empcap
