#include "empcap/discrete_oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

#include "empcap/errors.hpp"
#include "empcap/gramian_engine.hpp"

namespace empcap {

DiscreteChannel discretize(const ValidatedSystem& system, double t_horizon, int steps) {
    if (steps < 1) throw NumericError("need at least one step");
    if (!(t_horizon > 0.0) || !std::isfinite(t_horizon)) {
        throw NumericError("horizon must be finite and positive");
    }
    const LtiSystem& s = system.system;
    const auto n = static_cast<Eigen::Index>(s.order());
    const auto p = static_cast<Eigen::Index>(s.inputs());
    const auto q = static_cast<Eigen::Index>(s.outputs());
    const double delta = t_horizon / steps;

    // Van Loan block of [[A, I], [0, 0]]: the top-right exponential block is
    // the ZOH input integral int_0^delta e^{As} ds.
    Matrix aug = Matrix::Zero(2 * n, 2 * n);
    aug.topLeftCorner(n, n) = s.a;
    aug.topRightCorner(n, n) = Matrix::Identity(n, n);
    const Matrix aug_exp = mat_exp(aug, delta);
    const Matrix psi_b = aug_exp.topRightCorner(n, n) * s.b;
    const Matrix phi = mat_exp(s.a, delta);

    DiscreteChannel out;
    out.steps = steps;
    out.delta = delta;
    out.h.resize(q, static_cast<Eigen::Index>(steps) * p);
    Matrix propagated = psi_b;  // e^{A (N-1-k) delta} Psi B, built right to left
    for (int k = steps - 1; k >= 0; --k) {
        out.h.middleCols(static_cast<Eigen::Index>(k) * p, p) = s.c * propagated;
        if (k > 0) propagated = phi * propagated;
    }

    const GramianBundle bundle = gramians_at(system, t_horizon);
    out.noise_cov = bundle.sigma_n;
    out.noise_cov.diagonal().array() += bundle.ridge_epsilon;
    return out;
}

double oracle_capacity(const DiscreteChannel& channel, double p_budget,
                       bool paper_convention) {
    if (!(p_budget >= 0.0) || !std::isfinite(p_budget)) {
        throw NumericError("power budget must be finite and non-negative");
    }
    if (p_budget == 0.0) return 0.0;

    const Eigen::LLT<Matrix> llt(channel.noise_cov);
    if (llt.info() != Eigen::Success) {
        throw NumericError("noise covariance is not positive definite");
    }
    // Unit-power substitution u_k sqrt(delta) absorbs the step weight, then
    // whitening reduces the problem to parallel Gaussian subchannels on the
    // eigenvalues of K K'.
    const Matrix k_map =
        llt.matrixL().solve(channel.h) / std::sqrt(channel.delta);
    const Matrix kk = k_map * k_map.transpose();
    Vector levels =
        Eigen::SelfAdjointEigenSolver<Matrix>(kk, Eigen::EigenvaluesOnly).eigenvalues();

    std::vector<double> a(levels.data(), levels.data() + levels.size());
    std::sort(a.begin(), a.end(), std::greater<>());
    const double floor = 1e-14 * std::max(1.0, a.empty() ? 0.0 : a.front());
    while (!a.empty() && a.back() < floor) a.pop_back();
    if (a.empty()) return 0.0;

    // Closed-form water level over the top k subchannels:
    // 1/lambda = (P + sum 1/a_i) / k, valid while the k-th stays wet.
    double inv_sum = 0.0;
    double water = 0.0;
    size_t active = 0;
    for (size_t k = 0; k < a.size(); ++k) {
        inv_sum += 1.0 / a[k];
        const double candidate = (p_budget + inv_sum) / static_cast<double>(k + 1);
        if (candidate - 1.0 / a[k] <= 0.0) break;
        water = candidate;
        active = k + 1;
    }

    double nats = 0.0;
    for (size_t i = 0; i < active; ++i) nats += std::log(water * a[i]);
    return (paper_convention ? 1.0 : 0.5) * std::max(0.0, nats);
}

}  // namespace empcap
