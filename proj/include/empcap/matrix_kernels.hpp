#pragma once

#include <Eigen/Dense>

#include "empcap/errors.hpp"

namespace empcap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative symmetry test: max|M - M'| <= tol * max(1, max|M|).
[[nodiscard]] bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

/// Throws NumericError if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* who);

/// e^{At}. Errors on non-finite input or overflowing result magnitude.
[[nodiscard]] Matrix mat_exp(const Matrix& a, double t);

/// Sign of the right-hand side of the continuous Lyapunov equation.
enum class LyapunovSign {
    Minus,  ///< AX + XA' = -Q, requires Re(eig A) < 0
    Plus,   ///< AX + XA' = +Q, requires Re(eig A) > 0
};

/// Solves the continuous Lyapunov equation for the given sign via complex
/// Schur reduction and triangular back-substitution. The spectrum of A must
/// lie strictly in the half-plane matching the sign; otherwise a RefusalError
/// is raised. Result is symmetrized; residual is the caller-checkable
/// contract ||AX + XA' -+ Q||_F / ||Q||_F < 1e-10.
[[nodiscard]] Matrix lyapunov_solve(const Matrix& a, const Matrix& q, LyapunovSign sign);

/// Finite-horizon Gramian W = integral_0^T e^{A(T-t)} SS' e^{A'(T-t)} dt for
/// an n x k factor S. Computed from the augmented block exponential
/// exp([[A, SS'],[0, -A']] h), accumulated over chunks W <- Phi W Phi' + W_h
/// so that a single exponential never sees ||A||*h beyond a fixed budget.
/// T = 0 gives the zero matrix.
[[nodiscard]] Matrix finite_gramian(const Matrix& a, const Matrix& s, double t_horizon);

/// Eigendecomposition of a symmetric PSD matrix.
struct SymEig {
    Vector eigenvalues;   ///< sorted descending
    Matrix eigenvectors;  ///< columns aligned with eigenvalues, orthonormal
};

/// Symmetric eigendecomposition with a deterministic orientation: eigenvalues
/// descending, each eigenvector scaled so its first component of magnitude
/// above 1e-12 is positive. Non-symmetric input is a contract error.
[[nodiscard]] SymEig sym_eig(const Matrix& w);

}  // namespace empcap
