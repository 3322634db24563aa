#include "empcap/matrix_kernels.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace empcap {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;

void require_square(const Matrix& m, const char* who) {
    if (m.rows() != m.cols()) {
        throw NumericError(std::string(who) + ": matrix must be square, got " +
                           std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

}  // namespace

bool is_symmetric(const Matrix& m, double rel_tol) {
    if (m.rows() != m.cols()) return false;
    if (m.size() == 0) return true;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void require_finite(const Matrix& m, const char* who) {
    if (!m.allFinite()) {
        throw NumericError(std::string(who) + ": non-finite entries");
    }
}

Matrix mat_exp(const Matrix& a, double t) {
    require_square(a, "mat_exp");
    require_finite(a, "mat_exp");
    if (!std::isfinite(t)) throw NumericError("mat_exp: non-finite time argument");
    Matrix result = (a * t).exp();
    if (!result.allFinite()) {
        throw NumericError("mat_exp: overflow, ||At||_1 = " +
                           std::to_string(a.cwiseAbs().colwise().sum().maxCoeff() * std::abs(t)));
    }
    return result;
}

Matrix lyapunov_solve(const Matrix& a, const Matrix& q, LyapunovSign sign) {
    require_square(a, "lyapunov_solve");
    require_finite(a, "lyapunov_solve");
    if (q.rows() != a.rows() || q.cols() != a.cols()) {
        throw NumericError("lyapunov_solve: Q dimension mismatch");
    }
    if (!is_symmetric(q)) throw NumericError("lyapunov_solve: Q must be symmetric");

    // Both signs reduce to the stable-case equation BX + XB' = -Q with
    // B = A (Minus) or B = -A (Plus); the sign precondition is exactly that
    // B is Hurwitz.
    const Matrix b = (sign == LyapunovSign::Minus) ? a : Matrix(-a);
    const Eigen::Index n = b.rows();

    Eigen::ComplexSchur<Matrix> schur(b);
    if (schur.info() != Eigen::Success) {
        throw NumericError("lyapunov_solve: Schur factorization failed");
    }
    const ComplexMatrix& u = schur.matrixU();
    const ComplexMatrix& t = schur.matrixT();

    const double spectral_scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double re = t(i, i).real();
        if (re >= 0.0) {
            throw RefusalError(sign == LyapunovSign::Minus
                                   ? "lyapunov_solve: sign=- requires a strictly stable spectrum"
                                   : "lyapunov_solve: sign=+ requires a strictly anti-stable spectrum");
        }
        if (-re < 1e-12 * spectral_scale) {
            throw NumericError("lyapunov_solve: eigenvalue too close to the imaginary axis, "
                               "the equation is ill conditioned");
        }
    }

    // Solve T Y + Y T^H = -F column by column from the last; T upper
    // triangular makes each step a shifted triangular solve.
    const ComplexMatrix f = u.adjoint() * q * u;
    ComplexMatrix y = ComplexMatrix::Zero(n, n);
    ComplexMatrix shifted(n, n);
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        Eigen::VectorXcd rhs = -f.col(k);
        for (Eigen::Index j = k + 1; j < n; ++j) {
            rhs -= std::conj(t(k, j)) * y.col(j);
        }
        shifted = t;
        shifted.diagonal().array() += std::conj(t(k, k));
        y.col(k) = shifted.triangularView<Eigen::Upper>().solve(rhs);
    }

    Matrix x = (u * y * u.adjoint()).real();
    x = 0.5 * (x + x.transpose());
    require_finite(x, "lyapunov_solve");
    return x;
}

Matrix finite_gramian(const Matrix& a, const Matrix& s, double t_horizon) {
    require_square(a, "finite_gramian");
    require_finite(a, "finite_gramian");
    require_finite(s, "finite_gramian");
    if (s.rows() != a.rows()) throw NumericError("finite_gramian: factor row mismatch");
    if (!(t_horizon >= 0.0)) throw NumericError("finite_gramian: horizon must be >= 0");

    const Eigen::Index n = a.rows();
    if (t_horizon == 0.0) return Matrix::Zero(n, n);

    // Chunk so one block exponential never sees ||A||_1 * h beyond ~20;
    // longer horizons accumulate through the additivity identity
    // W(T1 + h) = e^{Ah} W(T1) e^{A'h} + W(h).
    const double a_norm = n > 0 ? a.cwiseAbs().colwise().sum().maxCoeff() : 0.0;
    const int chunks = static_cast<int>(
        std::clamp(std::ceil(a_norm * t_horizon / 20.0), 1.0, 1024.0));
    const double h = t_horizon / chunks;

    Matrix block = Matrix::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = a;
    block.topRightCorner(n, n) = s * s.transpose();
    block.bottomRightCorner(n, n) = -a.transpose();
    const Matrix e = mat_exp(block, h);
    const Matrix phi = e.topLeftCorner(n, n);
    Matrix w_h = e.topRightCorner(n, n) * phi.transpose();
    w_h = 0.5 * (w_h + w_h.transpose());

    Matrix w = w_h;
    for (int c = 1; c < chunks; ++c) {
        w = phi * w * phi.transpose() + w_h;
    }
    w = 0.5 * (w + w.transpose());
    require_finite(w, "finite_gramian");
    return w;
}

SymEig sym_eig(const Matrix& w) {
    require_square(w, "sym_eig");
    if (!is_symmetric(w)) throw NumericError("sym_eig: input must be symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(w);
    if (solver.info() != Eigen::Success) {
        throw NumericError("sym_eig: eigendecomposition failed");
    }

    const Eigen::Index n = w.rows();
    SymEig out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    // Eigen returns ascending order; flip to descending and orient each
    // vector so its first component of meaningful magnitude is positive.
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index src = n - 1 - i;
        out.eigenvalues(i) = solver.eigenvalues()(src);
        Vector v = solver.eigenvectors().col(src);
        for (Eigen::Index r = 0; r < n; ++r) {
            if (std::abs(v(r)) > 1e-12) {
                if (v(r) < 0.0) v = -v;
                break;
            }
        }
        out.eigenvectors.col(i) = v;
    }
    return out;
}

}  // namespace empcap
