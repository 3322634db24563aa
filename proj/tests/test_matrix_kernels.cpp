#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "empcap/matrix_kernels.hpp"
#include "support/oracles.hpp"

using namespace empcap;
using empcap::testing::Rng;

namespace {

double rel_residual(const Matrix& a, const Matrix& x, const Matrix& q, LyapunovSign sign) {
    const double rhs_sign = (sign == LyapunovSign::Minus) ? -1.0 : 1.0;
    return (a * x + x * a.transpose() - rhs_sign * q).norm() / q.norm();
}

}  // namespace

TEST_CASE("mat_exp frozen values") {
    CHECK((mat_exp(Matrix::Zero(2, 2), 5.0) - Matrix::Identity(2, 2)).norm() == doctest::Approx(0.0));

    Matrix scalar(1, 1);
    scalar << -1.0;
    CHECK(mat_exp(scalar, std::log(2.0))(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

    Matrix nilpotent(2, 2);
    nilpotent << 0, 1, 0, 0;
    Matrix expected(2, 2);
    expected << 1, 1, 0, 1;
    CHECK((mat_exp(nilpotent, 1.0) - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mat_exp semigroup property") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = rng.stable_matrix(4);
        const double s = rng.uniform(0.0, 5.0);
        const double t = rng.uniform(0.0, 5.0);
        const Matrix lhs = mat_exp(a, s + t);
        const Matrix rhs = mat_exp(a, s) * mat_exp(a, t);
        CHECK((lhs - rhs).norm() < 1e-9);
    }
}

TEST_CASE("mat_exp error paths") {
    CHECK_THROWS_AS((void)mat_exp(Matrix::Zero(2, 3), 1.0), NumericError);

    Matrix bad(1, 1);
    bad << std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((void)mat_exp(bad, 1.0), NumericError);

    Matrix big(1, 1);
    big << 1000.0;
    CHECK_THROWS_AS((void)mat_exp(big, 1000.0), NumericError);
}

TEST_CASE("lyapunov_solve frozen scalars") {
    Matrix a(1, 1), q(1, 1);
    a << -1.0;
    q << 2.0;
    CHECK(lyapunov_solve(a, q, LyapunovSign::Minus)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

    Matrix a2 = Matrix::Zero(2, 2);
    a2.diagonal() << -1.0, -2.0;
    const Matrix x2 = lyapunov_solve(a2, Matrix::Identity(2, 2), LyapunovSign::Minus);
    CHECK(x2(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(x2(1, 1) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(std::abs(x2(0, 1)) < 1e-15);

    Matrix anti(1, 1);
    anti << 1.0;
    Matrix q1(1, 1);
    q1 << 1.0;
    CHECK(lyapunov_solve(anti, q1, LyapunovSign::Plus)(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("lyapunov_solve residual on random stable systems") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = rng.stable_matrix(6);
        const Matrix g = rng.gaussian_matrix(6, 6);
        const Matrix q = g * g.transpose();
        const Matrix x = lyapunov_solve(a, q, LyapunovSign::Minus);
        CHECK(rel_residual(a, x, q, LyapunovSign::Minus) < 1e-10);
        CHECK(is_symmetric(x));
    }
}

TEST_CASE("lyapunov_solve agrees with Kronecker vectorization oracle") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = rng.integer(2, 5);
        const Matrix a = rng.stable_matrix(n);
        const Matrix g = rng.gaussian_matrix(n, n);
        const Matrix q = g * g.transpose();
        const Matrix x = lyapunov_solve(a, q, LyapunovSign::Minus);
        const Matrix x_ref = testing::kron_lyapunov(a, q, LyapunovSign::Minus);
        CHECK((x - x_ref).norm() / x_ref.norm() < 1e-9);

        const Matrix x_anti = lyapunov_solve(Matrix(-a), q, LyapunovSign::Plus);
        const Matrix x_anti_ref = testing::kron_lyapunov(Matrix(-a), q, LyapunovSign::Plus);
        CHECK((x_anti - x_anti_ref).norm() / x_anti_ref.norm() < 1e-9);
    }
}

TEST_CASE("lyapunov_solve stability-class preconditions") {
    Matrix stable(1, 1), q(1, 1);
    stable << -1.0;
    q << 1.0;
    CHECK_THROWS_AS((void)lyapunov_solve(stable, q, LyapunovSign::Plus), RefusalError);

    Matrix mixed = Matrix::Zero(2, 2);
    mixed.diagonal() << 1.0, -1.0;
    CHECK_THROWS_AS((void)lyapunov_solve(mixed, Matrix::Identity(2, 2), LyapunovSign::Minus),
                    RefusalError);

    CHECK_THROWS_AS((void)lyapunov_solve(Matrix::Zero(1, 1), q, LyapunovSign::Minus),
                    RefusalError);

    Matrix skew(2, 2);
    skew << 1, 2, 3, 4;
    CHECK_THROWS_AS((void)lyapunov_solve(stable, skew, LyapunovSign::Minus), NumericError);
}

TEST_CASE("finite_gramian frozen values") {
    Matrix zero(1, 1), one(1, 1);
    zero << 0.0;
    one << 1.0;
    CHECK(finite_gramian(zero, one, 2.0)(0, 0) == doctest::Approx(2.0).epsilon(1e-13));

    Matrix decay(1, 1);
    decay << -1.0;
    const double expected = (1.0 - std::exp(-2.0)) / 2.0;
    CHECK(finite_gramian(decay, one, 1.0)(0, 0) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(finite_gramian(decay, one, 1.0)(0, 0) == doctest::Approx(0.432332).epsilon(1e-6));

    CHECK(finite_gramian(decay, one, 0.0)(0, 0) == 0.0);
}

TEST_CASE("finite_gramian matches quadrature oracle") {
    Rng rng(47);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = rng.integer(2, 4);
        const Matrix a = rng.stable_matrix(n);
        const Matrix s = rng.gaussian_matrix(n, 1);
        const double t = rng.uniform(0.5, 3.0);
        const Matrix w = finite_gramian(a, s, t);
        const Matrix w_ref = testing::quadrature_gramian(a, s, t);
        CHECK((w - w_ref).norm() / w_ref.norm() < 1e-8);
    }
}

TEST_CASE("finite_gramian chunked accumulation handles stiff horizons") {
    Matrix a(1, 1), s(1, 1);
    a << -30.0;
    s << 1.0;
    // ||A||*T = 300 forces multi-chunk accumulation; closed form 1/60.
    CHECK(finite_gramian(a, s, 10.0)(0, 0) == doctest::Approx(1.0 / 60.0).epsilon(1e-12));

    Rng rng(53);
    Matrix a3 = rng.stable_matrix(3) * 15.0;
    const Matrix s3 = rng.gaussian_matrix(3, 2);
    const Matrix w = finite_gramian(a3, s3, 5.0);
    const Matrix w_ref = testing::quadrature_gramian(a3, s3, 5.0);
    CHECK((w - w_ref).norm() / std::max(1e-30, w_ref.norm()) < 1e-8);
}

TEST_CASE("finite_gramian additivity identity") {
    Rng rng(59);
    for (int trial = 0; trial < 6; ++trial) {
        const Matrix a = rng.stable_matrix(3);
        const Matrix s = rng.gaussian_matrix(3, 1);
        const double t1 = rng.uniform(0.2, 2.0);
        const double t2 = rng.uniform(0.2, 2.0);
        const Matrix lhs = finite_gramian(a, s, t1 + t2);
        const Matrix phi = mat_exp(a, t2);
        const Matrix rhs = phi * finite_gramian(a, s, t1) * phi.transpose() +
                           finite_gramian(a, s, t2);
        CHECK((lhs - rhs).norm() < 1e-9);
    }
}

TEST_CASE("finite_gramian converges to the Lyapunov solution for stable A") {
    Rng rng(61);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix a = rng.stable_matrix(4);
        const Matrix s = rng.gaussian_matrix(4, 2);
        const double min_decay = -a.eigenvalues().real().maxCoeff();
        const double t = 20.0 / min_decay;
        const Matrix w_inf = lyapunov_solve(a, Matrix(s * s.transpose()), LyapunovSign::Minus);
        const Matrix w_t = finite_gramian(a, s, t);
        CHECK((w_t - w_inf).norm() / w_inf.norm() < 1e-8);
    }
}

TEST_CASE("finite_gramian PSD and error paths") {
    Rng rng(67);
    const Matrix a = rng.stable_matrix(4);
    const Matrix s = rng.gaussian_matrix(4, 1);
    const Matrix w = finite_gramian(a, s, 2.0);
    CHECK(is_symmetric(w));
    const Vector eigs = Eigen::SelfAdjointEigenSolver<Matrix>(w).eigenvalues();
    CHECK(eigs.minCoeff() > -1e-10 * w.norm());

    CHECK_THROWS_AS((void)finite_gramian(a, s, -1.0), NumericError);
    CHECK_THROWS_AS((void)finite_gramian(a, rng.gaussian_matrix(3, 1), 1.0), NumericError);
}

TEST_CASE("sym_eig frozen values and conventions") {
    const SymEig id = sym_eig(Matrix::Identity(3, 3));
    CHECK(id.eigenvalues.isApproxToConstant(1.0, 1e-14));
    CHECK((id.eigenvectors.transpose() * id.eigenvectors - Matrix::Identity(3, 3)).norm() < 1e-10);
    for (int c = 0; c < 3; ++c) {
        int lead = 0;
        while (lead < 3 && std::abs(id.eigenvectors(lead, c)) <= 1e-12) ++lead;
        CHECK(id.eigenvectors(lead, c) > 0.0);
    }

    Matrix d = Matrix::Zero(2, 2);
    d.diagonal() << 4.0, 1.0;
    const SymEig de = sym_eig(d);
    CHECK(de.eigenvalues(0) == doctest::Approx(4.0));
    CHECK(de.eigenvalues(1) == doctest::Approx(1.0));
    CHECK(de.eigenvectors.col(0)(0) == doctest::Approx(1.0));
    CHECK(std::abs(de.eigenvectors.col(0)(1)) < 1e-14);
}

TEST_CASE("sym_eig reconstructs Gramians") {
    Rng rng(71);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = rng.integer(2, 5);
        const Matrix a = rng.stable_matrix(n);
        const Matrix s = rng.gaussian_matrix(n, 1);
        const Matrix w = finite_gramian(a, s, rng.uniform(0.5, 3.0));
        const SymEig e = sym_eig(w);

        CHECK((e.eigenvectors.transpose() * e.eigenvectors - Matrix::Identity(n, n)).norm() < 1e-10);
        CHECK((w * e.eigenvectors - e.eigenvectors * e.eigenvalues.asDiagonal().toDenseMatrix()).norm() <
              1e-10 * std::max(1.0, w.norm()));
        for (int i = 0; i + 1 < n; ++i) CHECK(e.eigenvalues(i) >= e.eigenvalues(i + 1));

        Matrix rebuilt = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            rebuilt += e.eigenvalues(i) * e.eigenvectors.col(i) * e.eigenvectors.col(i).transpose();
        }
        CHECK((rebuilt - w).norm() < 1e-10 * std::max(1.0, w.norm()));
    }
}

TEST_CASE("sym_eig rejects non-symmetric input") {
    Matrix m(2, 2);
    m << 1, 2, 3, 4;
    CHECK_THROWS_AS((void)sym_eig(m), NumericError);
}
