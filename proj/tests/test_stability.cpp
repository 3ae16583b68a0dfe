#include <gtest/gtest.h>

#include "support.hpp"
#include "turnpike.hpp"

using namespace turnpike;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

// Applies M -> A M + M A' + C M C' directly, as the oracle for the Kronecker form.
Matrix apply_generator(const Matrix& A, const Matrix& C, const Matrix& M) {
  return A * M + M * A.transpose() + C * M * C.transpose();
}

Matrix random_orthogonal(std::mt19937_64& rng, Index n) {
  const Matrix G = testing_support::random_matrix(rng, n, n, 1.0);
  return Eigen::HouseholderQR<Matrix>(G).householderQ();
}

}  // namespace

TEST(MomentGenerator, ScalarCases) {
  EXPECT_EQ(moment_generator(scalar(-1), scalar(0))(0, 0), -2.0);
  EXPECT_EQ(moment_generator(scalar(-1), scalar(2))(0, 0), 2.0);
  EXPECT_TRUE(moment_generator(Matrix::Zero(2, 2), Matrix::Zero(2, 2)).isZero());
  EXPECT_EQ(moment_generator(Matrix::Zero(2, 2), Matrix::Zero(2, 2)).rows(), 4);
}

TEST(MomentGenerator, MatchesDirectApplication) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 1 + trial % 5;
    const Matrix A = testing_support::random_matrix(rng, n, n, 1.0);
    const Matrix C = testing_support::random_matrix(rng, n, n, 1.0);
    const Matrix M = testing_support::random_matrix(rng, n, n, 1.0);
    const Vector lhs = moment_generator(A, C) * vec(M);
    EXPECT_LE((lhs - vec(apply_generator(A, C, M))).norm(), 1e-12 * (1 + lhs.norm()));
  }
}

TEST(MomentGenerator, ShapeMismatchThrows) {
  EXPECT_THROW(moment_generator(Matrix::Zero(2, 2), Matrix::Zero(3, 3)), InputError);
  EXPECT_THROW(is_l2_stable(Matrix::Zero(2, 3), Matrix::Zero(2, 3)), InputError);
}

TEST(L2Stability, Cfg1Dynamics) {
  const auto cert = is_l2_stable(scalar(-1), scalar(0));
  EXPECT_TRUE(cert.stable);
  EXPECT_NEAR(cert.spectral_abscissa, -2.0, 1e-14);
  // -2P + 2 = 0.
  ASSERT_TRUE(cert.lyapunov_P.has_value());
  EXPECT_NEAR((*cert.lyapunov_P)(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(*cert.decay_rate, 1.0, 1e-14);
  EXPECT_NEAR(*cert.growth_constant, 1.0, 1e-14);
}

TEST(L2Stability, UnstableAndMarginal) {
  const auto cfg3 = is_l2_stable(scalar(-1), scalar(2));
  EXPECT_FALSE(cfg3.stable);
  EXPECT_NEAR(cfg3.spectral_abscissa, 2.0, 1e-14);
  EXPECT_FALSE(cfg3.lyapunov_P.has_value());

  const auto marginal = is_l2_stable(Matrix::Zero(2, 2), Matrix::Zero(2, 2));
  EXPECT_FALSE(marginal.stable);
  EXPECT_EQ(marginal.spectral_abscissa, 0.0);
}

TEST(Lyapunov, ScalarCases) {
  EXPECT_NEAR(lyapunov_solve(scalar(-1), scalar(0), scalar(2))(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(lyapunov_solve(scalar(-1), scalar(1), scalar(1))(0, 0), 1.0, 1e-14);
  EXPECT_EQ(lyapunov_solve(scalar(-1), scalar(0), scalar(0))(0, 0), 0.0);
}

TEST(Lyapunov, UnstableThrows) {
  try {
    lyapunov_solve(scalar(-1), scalar(2), scalar(1));
    FAIL();
  } catch (const AnalysisError& e) {
    EXPECT_NE(std::string(e.what()).find("generator not Hurwitz"), std::string::npos);
  }
}

TEST(Lyapunov, RandomStableResidualAndSign) {
  std::mt19937_64 rng(2024);
  int solved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Index n = 1 + trial % 6;
    const Matrix A =
        testing_support::random_matrix(rng, n, n, 0.6) - 1.5 * Matrix::Identity(n, n);
    const Matrix C = testing_support::random_matrix(rng, n, n, 0.3);
    if (!is_l2_stable(A, C).stable) continue;
    const Matrix G = testing_support::random_matrix(rng, n, n, 1.0);
    const Matrix rhs = G * G.transpose();
    const Matrix P = lyapunov_solve(A, C, rhs);
    EXPECT_LE(lyapunov_residual(A, C, P, rhs).norm(), 1e-8);
    EXPECT_LE(asymmetry(P), 1e-12);
    EXPECT_GE(min_eigenvalue_sym(P), -1e-10);
    ++solved;
  }
  EXPECT_GT(solved, 40);
}

TEST(DecayEnvelope, ScalarAndDiagonal) {
  const auto e1 = decay_envelope(scalar(-1), scalar(0));
  EXPECT_NEAR(e1.K, 1.0, 1e-14);
  EXPECT_NEAR(e1.lambda, 1.0, 1e-14);
  const auto e2 = decay_envelope(-Matrix::Identity(2, 2), Matrix::Zero(2, 2));
  EXPECT_NEAR(e2.K, 1.0, 1e-14);
  EXPECT_NEAR(e2.lambda, 1.0, 1e-14);
  // -2P + P = -2 gives P = 2.
  const auto e3 = decay_envelope(scalar(-1), scalar(1));
  EXPECT_NEAR(e3.K, 1.0, 1e-14);
  EXPECT_NEAR(e3.lambda, 0.5, 1e-14);
  EXPECT_THROW(decay_envelope(scalar(-1), scalar(2)), AnalysisError);
}

TEST(DecayEnvelope, BoundsMomentOdeTrajectories) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 15; ++trial) {
    const Index n = 1 + trial % 4;
    const Matrix A =
        testing_support::random_matrix(rng, n, n, 0.8) - 1.2 * Matrix::Identity(n, n);
    const Matrix C = testing_support::random_matrix(rng, n, n, 0.4);
    if (!is_l2_stable(A, C).stable) continue;
    const auto env = decay_envelope(A, C);
    const Vector x = testing_support::random_vector(rng, n, 1.0);
    // Homogeneous moment ODE by small-step RK4, independent of the library propagator.
    Matrix M = x * x.transpose();
    const double h = 1e-3;
    for (int k = 1; k <= 5000; ++k) {
      const Matrix k1 = apply_generator(A, C, M);
      const Matrix k2 = apply_generator(A, C, M + 0.5 * h * k1);
      const Matrix k3 = apply_generator(A, C, M + 0.5 * h * k2);
      const Matrix k4 = apply_generator(A, C, M + h * k3);
      M += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      ASSERT_LE(M.trace(), env.K * std::exp(-env.lambda * k * h) * x.squaredNorm() * (1 + 1e-9))
          << "trial " << trial << " t=" << k * h;
    }
  }
}

TEST(L2Stability, OrthogonalInvariance) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial % 3;
    const Matrix A = testing_support::random_matrix(rng, n, n, 1.0) - Matrix::Identity(n, n);
    const Matrix C = testing_support::random_matrix(rng, n, n, 0.5);
    const Matrix U = random_orthogonal(rng, n);
    const auto a = is_l2_stable(A, C);
    const auto b = is_l2_stable(U * A * U.transpose(), U * C * U.transpose());
    EXPECT_EQ(a.stable, b.stable);
    EXPECT_NEAR(a.spectral_abscissa, b.spectral_abscissa, 1e-8);
  }
}
