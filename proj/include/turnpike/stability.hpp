#pragma once

#include <optional>

#include "turnpike/linalg.hpp"

namespace turnpike {

/// Mean-square stability verdict for the homogeneous system dX = AX dt + CX dW.
///
/// When stable, `lyapunov_P` solves P A + A'P + C'P C + 2I = 0 and the envelope
/// E|X(t)|^2 <= K exp(-lambda t) |x|^2 holds with lambda = 1/lambda_max(P) and
/// K = lambda_max(P)/lambda_min(P).
struct StabilityCertificate {
  bool stable = false;
  double spectral_abscissa = 0.0;
  std::optional<Matrix> lyapunov_P;
  std::optional<double> decay_rate;
  std::optional<double> growth_constant;
};

// Spectral abscissa at or above this is treated as unstable.
inline constexpr double kMarginalAbscissa = -1e-12;

namespace detail {

inline void require_square_pair(const Matrix& A, const Matrix& C) {
  if (A.rows() != A.cols() || C.rows() != C.cols() || A.rows() != C.rows())
    throw InputError("stability: A and C must be square with equal size");
}

// Solves P Acl + Acl'P + Ccl'P Ccl = -rhs without a stability precondition.
inline Matrix solve_adjoint_generator(const Matrix& Acl, const Matrix& Ccl, const Matrix& rhs) {
  const Index n = Acl.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix At = Acl.transpose();
  const Matrix Ct = Ccl.transpose();
  const Matrix G = kron(I, At) + kron(At, I) + kron(Ct, Ct);
  Eigen::FullPivLU<Matrix> lu(G);
  if (!lu.isInvertible()) throw NumericError("generalized Lyapunov operator is singular");
  const Vector x = lu.solve(Vector(-vec(rhs)));
  return symmetrize(unvec(x, n, n));
}

}  // namespace detail

// Matrix of M -> A M + M A' + C M C' under column-stacking vectorization.
inline Matrix moment_generator(const Matrix& A, const Matrix& C) {
  detail::require_square_pair(A, C);
  const Matrix I = Matrix::Identity(A.rows(), A.rows());
  return kron(I, A) + kron(A, I) + kron(C, C);
}

inline Matrix lyapunov_residual(const Matrix& A, const Matrix& C, const Matrix& P,
                                const Matrix& rhs) {
  return P * A + A.transpose() * P + C.transpose() * P * C + rhs;
}

// P with P A + A'P + C'P C = -rhs. Requires [A, C] mean-square stable.
inline Matrix lyapunov_solve(const Matrix& A, const Matrix& C, const Matrix& rhs) {
  detail::require_square_pair(A, C);
  if (rhs.rows() != A.rows() || rhs.cols() != A.cols())
    throw InputError("lyapunov_solve: rhs shape mismatch");
  if (spectral_abscissa(moment_generator(A, C)) >= kMarginalAbscissa)
    throw AnalysisError("generator not Hurwitz");
  return detail::solve_adjoint_generator(A, C, symmetrize(rhs));
}

inline StabilityCertificate is_l2_stable(const Matrix& A, const Matrix& C) {
  detail::require_square_pair(A, C);
  StabilityCertificate cert;
  cert.spectral_abscissa = spectral_abscissa(moment_generator(A, C));
  cert.stable = cert.spectral_abscissa < kMarginalAbscissa;
  if (!cert.stable) return cert;

  const Index n = A.rows();
  const Matrix P =
      detail::solve_adjoint_generator(A, C, 2.0 * Matrix::Identity(n, n));
  const double hi = max_eigenvalue_sym(P);
  const double lo = min_eigenvalue_sym(P);
  if (!(lo > 0)) throw NumericError("Lyapunov certificate is not positive definite");
  cert.lyapunov_P = P;
  cert.decay_rate = 1.0 / hi;
  cert.growth_constant = hi / lo;
  return cert;
}

struct DecayEnvelope {
  double K;
  double lambda;
};

inline DecayEnvelope decay_envelope(const Matrix& A, const Matrix& C) {
  const auto cert = is_l2_stable(A, C);
  if (!cert.stable)
    throw AnalysisError("system is not L2-stable (spectral abscissa " +
                        std::to_string(cert.spectral_abscissa) + ")");
  return {*cert.growth_constant, *cert.decay_rate};
}

}  // namespace turnpike
