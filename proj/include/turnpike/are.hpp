#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "turnpike/riccati.hpp"
#include "turnpike/stability.hpp"

namespace turnpike {

struct AreSolution {
  Matrix P;
  Matrix Theta;
  Vector phi;
  Vector v;
  double residual = 0.0;
  double closed_loop_abscissa = 0.0;
  double regularity_1 = 0.0;  // min eig of R11 + D1'P D1 (> 0)
  double regularity_2 = 0.0;  // max eig of R22 + D2'P D2 (< 0)
  double horizon_used = 0.0;
  int newton_iterations = 0;
  bool newton_fallback = false;
};

// Left-hand side of the algebraic Riccati equation evaluated at P.
inline Matrix are_residual(const GameSpec& spec, const Matrix& P) {
  const auto c = game_coefficients(spec);
  return detail::RiccatiField{c}(P);
}

// Theta = -(R + D'PD)^{-1}(B'P + D'PC + S)
inline Matrix stationary_gain(const Matrix& P, const GameSpec& spec) {
  const Matrix M = spec.R() + spec.D().transpose() * P * spec.D();
  const Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible()) throw NumericError("R + D'PD is singular");
  return -lu.solve(Matrix(spec.B().transpose() * P + spec.D().transpose() * P * spec.dyn.C +
                          spec.S()));
}

inline StabilityCertificate verify_stabilizer(const GameSpec& spec, const Matrix& Theta) {
  if (Theta.rows() != spec.m() || Theta.cols() != spec.n())
    throw InputError("verify_stabilizer: gain must be m x n");
  return is_l2_stable(spec.dyn.A + spec.B() * Theta, spec.dyn.C + spec.D() * Theta);
}

// Solves (A+B Th)'phi + (C+D Th)'P sigma + Th'r + P b + q = 0.
inline Vector offset_vector(const GameSpec& spec, const Matrix& P, const Matrix& Theta) {
  const Matrix Acl = spec.dyn.A + spec.B() * Theta;
  const Matrix Ccl = spec.dyn.C + spec.D() * Theta;
  const Vector rhs = Ccl.transpose() * P * spec.dyn.sigma + Theta.transpose() * spec.r() +
                     P * spec.dyn.b + spec.cost.q;
  const Eigen::FullPivLU<Matrix> lu(Acl.transpose());
  if (!lu.isInvertible()) throw NumericError("closed-loop matrix singular");
  const Vector phi = lu.solve(Vector(-rhs));
  const double res = (Acl.transpose() * phi + rhs).norm();
  if (res > 1e-10 * (1.0 + rhs.norm())) throw NumericError("offset solve inaccurate");
  return phi;
}

// v = -(R + D'PD)^{-1}(B'phi + D'P sigma + r)
inline Vector feedforward_vector(const GameSpec& spec, const Matrix& P, const Vector& phi) {
  const Matrix M = spec.R() + spec.D().transpose() * P * spec.D();
  const Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible()) throw NumericError("R + D'PD is singular");
  return -lu.solve(Vector(spec.B().transpose() * phi + spec.D().transpose() * P * spec.dyn.sigma +
                          spec.r()));
}

namespace detail {

struct TwoPhaseResult {
  Matrix P;
  double horizon = 0.0;
  bool fixed_point = false;
  int iterations = 0;
  bool fallback = false;
};

// Phase 1: integrate the reversed-time Riccati equation, doubling the horizon until
// |P(2T) - P(T)| <= tol_fixed_point or the cap is hit.
// Phase 2: Newton on the algebraic equation, each step a generalized Lyapunov solve for the
// closed-loop linearization; reverts to the best iterate if the residual rises twice in a row.
template <class MarginFn>
TwoPhaseResult two_phase_limit(const RiccatiCoefficients& c, const SolverConfig& cfg,
                               MarginFn worst_margin, bool require_fixed_point) {
  const RiccatiField field{c};
  const Index n = c.A.rows();
  const double h = cfg.step;

  TwoPhaseResult out;
  Matrix P = Matrix::Zero(n, n);
  Matrix previous = P;
  long long done = 0;
  double target = 1.0;
  while (true) {
    const long long steps = std::llround(target / h);
    for (; done < steps; ++done) {
      const double margin = worst_margin(P);
      if (margin < cfg.reg_delta)
        throw RegularityError(static_cast<double>(done) * h, margin, cfg.reg_delta);
      const Matrix next = rk4_step(field, P, h);
      check_step(P, next, static_cast<double>(done + 1) * h);
      P = next;
    }
    out.horizon = target;
    if (target > 1.0 && (P - previous).norm() <= cfg.tol_fixed_point) {
      out.fixed_point = true;
      break;
    }
    if (2.0 * target > cfg.horizon_cap) break;
    previous = P;
    target *= 2.0;
  }
  if (require_fixed_point && !out.fixed_point)
    throw AnalysisError("no fixed point within cap (horizon " + std::to_string(out.horizon) + ")");

  Matrix best = P;
  double res = field(P).norm();
  double best_res = res;
  int rises = 0;
  for (int it = 0; it < 200; ++it) {
    const Matrix Th = field.gain(P);
    const Matrix Acl = c.A + c.B * Th;
    const Matrix Ccl = c.C + c.D * Th;
    Matrix E;
    try {
      E = solve_adjoint_generator(Acl, Ccl, field(P));
    } catch (const NumericError&) {
      out.fallback = true;
      break;
    }
    const Matrix next = symmetrize(P + E);
    const double next_res = field(next).norm();
    ++out.iterations;
    if (!std::isfinite(next_res) || next_res > res) {
      if (++rises >= 2 || !std::isfinite(next_res)) {
        out.fallback = true;
        break;
      }
    } else {
      rises = 0;
    }
    P = next;
    res = next_res;
    if (res < best_res) {
      best = P;
      best_res = res;
    }
    if (E.norm() <= cfg.tol_fixed_point || res == 0.0) break;
  }
  out.P = best;
  return out;
}

}  // namespace detail

inline AreSolution solve_are(const GameSpec& spec, const SolverConfig& cfg) {
  detail::require_valid(spec);
  cfg.check();
  const auto a2 = is_l2_stable(spec.dyn.A, spec.dyn.C);
  if (!a2.stable)
    throw AnalysisError("[A, C] is not L2-stable (spectral abscissa " +
                        std::to_string(a2.spectral_abscissa) + ")");

  const auto c = game_coefficients(spec);
  const auto limit = detail::two_phase_limit(
      c, cfg,
      [&](const Matrix& P) {
        const auto [a, b] = regularity_margins(spec, P);
        return std::min(a, b);
      },
      true);

  AreSolution out;
  out.P = limit.P;
  out.horizon_used = limit.horizon;
  out.newton_iterations = limit.iterations;
  out.newton_fallback = limit.fallback;
  out.residual = are_residual(spec, out.P).norm();

  const Matrix D1 = spec.dyn.D1, D2 = spec.dyn.D2;
  out.regularity_1 = min_eigenvalue_sym(spec.cost.R11 + D1.transpose() * out.P * D1);
  out.regularity_2 = max_eigenvalue_sym(spec.cost.R22 + D2.transpose() * out.P * D2);
  if (!(out.regularity_1 > 0) || !(out.regularity_2 < 0))
    throw AnalysisError("ARE candidate violates the regularity sign conditions");

  out.Theta = stationary_gain(out.P, spec);
  const auto cert = verify_stabilizer(spec, out.Theta);
  out.closed_loop_abscissa = cert.spectral_abscissa;
  if (!cert.stable) throw AnalysisError("candidate gain is not a stabilizer");
  if (out.residual > cfg.tol_residual)
    throw NumericError("ARE residual " + std::to_string(out.residual) + " above tolerance");

  out.phi = offset_vector(spec, out.P, out.Theta);
  out.v = feedforward_vector(spec, out.P, out.phi);
  return out;
}

// Stationary limit of a single player's Riccati equation. The horizon phase may stop at the
// cap without meeting the fixed-point tolerance (degenerate limits converge only like 1/T);
// Newton then finishes.
inline Matrix single_player_steady_state(const GameSpec& spec, Player player,
                                         const SolverConfig& cfg) {
  detail::require_valid(spec);
  cfg.check();
  const auto c = player_coefficients(spec, player);
  const auto limit = detail::two_phase_limit(
      c, cfg,
      [&](const Matrix& P) {
        const auto [a, b] = regularity_margins(spec, P);
        return player == Player::one ? a : b;
      },
      false);
  return limit.P;
}

struct RateFit {
  double K_hat = 0.0;
  double lambda_hat = 0.0;
  bool bound_ok = false;
  std::size_t points = 0;
  std::vector<double> error;  // |P_T(t_i) - P|_F
};

// Least-squares fit of log|P_T(t) - P| against T - t over the asymptotic window
// e in [1e-10, 0.1 e(t_{N-1})].
inline RateFit convergence_rate_fit(const RiccatiSolution& ric, const AreSolution& are) {
  RateFit fit;
  const auto& t = ric.grid.times;
  const double T = ric.grid.T;
  for (const auto& P : ric.P) fit.error.push_back((P - are.P).norm());
  const std::size_t N = ric.grid.last();
  const double upper = 0.1 * fit.error[N - 1];

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i <= N; ++i) {
    const double e = fit.error[i];
    if (e < 1e-10 || e > upper) continue;
    const double x = T - t[i];
    const double y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++fit.points;
  }
  if (fit.points < 5) throw AnalysisError("horizon too short to fit");
  const double k = static_cast<double>(fit.points);
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / k;
  fit.lambda_hat = -slope;
  fit.K_hat = std::exp(intercept);

  fit.bound_ok = true;
  for (std::size_t i = 0; i <= N; ++i) {
    const double e = fit.error[i];
    if (e < 1e-12) continue;
    if (e > 1.05 * fit.K_hat * std::exp(-fit.lambda_hat * (T - t[i]))) fit.bound_ok = false;
  }
  return fit;
}

inline RateFit convergence_rate_fit(const GameSpec& spec, double T, const SolverConfig& cfg) {
  const auto are = solve_are(spec, cfg);
  const auto ric = solve_game_riccati(spec, T, cfg);
  return convergence_rate_fit(ric, are);
}

}  // namespace turnpike
