#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "turnpike/model.hpp"
#include "turnpike/time_grid.hpp"

namespace turnpike {

enum class Player { one = 1, two = 2 };

// Coefficients of a Riccati equation
//   P' + PA + A'P + C'PC + Q - (PB + C'PD + S')(R + D'PD)^{-1}(B'P + D'PC + S) = 0.
// The game uses the stacked (B, D, S, R); a single player uses its own blocks.
struct RiccatiCoefficients {
  Matrix A, B, C, D, Q, S, R;
};

inline RiccatiCoefficients game_coefficients(const GameSpec& s) {
  return {s.dyn.A, s.B(), s.dyn.C, s.D(), s.cost.Q, s.S(), s.R()};
}

inline RiccatiCoefficients player_coefficients(const GameSpec& s, Player p) {
  if (p == Player::one)
    return {s.dyn.A, s.dyn.B1, s.dyn.C, s.dyn.D1, s.cost.Q, s.cost.S1, s.cost.R11};
  return {s.dyn.A, s.dyn.B2, s.dyn.C, s.dyn.D2, s.cost.Q, s.cost.S2, s.cost.R22};
}

struct RiccatiSolution {
  TimeGrid grid;
  std::vector<Matrix> P;      // P_T(t_i), symmetric
  std::vector<Matrix> Theta;  // closed-loop gain at each node
  std::vector<Vector> phi;    // offset, filled by solve_offset_ode
  std::vector<Vector> v;      // feedforward, filled by feedforward
  // min eig of R11 + D1'P D1 and of -(R22 + D2'P D2); empty when not monitored.
  std::vector<double> reg_margin_1;
  std::vector<double> reg_margin_2;
  double delta = 0.0;
  // Largest step-doubling local error estimate over sampled steps (diagnostic only).
  double step_error_estimate = 0.0;
};

// (min eig of R11 + D1'PD1, min eig of -(R22 + D2'PD2)).
inline std::pair<double, double> regularity_margins(const GameSpec& s, const Matrix& P) {
  const Matrix M11 = s.cost.R11 + s.dyn.D1.transpose() * P * s.dyn.D1;
  const Matrix M22 = s.cost.R22 + s.dyn.D2.transpose() * P * s.dyn.D2;
  return {min_eigenvalue_sym(M11), min_eigenvalue_sym(-M22)};
}

namespace detail {

inline constexpr double kBlowUp = 1e12;

struct RiccatiField {
  const RiccatiCoefficients& c;

  Matrix L(const Matrix& P) const {
    return c.B.transpose() * P + c.D.transpose() * P * c.C + c.S;
  }
  Matrix M(const Matrix& P) const { return c.R + c.D.transpose() * P * c.D; }

  // dP/dtau for the reversed time tau = T - t.
  Matrix operator()(const Matrix& P) const {
    const Matrix l = L(P);
    const Eigen::PartialPivLU<Matrix> lu(M(P));
    return P * c.A + c.A.transpose() * P + c.C.transpose() * P * c.C + c.Q -
           l.transpose() * lu.solve(l);
  }

  Matrix gain(const Matrix& P) const {
    const Eigen::PartialPivLU<Matrix> lu(M(P));
    return -lu.solve(L(P));
  }
};

inline Matrix rk4_step(const RiccatiField& f, const Matrix& P, double h) {
  const Matrix k1 = f(P);
  const Matrix k2 = f(P + 0.5 * h * k1);
  const Matrix k3 = f(P + 0.5 * h * k2);
  const Matrix k4 = f(P + h * k3);
  return symmetrize(P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

// Largest change of one step relative to 1 + |P|. A fixed step can jump over a finite
// escape time without |P| ever getting large, so a step this big is treated as an escape.
inline constexpr double kMaxRelativeStep = 0.25;

inline void check_blow_up(const Matrix& P, double t) {
  if (!P.allFinite() || P.cwiseAbs().maxCoeff() > kBlowUp)
    throw NumericError("blow-up: Riccati solution exceeds 1e12 at t=" + std::to_string(t));
}

inline void check_step(const Matrix& from, const Matrix& to, double t) {
  check_blow_up(to, t);
  if ((to - from).norm() > kMaxRelativeStep * (1.0 + from.norm()))
    throw NumericError("blow-up: Riccati solution escapes near t=" + std::to_string(t) +
                       " faster than the step can resolve");
}

// Backward RK4 from P(T) = 0. `margins(P)` returns (margin1, margin2); NaN means unmonitored.
template <class MarginFn>
RiccatiSolution integrate_backward(const RiccatiCoefficients& c, const TimeGrid& grid,
                                   const SolverConfig& cfg, MarginFn margins) {
  const RiccatiField field{c};
  const std::size_t N = grid.last();
  const Index n = c.A.rows();

  RiccatiSolution sol;
  sol.grid = grid;
  sol.delta = cfg.reg_delta;
  sol.P.assign(N + 1, Matrix::Zero(n, n));
  sol.Theta.resize(N + 1);
  std::vector<double> m1(N + 1), m2(N + 1);

  auto check_node = [&](std::size_t i) {
    const auto [a, b] = margins(sol.P[i]);
    m1[i] = a;
    m2[i] = b;
    const double worst = std::min(std::isnan(a) ? std::numeric_limits<double>::infinity() : a,
                                  std::isnan(b) ? std::numeric_limits<double>::infinity() : b);
    if (worst < cfg.reg_delta) throw RegularityError(grid.times[i], worst, cfg.reg_delta);
    sol.Theta[i] = field.gain(sol.P[i]);
  };

  check_node(N);
  for (std::size_t k = N; k-- > 0;) {
    const double h = grid.times[k + 1] - grid.times[k];
    sol.P[k] = rk4_step(field, sol.P[k + 1], h);
    check_step(sol.P[k + 1], sol.P[k], grid.times[k]);
    if ((N - k) % 64 == 1) {
      const Matrix half = rk4_step(field, rk4_step(field, sol.P[k + 1], 0.5 * h), 0.5 * h);
      sol.step_error_estimate =
          std::max(sol.step_error_estimate, (half - sol.P[k]).norm() / 15.0);
    }
    check_node(k);
  }

  if (!std::isnan(m1.front())) sol.reg_margin_1 = std::move(m1);
  if (!std::isnan(m2.front())) sol.reg_margin_2 = std::move(m2);
  return sol;
}

inline void require_valid(const GameSpec& s) {
  const auto v = validate(s);
  if (!v.empty()) throw InputError("invalid spec: " + v.front().message);
}

}  // namespace detail

inline RiccatiSolution solve_game_riccati(const GameSpec& spec, double T,
                                          const SolverConfig& cfg) {
  detail::require_valid(spec);
  cfg.check();
  const auto coeffs = game_coefficients(spec);
  return detail::integrate_backward(coeffs, make_grid(T, cfg.step), cfg,
                                    [&](const Matrix& P) { return regularity_margins(spec, P); });
}

// Player 1 is monitored for R11 + D1'P D1 >= delta; player 2 for R22 + D2'P D2 <= -delta.
inline RiccatiSolution solve_single_player_riccati(const GameSpec& spec, Player player, double T,
                                                   const SolverConfig& cfg) {
  detail::require_valid(spec);
  cfg.check();
  const auto coeffs = player_coefficients(spec, player);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return detail::integrate_backward(coeffs, make_grid(T, cfg.step), cfg, [&](const Matrix& P) {
    const auto [a, b] = regularity_margins(spec, P);
    return player == Player::one ? std::pair{a, nan} : std::pair{nan, b};
  });
}

struct ComparisonGaps {
  TimeGrid grid;
  std::vector<double> lower;  // min eig (P_T - P_1T)
  std::vector<double> upper;  // min eig (P_2T - P_T)
  bool holds = false;         // both >= -tol_residual everywhere
};

inline ComparisonGaps comparison_check(const GameSpec& spec, double T, const SolverConfig& cfg) {
  const auto game = solve_game_riccati(spec, T, cfg);
  const auto p1 = solve_single_player_riccati(spec, Player::one, T, cfg);
  const auto p2 = solve_single_player_riccati(spec, Player::two, T, cfg);
  ComparisonGaps out;
  out.grid = game.grid;
  out.holds = true;
  for (std::size_t i = 0; i < game.P.size(); ++i) {
    out.lower.push_back(min_eigenvalue_sym(game.P[i] - p1.P[i]));
    out.upper.push_back(min_eigenvalue_sym(p2.P[i] - game.P[i]));
    if (out.lower.back() < -cfg.tol_residual || out.upper.back() < -cfg.tol_residual)
      out.holds = false;
  }
  return out;
}

namespace detail {

inline Matrix lerp(const Matrix& a, const Matrix& b, double w) { return (1.0 - w) * a + w * b; }

}  // namespace detail

// Backward RK4 for phi' + (A+B Th)'phi + (C+D Th)'P sigma + Th'r + P b + q = 0, phi(T) = 0,
// with P and Theta linearly interpolated between nodes.
inline void solve_offset_ode(const GameSpec& spec, RiccatiSolution& ric) {
  const Matrix A = spec.dyn.A, B = spec.B(), C = spec.dyn.C, D = spec.D();
  const Vector b = spec.dyn.b, sigma = spec.dyn.sigma, q = spec.cost.q, r = spec.r();
  const auto& grid = ric.grid;
  const std::size_t N = grid.last();

  auto rhs = [&](const Matrix& P, const Matrix& Th, const Vector& phi) -> Vector {
    return (A + B * Th).transpose() * phi + (C + D * Th).transpose() * P * sigma +
           Th.transpose() * r + P * b + q;
  };

  ric.phi.assign(N + 1, Vector::Zero(spec.n()));
  for (std::size_t k = N; k-- > 0;) {
    const double h = grid.times[k + 1] - grid.times[k];
    const Matrix& P0 = ric.P[k + 1];
    const Matrix& P1 = ric.P[k];
    const Matrix& T0 = ric.Theta[k + 1];
    const Matrix& T1 = ric.Theta[k];
    const Matrix Pm = detail::lerp(P0, P1, 0.5);
    const Matrix Tm = detail::lerp(T0, T1, 0.5);
    const Vector& y = ric.phi[k + 1];
    const Vector k1 = rhs(P0, T0, y);
    const Vector k2 = rhs(Pm, Tm, y + 0.5 * h * k1);
    const Vector k3 = rhs(Pm, Tm, y + 0.5 * h * k2);
    const Vector k4 = rhs(P1, T1, y + h * k3);
    ric.phi[k] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!ric.phi[k].allFinite())
      throw NumericError("offset ODE overflow at t=" + std::to_string(grid.times[k]));
  }
}

// Stationarity residuals of the assembled closed-loop strategy at every node:
//   rho1 = (B'P + D'PC + S) + (R + D'PD) Theta
//   rho2 = B'phi + D'P sigma + (R + D'PD) v + r
struct StationarityResiduals {
  std::vector<double> rho1;
  std::vector<double> rho2;
  double max_rho1 = 0.0;
  double max_rho2 = 0.0;
};

inline constexpr double kStationarityTolerance = 1e-10;

inline StationarityResiduals feedforward(const GameSpec& spec, RiccatiSolution& ric) {
  if (ric.phi.size() != ric.P.size()) throw InputError("feedforward: offset not computed");
  const Matrix B = spec.B(), C = spec.dyn.C, D = spec.D(), S = spec.S(), R = spec.R();
  const Vector sigma = spec.dyn.sigma, r = spec.r();

  StationarityResiduals res;
  ric.v.resize(ric.P.size());
  for (std::size_t i = 0; i < ric.P.size(); ++i) {
    const Matrix& P = ric.P[i];
    const Matrix M = R + D.transpose() * P * D;
    const Matrix L = B.transpose() * P + D.transpose() * P * C + S;
    const Vector g = B.transpose() * ric.phi[i] + D.transpose() * P * sigma + r;
    const Eigen::PartialPivLU<Matrix> lu(M);
    ric.v[i] = -lu.solve(g);
    const double r1 = (L + M * ric.Theta[i]).norm();
    const double r2 = (g + M * ric.v[i]).norm();
    res.rho1.push_back(r1);
    res.rho2.push_back(r2);
    res.max_rho1 = std::max(res.max_rho1, r1);
    res.max_rho2 = std::max(res.max_rho2, r2);
    const double scale = 1.0 + L.norm() + g.norm();
    if (r1 > kStationarityTolerance * scale || r2 > kStationarityTolerance * scale)
      throw NumericError("stationarity residual breach at t=" +
                         std::to_string(ric.grid.times[i]));
  }
  return res;
}

// Riccati solution with offset and feedforward filled in.
inline RiccatiSolution solve_game(const GameSpec& spec, double T, const SolverConfig& cfg) {
  auto ric = solve_game_riccati(spec, T, cfg);
  solve_offset_ode(spec, ric);
  feedforward(spec, ric);
  return ric;
}

// |P_T(t+s) - P_{T-t}(s)|_F for a precomputed P_T.
inline double semigroup_check(const GameSpec& spec, const RiccatiSolution& full, double t,
                              double s, const SolverConfig& cfg) {
  const double T = full.grid.T;
  if (t < 0 || s < 0 || t + s > T + 1e-12) throw InputError("semigroup_check: need 0<=t, 0<=s<=T-t");
  const std::size_t i = full.grid.index_of(t + s);
  if (T - t <= 1e-12) return (full.P[i] - Matrix::Zero(spec.n(), spec.n())).norm();
  const auto shifted = solve_game_riccati(spec, T - t, cfg);
  return (full.P[i] - shifted.P[shifted.grid.index_of(s)]).norm();
}

inline double semigroup_check(const GameSpec& spec, double T, double t, double s,
                              const SolverConfig& cfg) {
  return semigroup_check(spec, solve_game_riccati(spec, T, cfg), t, s, cfg);
}

// Exact dynamic programming for the Euler-Maruyama discretization of the homogeneous game:
//   X' = (I + hA)X + hBu + sqrt(h) xi (CX + Du),  stage cost h (X'QX + 2u'SX + u'Ru).
// Returns the value matrix at time 0 after N steps of size T/N.
inline Matrix discrete_time_oracle(const GameSpec& spec, double T, int steps) {
  detail::require_valid(spec);
  if (steps < 10) throw InputError("discrete_time_oracle: need at least 10 steps");
  if (spec.dyn.b.squaredNorm() + spec.dyn.sigma.squaredNorm() + spec.cost.q.squaredNorm() +
          spec.r().squaredNorm() != 0.0)
    throw InputError("discrete_time_oracle: spec must be homogeneous");

  const Index n = spec.n(), m1 = spec.dims.m1, m2 = spec.dims.m2;
  const double h = T / steps;
  const Matrix F = Matrix::Identity(n, n) + h * spec.dyn.A;
  const Matrix B = spec.B(), C = spec.dyn.C, D = spec.D(), S = spec.S(), R = spec.R();
  const Matrix& Q = spec.cost.Q;

  Matrix P = Matrix::Zero(n, n);
  for (int k = 0; k < steps; ++k) {
    const Matrix G = h * Q + F.transpose() * P * F + h * C.transpose() * P * C;
    const Matrix L = h * (S + B.transpose() * P * F + D.transpose() * P * C);
    const Matrix M = h * (R + h * B.transpose() * P * B + D.transpose() * P * D);
    const Matrix M11 = M.topLeftCorner(m1, m1);
    const Matrix M12 = M.topRightCorner(m1, m2);
    const Matrix M22 = M.bottomRightCorner(m2, m2);
    const Eigen::LDLT<Matrix> ldlt11(M11);
    if (min_eigenvalue_sym(M11) <= 0 ||
        max_eigenvalue_sym(M22 - M12.transpose() * ldlt11.solve(M12)) >= 0)
      throw NumericError("discretization too coarse: stage saddle condition lost");
    const Eigen::PartialPivLU<Matrix> lu(M);
    P = symmetrize(G - L.transpose() * lu.solve(L));
    if (!P.allFinite()) throw NumericError("discrete recursion overflow");
  }
  return P;
}

struct HorizonVerdict {
  double T = 0.0;
  bool pass = false;
  double min_margin_1 = 0.0;
  double min_margin_2 = 0.0;
  std::string reason;
};

struct A1Probe {
  double delta = 0.0;
  std::vector<HorizonVerdict> horizons;
  bool plausible = false;  // all horizons pass
  double T_max = 0.0;      // largest horizon that passed

  // Finite-horizon proxy only: it cannot prove the convexity/concavity condition.
  std::string summary() const {
    if (plausible)
      return "A1 plausible up to T_max=" + std::to_string(T_max) + " with delta=" +
             std::to_string(delta) + " (finite-horizon proxy, not a proof)";
    return "A1 proxy failed with delta=" + std::to_string(delta);
  }
};

inline A1Probe a1_probe(const GameSpec& spec, double delta, const std::vector<double>& horizons,
                        SolverConfig cfg = {}) {
  if (!(delta > 0)) throw InputError("a1_probe: delta must be positive");
  cfg.reg_delta = delta;
  A1Probe probe;
  probe.delta = delta;
  probe.plausible = !horizons.empty();
  for (double T : horizons) {
    HorizonVerdict v;
    v.T = T;
    try {
      const auto p1 = solve_single_player_riccati(spec, Player::one, T, cfg);
      const auto p2 = solve_single_player_riccati(spec, Player::two, T, cfg);
      v.min_margin_1 = *std::min_element(p1.reg_margin_1.begin(), p1.reg_margin_1.end());
      v.min_margin_2 = *std::min_element(p2.reg_margin_2.begin(), p2.reg_margin_2.end());
      v.pass = true;
    } catch (const RegularityError& e) {
      v.reason = e.what();
      v.min_margin_1 = v.min_margin_2 = e.margin();
    } catch (const NumericError& e) {
      v.reason = e.what();
    }
    if (v.pass)
      probe.T_max = std::max(probe.T_max, T);
    else
      probe.plausible = false;
    probe.horizons.push_back(std::move(v));
  }
  return probe;
}

}  // namespace turnpike
