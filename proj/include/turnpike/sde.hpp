#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "turnpike/model.hpp"
#include "turnpike/parallel.hpp"
#include "turnpike/rng.hpp"
#include "turnpike/time_grid.hpp"

namespace turnpike {

/// Affine linear SDE  dX = [Abar(t) X + beta(t)] dt + [Cbar(t) X + gamma(t)] dW
/// with coefficients sampled at the grid nodes and linear in t between them.
/// A coefficient array of length 1 is read as constant in time.
struct AffinePathSpec {
  TimeGrid grid;
  std::vector<Matrix> Abar;
  std::vector<Matrix> Cbar;
  std::vector<Vector> beta;
  std::vector<Vector> gamma;
  Vector x0;

  Index dim() const { return Abar.front().rows(); }

  const Matrix& A_at(std::size_t i) const { return Abar.size() == 1 ? Abar[0] : Abar[i]; }
  const Matrix& C_at(std::size_t i) const { return Cbar.size() == 1 ? Cbar[0] : Cbar[i]; }
  const Vector& beta_at(std::size_t i) const { return beta.size() == 1 ? beta[0] : beta[i]; }
  const Vector& gamma_at(std::size_t i) const { return gamma.size() == 1 ? gamma[0] : gamma[i]; }

  void check() const {
    const std::size_t N = grid.size();
    auto ok = [N](std::size_t k) { return k == 1 || k == N; };
    if (N < 2 || Abar.empty() || !ok(Abar.size()) || !ok(Cbar.size()) || !ok(beta.size()) ||
        !ok(gamma.size()))
      throw InputError("affine path: coefficient arrays do not align with the grid");
    const Index n = dim();
    for (std::size_t i = 0; i < N; ++i) {
      if (A_at(i).rows() != n || A_at(i).cols() != n || C_at(i).rows() != n ||
          C_at(i).cols() != n || beta_at(i).size() != n || gamma_at(i).size() != n)
        throw InputError("affine path: inconsistent coefficient shapes");
      if (Abar.size() == 1 && Cbar.size() == 1 && beta.size() == 1 && gamma.size() == 1) break;
    }
  }
};

inline AffinePathSpec constant_path(const TimeGrid& grid, const Matrix& Abar, const Matrix& Cbar,
                                    const Vector& beta, const Vector& gamma, const Vector& x0) {
  return {grid, {Abar}, {Cbar}, {beta}, {gamma}, x0};
}

struct MomentCurve {
  TimeGrid grid;
  std::vector<Vector> mean;
  std::vector<Matrix> second;
};

inline constexpr double kPathBlowUp = 1e12;

namespace detail {

struct EmWorkspace {
  Vector drift, diffusion;
};

inline void em_step(Vector& x, const Matrix& A, const Matrix& C, const Vector& beta,
                    const Vector& gamma, double h, double noise, EmWorkspace& ws) {
  ws.drift.noalias() = A * x;
  ws.drift += beta;
  ws.diffusion.noalias() = C * x;
  ws.diffusion += gamma;
  x += h * ws.drift + (std::sqrt(h) * noise) * ws.diffusion;
}

inline void check_path(const Vector& x) {
  if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kPathBlowUp) throw NumericError("path blow-up");
}

}  // namespace detail

// X_{i+1} = X_i + h (Abar X_i + beta) + sqrt(h) xi_i (Cbar X_i + gamma), xi_i ~ N(0, 1).
inline std::vector<Vector> euler_maruyama(const AffinePathSpec& path, Engine& rng) {
  path.check();
  std::normal_distribution<double> normal;
  const auto& t = path.grid.times;
  std::vector<Vector> states;
  states.reserve(t.size());
  Vector x = path.x0;
  states.push_back(x);
  detail::EmWorkspace ws;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    detail::em_step(x, path.A_at(i), path.C_at(i), path.beta_at(i), path.gamma_at(i),
                    t[i + 1] - t[i], normal(rng), ws);
    detail::check_path(x);
    states.push_back(x);
  }
  return states;
}

// States of `count` independent paths at the requested node indices: result[probe][path].
// Path k draws from make_stream(seed, path, k), so output is independent of thread count.
inline std::vector<std::vector<Vector>> simulate_states(const AffinePathSpec& path,
                                                        std::size_t count, std::uint64_t seed,
                                                        const std::vector<std::size_t>& probes) {
  path.check();
  const auto& t = path.grid.times;
  for (auto p : probes)
    if (p >= t.size()) throw InputError("simulate_states: probe index out of range");
  std::size_t last_probe = 0;
  for (auto p : probes) last_probe = std::max(last_probe, p);

  std::vector<std::vector<Vector>> out(probes.size(), std::vector<Vector>(count));
  if (path.dim() == 1) {
    // Scalar paths dominate the Monte Carlo workload; step on plain doubles.
    std::vector<double> a(last_probe), c(last_probe), b(last_probe), g(last_probe), h(last_probe),
        sh(last_probe);
    for (std::size_t i = 0; i < last_probe; ++i) {
      a[i] = path.A_at(i)(0, 0);
      c[i] = path.C_at(i)(0, 0);
      b[i] = path.beta_at(i)(0);
      g[i] = path.gamma_at(i)(0);
      h[i] = t[i + 1] - t[i];
      sh[i] = std::sqrt(h[i]);
    }
    parallel_for(count, [&](std::size_t k) {
      Engine rng = make_stream(seed, StreamKind::path, k);
      std::normal_distribution<double> normal;
      double x = path.x0(0);
      for (std::size_t i = 0;; ++i) {
        for (std::size_t j = 0; j < probes.size(); ++j)
          if (probes[j] == i) out[j][k] = Vector::Constant(1, x);
        if (i == last_probe) break;
        x += h[i] * (a[i] * x + b[i]) + sh[i] * normal(rng) * (c[i] * x + g[i]);
        if (!(std::abs(x) <= kPathBlowUp)) throw NumericError("path blow-up");
      }
    });
    return out;
  }

  parallel_for(count, [&](std::size_t k) {
    Engine rng = make_stream(seed, StreamKind::path, k);
    std::normal_distribution<double> normal;
    detail::EmWorkspace ws;
    Vector x = path.x0;
    for (std::size_t i = 0;; ++i) {
      for (std::size_t j = 0; j < probes.size(); ++j)
        if (probes[j] == i) out[j][k] = x;
      if (i == last_probe) break;
      detail::em_step(x, path.A_at(i), path.C_at(i), path.beta_at(i), path.gamma_at(i),
                      t[i + 1] - t[i], normal(rng), ws);
      detail::check_path(x);
    }
  });
  return out;
}

namespace detail {

struct MomentState {
  Vector m;
  Matrix M;
};

inline MomentState moment_rhs(const Matrix& A, const Matrix& C, const Vector& beta,
                              const Vector& gamma, const MomentState& s) {
  MomentState d;
  d.m = A * s.m + beta;
  const Matrix Cm_g = C * s.m * gamma.transpose();
  const Matrix bm = beta * s.m.transpose();
  d.M = A * s.M + s.M * A.transpose() + bm + bm.transpose() + C * s.M * C.transpose() + Cm_g +
        Cm_g.transpose() + gamma * gamma.transpose();
  return d;
}

}  // namespace detail

// RK4 for dm = Abar m + beta and
// dM = Abar M + M Abar' + beta m' + m beta' + Cbar M Cbar' + Cbar m gamma' + gamma m' Cbar' + gamma gamma'.
inline MomentCurve propagate_moments(const AffinePathSpec& path, const Vector& init_mean,
                                     const Matrix& init_second) {
  path.check();
  const Index n = path.dim();
  if (init_mean.size() != n || init_second.rows() != n || init_second.cols() != n)
    throw InputError("propagate_moments: initial moments have wrong shape");

  const auto& t = path.grid.times;
  MomentCurve curve;
  curve.grid = path.grid;
  curve.mean.reserve(t.size());
  curve.second.reserve(t.size());
  detail::MomentState s{init_mean, symmetrize(init_second)};
  curve.mean.push_back(s.m);
  curve.second.push_back(s.M);

  using detail::MomentState;
  auto axpy = [](const MomentState& a, double h, const MomentState& k) {
    return MomentState{a.m + h * k.m, a.M + h * k.M};
  };
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = t[i + 1] - t[i];
    const Matrix& A0 = path.A_at(i);
    const Matrix& A1 = path.A_at(i + 1);
    const Matrix& C0 = path.C_at(i);
    const Matrix& C1 = path.C_at(i + 1);
    const Vector& b0 = path.beta_at(i);
    const Vector& b1 = path.beta_at(i + 1);
    const Vector& g0 = path.gamma_at(i);
    const Vector& g1 = path.gamma_at(i + 1);
    const Matrix Am = 0.5 * (A0 + A1), Cm = 0.5 * (C0 + C1);
    const Vector bm = 0.5 * (b0 + b1), gm = 0.5 * (g0 + g1);

    const auto k1 = detail::moment_rhs(A0, C0, b0, g0, s);
    const auto k2 = detail::moment_rhs(Am, Cm, bm, gm, axpy(s, 0.5 * h, k1));
    const auto k3 = detail::moment_rhs(Am, Cm, bm, gm, axpy(s, 0.5 * h, k2));
    const auto k4 = detail::moment_rhs(A1, C1, b1, g1, axpy(s, h, k3));
    s.m += (h / 6.0) * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
    s.M = symmetrize(s.M + (h / 6.0) * (k1.M + 2.0 * k2.M + 2.0 * k3.M + k4.M));
    if (!s.M.allFinite() || s.M.cwiseAbs().maxCoeff() > kPathBlowUp)
      throw NumericError("moment propagation overflow");
    curve.mean.push_back(s.m);
    curve.second.push_back(s.M);
  }
  return curve;
}

// Joint first and second moments of the stacked initial state (X_A(0), X_B(0)).
struct CouplingInit {
  Vector mean;
  Matrix second;
};

// X_A(0) and X_B(0) independent (e.g. a point mass against a law).
inline CouplingInit independent_coupling(const Vector& mean_a, const Matrix& second_a,
                                         const Vector& mean_b, const Matrix& second_b) {
  const Index n = mean_a.size();
  CouplingInit c{Vector(2 * n), Matrix(2 * n, 2 * n)};
  c.mean << mean_a, mean_b;
  c.second << second_a, mean_a * mean_b.transpose(), mean_b * mean_a.transpose(), second_b;
  return c;
}

// X_A(0) = X_B(0) almost surely.
inline CouplingInit identical_coupling(const Vector& mean, const Matrix& second) {
  const Index n = mean.size();
  CouplingInit c{Vector(2 * n), Matrix(2 * n, 2 * n)};
  c.mean << mean, mean;
  c.second << second, second, second, second;
  return c;
}

struct CoupledDeviation {
  MomentCurve stacked;    // moments of (X_A, X_B)
  MomentCurve deviation;  // moments of (X_A - X_B, X_B)
  std::vector<double> e;  // E|X_A(t) - X_B(t)|^2
};

namespace detail {

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

inline Vector stack(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace detail

// Both paths share the grid and the Brownian motion; the stacked 2n system has block
// diagonal drift and diffusion and a single noise channel.
inline AffinePathSpec stack_paths(const AffinePathSpec& a, const AffinePathSpec& b) {
  a.check();
  b.check();
  if (a.grid.times != b.grid.times) throw InputError("coupled paths: grid mismatch");
  if (a.dim() != b.dim()) throw InputError("coupled paths: dimension mismatch");
  const bool constant = a.Abar.size() == 1 && a.Cbar.size() == 1 && a.beta.size() == 1 &&
                        a.gamma.size() == 1 && b.Abar.size() == 1 && b.Cbar.size() == 1 &&
                        b.beta.size() == 1 && b.gamma.size() == 1;
  const std::size_t N = constant ? 1 : a.grid.size();
  AffinePathSpec s;
  s.grid = a.grid;
  s.x0 = detail::stack(a.x0.size() ? a.x0 : Vector::Zero(a.dim()),
                       b.x0.size() ? b.x0 : Vector::Zero(b.dim()));
  for (std::size_t i = 0; i < N; ++i) {
    s.Abar.push_back(detail::block_diag(a.A_at(i), b.A_at(i)));
    s.Cbar.push_back(detail::block_diag(a.C_at(i), b.C_at(i)));
    s.beta.push_back(detail::stack(a.beta_at(i), b.beta_at(i)));
    s.gamma.push_back(detail::stack(a.gamma_at(i), b.gamma_at(i)));
  }
  return s;
}

inline double deviation_from_stacked(const Matrix& M, Index n) {
  return (M.topLeftCorner(n, n) - M.topRightCorner(n, n) - M.bottomLeftCorner(n, n) +
          M.bottomRightCorner(n, n))
      .trace();
}

// The moment ODEs run in the coordinates (X_A - X_B, X_B), so e(t) is read off a diagonal
// block instead of cancelling the large cross moments of nearly equal processes.
inline CoupledDeviation coupled_deviation(const AffinePathSpec& a, const AffinePathSpec& b,
                                          const CouplingInit& init) {
  const auto stacked = stack_paths(a, b);
  const Index n = a.dim();
  if (init.mean.size() != 2 * n || init.second.rows() != 2 * n || init.second.cols() != 2 * n)
    throw InputError("coupled_deviation: init has wrong shape");

  Matrix S = Matrix::Identity(2 * n, 2 * n);  // (X_A, X_B) -> (X_A - X_B, X_B)
  S.topRightCorner(n, n) = -Matrix::Identity(n, n);
  Matrix Sinv = Matrix::Identity(2 * n, 2 * n);
  Sinv.topRightCorner(n, n) = Matrix::Identity(n, n);

  AffinePathSpec moved = stacked;
  for (auto& A : moved.Abar) A = S * A * Sinv;
  for (auto& C : moved.Cbar) C = S * C * Sinv;
  for (auto& v : moved.beta) v = S * v;
  for (auto& v : moved.gamma) v = S * v;
  moved.x0 = S * stacked.x0;

  CoupledDeviation out;
  out.deviation = propagate_moments(moved, S * init.mean, S * init.second * S.transpose());
  out.stacked.grid = out.deviation.grid;
  const std::size_t N = out.deviation.grid.size();
  out.stacked.mean.reserve(N);
  out.stacked.second.reserve(N);
  out.e.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    out.stacked.mean.push_back(Sinv * out.deviation.mean[i]);
    out.stacked.second.push_back(Sinv * out.deviation.second[i] * Sinv.transpose());
    out.e.push_back(out.deviation.second[i].topLeftCorner(n, n).trace());
  }
  return out;
}

// Trapezoid integral of E[X'QX + 2u'SX + u'Ru + 2q'X + 2r'u] with u = Theta(t) X + v(t).
inline double quadratic_cost(const GameSpec& spec, const MomentCurve& curve,
                             const std::vector<Matrix>& Theta, const std::vector<Vector>& v) {
  const std::size_t N = curve.grid.size();
  if (curve.mean.size() != N || Theta.size() != N || v.size() != N)
    throw InputError("quadratic_cost: grid mismatch");
  const Matrix S = spec.S(), R = spec.R();
  const Matrix& Q = spec.cost.Q;
  const Vector& q = spec.cost.q;
  const Vector r = spec.r();

  std::vector<double> f(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Matrix& M = curve.second[i];
    const Vector& m = curve.mean[i];
    const Matrix& Th = Theta[i];
    const Vector& vi = v[i];
    const Matrix Xu = M * Th.transpose() + m * vi.transpose();  // E[X u']
    const Vector mu = Th * m + vi;                               // E[u]
    const Matrix uu = Th * M * Th.transpose() + Th * m * vi.transpose() +
                      vi * m.transpose() * Th.transpose() + vi * vi.transpose();
    f[i] = (Q * M).trace() + 2.0 * (S * Xu).trace() + (R * uu).trace() + 2.0 * q.dot(m) +
           2.0 * r.dot(mu);
  }
  double total = 0.0;
  const auto& t = curve.grid.times;
  for (std::size_t i = 0; i + 1 < N; ++i) total += 0.5 * (t[i + 1] - t[i]) * (f[i] + f[i + 1]);
  return total;
}

}  // namespace turnpike
