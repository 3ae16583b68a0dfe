#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "turnpike/are.hpp"
#include "turnpike/parallel.hpp"
#include "turnpike/rng.hpp"
#include "turnpike/sde.hpp"
#include "turnpike/stability.hpp"

namespace turnpike {

struct StationaryLaw {
  Vector mean_x;
  Matrix second_x;
  Vector mean_u;
  Matrix second_u;
  std::vector<Vector> samples_x;
  std::vector<Vector> samples_u;
  double burn_in = 0.0;
  double sample_spacing = 0.0;
};

struct Moments {
  Vector mean;
  Matrix second;
};

// Residuals of Abar m + beta = 0 and of the stationary second-moment equation.
inline std::pair<double, double> stationary_residuals(const Matrix& Abar, const Matrix& Cbar,
                                                      const Vector& beta, const Vector& gamma,
                                                      const Moments& mom) {
  const Vector dm = Abar * mom.mean + beta;
  detail::MomentState s{mom.mean, mom.second};
  const auto d = detail::moment_rhs(Abar, Cbar, beta, gamma, s);
  return {dm.norm(), d.M.norm()};
}

// Fixed point of the first and second moment equations of
// dX = (Abar X + beta) dt + (Cbar X + gamma) dW.
inline Moments stationary_moments(const Matrix& Abar, const Matrix& Cbar, const Vector& beta,
                                  const Vector& gamma) {
  const Index n = Abar.rows();
  if (Cbar.rows() != n || beta.size() != n || gamma.size() != n)
    throw InputError("stationary_moments: inconsistent shapes");
  const Matrix G = moment_generator(Abar, Cbar);
  const double abscissa = spectral_abscissa(G);
  if (abscissa >= kMarginalAbscissa)
    throw AnalysisError("closed loop is not L2-stable (spectral abscissa " +
                        std::to_string(abscissa) + ")");

  Moments out;
  out.mean = Abar.fullPivLu().solve(Vector(-beta));
  const Vector& m = out.mean;
  const Matrix bm = beta * m.transpose();
  const Matrix cg = Cbar * m * gamma.transpose();
  const Matrix forcing = bm + bm.transpose() + cg + cg.transpose() + gamma * gamma.transpose();
  const Vector x = G.fullPivLu().solve(Vector(-vec(forcing)));
  out.second = symmetrize(unvec(x, n, n));

  const auto [r1, r2] = stationary_residuals(Abar, Cbar, beta, gamma, out);
  const double scale = 1.0 + forcing.norm() + beta.norm();
  if (r1 > 1e-10 * scale || r2 > 1e-10 * scale)
    throw NumericError("stationary moment solve inaccurate");
  return out;
}

// Closed loop under the stationary strategy: A + B Theta, C + D Theta, B v + b, D v + sigma.
inline AffinePathSpec stationary_closed_loop(const GameSpec& spec, const AreSolution& are,
                                             const TimeGrid& grid, const Vector& x0) {
  return constant_path(grid, spec.dyn.A + spec.B() * are.Theta, spec.dyn.C + spec.D() * are.Theta,
                       spec.B() * are.v + spec.dyn.b, spec.D() * are.v + spec.dyn.sigma, x0);
}

// Closed loop under the finite-horizon saddle strategy (Theta_T(t), v_T(t)).
inline AffinePathSpec finite_horizon_closed_loop(const GameSpec& spec, const RiccatiSolution& ric,
                                                 const Vector& x0) {
  if (ric.v.size() != ric.grid.size())
    throw InputError("finite-horizon closed loop needs the feedforward term");
  AffinePathSpec p;
  p.grid = ric.grid;
  p.x0 = x0;
  const Matrix B = spec.B(), D = spec.D();
  for (std::size_t i = 0; i < ric.grid.size(); ++i) {
    p.Abar.push_back(spec.dyn.A + B * ric.Theta[i]);
    p.Cbar.push_back(spec.dyn.C + D * ric.Theta[i]);
    p.beta.push_back(B * ric.v[i] + spec.dyn.b);
    p.gamma.push_back(D * ric.v[i] + spec.dyn.sigma);
  }
  return p;
}

// Moments of u = Theta X + v under the state law.
inline void control_law_moments(StationaryLaw& law, const Matrix& Theta, const Vector& v) {
  const Vector& m = law.mean_x;
  law.mean_u = Theta * m + v;
  const Matrix cross = Theta * m * v.transpose();
  law.second_u = Theta * law.second_x * Theta.transpose() + cross + cross.transpose() +
                 v * v.transpose();
}

struct PlayerMoments {
  Vector mean;
  Matrix second;
};

// Marginal of player 1 (first m1 control rows) or player 2 (the rest).
inline PlayerMoments player_marginal(const StationaryLaw& law, Index m1, Player p) {
  const Index m = law.mean_u.size();
  const Index start = p == Player::one ? 0 : m1;
  const Index len = p == Player::one ? m1 : m - m1;
  return {law.mean_u.segment(start, len), law.second_u.block(start, start, len, len)};
}

inline StationaryLaw stationary_law(const GameSpec& spec, const AreSolution& are) {
  const Matrix Abar = spec.dyn.A + spec.B() * are.Theta;
  const Matrix Cbar = spec.dyn.C + spec.D() * are.Theta;
  const auto mom = stationary_moments(Abar, Cbar, spec.B() * are.v + spec.dyn.b,
                                      spec.D() * are.v + spec.dyn.sigma);
  StationaryLaw law;
  law.mean_x = mom.mean;
  law.second_x = mom.second;
  control_law_moments(law, are.Theta, are.v);
  return law;
}

inline constexpr std::size_t kStationaryShards = 16;

// Fills law.samples_x / samples_u by Euler-Maruyama on the stationary closed loop. Each of the
// fixed number of shards runs one long path from mean_x with its own stream, discards
// 10 / lambda of burn-in and keeps states every 2 / lambda; lambda is the Lyapunov decay rate.
// Banks are ordered by (shard, index), so the result does not depend on the thread count.
inline void sample_stationary(const GameSpec& spec, const AreSolution& are, StationaryLaw& law,
                              std::size_t count, const SolverConfig& cfg) {
  law.samples_x.clear();
  law.samples_u.clear();
  const Matrix Abar = spec.dyn.A + spec.B() * are.Theta;
  const Matrix Cbar = spec.dyn.C + spec.D() * are.Theta;
  const double lambda = decay_envelope(Abar, Cbar).lambda;
  law.burn_in = 10.0 / lambda;
  law.sample_spacing = 2.0 / lambda;
  if (count == 0) return;

  const Vector beta = spec.B() * are.v + spec.dyn.b;
  const Vector gamma = spec.D() * are.v + spec.dyn.sigma;
  const double h = cfg.step;
  const auto burn_steps = static_cast<std::size_t>(std::ceil(law.burn_in / h));
  const auto gap_steps = std::max<std::size_t>(1, std::llround(law.sample_spacing / h));

  const std::size_t shards = std::min(count, kStationaryShards);
  std::vector<std::size_t> offset(shards + 1, 0);
  for (std::size_t s = 0; s < shards; ++s)
    offset[s + 1] = offset[s] + count / shards + (s < count % shards ? 1 : 0);

  law.samples_x.resize(count);
  parallel_for(shards, [&](std::size_t s) {
    Engine rng = make_stream(cfg.seed, StreamKind::stationary_shard, s);
    std::normal_distribution<double> normal;
    detail::EmWorkspace ws;
    Vector x = law.mean_x;
    auto advance = [&](std::size_t steps) {
      if (x.size() == 1) {
        const double a = Abar(0, 0), c = Cbar(0, 0), b = beta(0), g = gamma(0), sh = std::sqrt(h);
        double y = x(0);
        for (std::size_t k = 0; k < steps; ++k)
          y += h * (a * y + b) + sh * normal(rng) * (c * y + g);
        x(0) = y;
      } else {
        for (std::size_t k = 0; k < steps; ++k)
          detail::em_step(x, Abar, Cbar, beta, gamma, h, normal(rng), ws);
      }
      detail::check_path(x);
    };
    advance(burn_steps);
    for (std::size_t i = offset[s]; i < offset[s + 1]; ++i) {
      if (i > offset[s]) advance(gap_steps);
      law.samples_x[i] = x;
    }
  });
  law.samples_u.reserve(count);
  for (const auto& x : law.samples_x) law.samples_u.push_back(are.Theta * x + are.v);
}

// Standard error of a sample mean from `batches` contiguous batch means; absorbs the residual
// serial correlation of samples taken from long paths.
inline double batch_means_se(const std::vector<double>& values, std::size_t batches = 50) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  batches = std::min(batches, n);
  const std::size_t size = n / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = b * size; i < (b + 1) * size; ++i) means[b] += values[i];
    means[b] /= static_cast<double>(size);
  }
  double mu = 0.0;
  for (double x : means) mu += x;
  mu /= static_cast<double>(batches);
  double var = 0.0;
  for (double x : means) var += (x - mu) * (x - mu);
  var /= static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

struct MomentAgreement {
  Vector mean;         // empirical E[x_i]
  Vector second;       // empirical E[x_i^2]
  Vector z_mean;       // |empirical - exact| / SE
  Vector z_second;
  double worst_z = 0.0;
  bool within(double bands) const { return worst_z <= bands; }
};

// Component-wise comparison of the state bank against the exact stationary moments.
inline MomentAgreement compare_samples(const StationaryLaw& law) {
  const Index n = law.mean_x.size();
  MomentAgreement out{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), 0.0};
  const std::size_t N = law.samples_x.size();
  if (N < 2) return out;
  std::vector<double> a(N), b(N);
  for (Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < N; ++k) {
      a[k] = law.samples_x[k](i);
      b[k] = a[k] * a[k];
    }
    double sa = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      sa += a[k];
      sb += b[k];
    }
    out.mean(i) = sa / static_cast<double>(N);
    out.second(i) = sb / static_cast<double>(N);
    auto z = [](double diff, double se) {
      if (se > 0) return std::abs(diff) / se;
      return std::abs(diff) <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    };
    out.z_mean(i) = z(out.mean(i) - law.mean_x(i), batch_means_se(a));
    out.z_second(i) = z(out.second(i) - law.second_x(i, i), batch_means_se(b));
    out.worst_z = std::max({out.worst_z, out.z_mean(i), out.z_second(i)});
  }
  return out;
}

}  // namespace turnpike
