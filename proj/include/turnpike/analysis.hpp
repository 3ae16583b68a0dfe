#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "turnpike/are.hpp"
#include "turnpike/parallel.hpp"
#include "turnpike/riccati.hpp"
#include "turnpike/sde.hpp"
#include "turnpike/stationary.hpp"

namespace turnpike {

// Coupling upper bounds on the W2 distances between the finite-horizon laws and the
// stationary laws, one value per grid node.
struct CouplingDistances {
  TimeGrid grid;
  std::vector<double> dist_state;
  std::vector<double> dist_control;
  std::vector<double> dist_control_p1;
  std::vector<double> dist_control_p2;
};

// Finite-horizon closed loop (stacked first) against the stationary closed loop (second),
// both driven by the same Brownian motion, starting from the given joint initial law.
inline CouplingDistances coupling_distances(const GameSpec& spec, const RiccatiSolution& ric,
                                            const AreSolution& are, const CouplingInit& init) {
  const Index n = spec.n();
  const Index m = spec.m();
  const Index m1 = spec.dims.m1;
  const auto finite = finite_horizon_closed_loop(spec, ric, Vector::Zero(n));
  const auto steady = stationary_closed_loop(spec, are, ric.grid, Vector::Zero(n));
  const auto dev = coupled_deviation(finite, steady, init);

  CouplingDistances out;
  out.grid = ric.grid;
  const std::size_t N = ric.grid.size();
  out.dist_state.resize(N);
  out.dist_control.resize(N);
  out.dist_control_p1.resize(N);
  out.dist_control_p2.resize(N);

  Matrix L(m, 2 * n);
  for (std::size_t i = 0; i < N; ++i) {
    out.dist_state[i] = std::sqrt(std::max(dev.e[i], 0.0));
    // u_T - u* = Theta_T(t) (X_A - X_B) + (Theta_T(t) - Theta) X_B + v_T(t) - v.
    L << ric.Theta[i], ric.Theta[i] - are.Theta;
    const Vector c = ric.v[i] - are.v;
    const Matrix& M = dev.deviation.second[i];
    const Vector& z = dev.deviation.mean[i];
    const Matrix LML = L * M * L.transpose();
    const Vector Lz = L * z;
    double e1 = 0.0, e2 = 0.0;
    for (Index k = 0; k < m; ++k) {
      const double ek = LML(k, k) + 2.0 * c(k) * Lz(k) + c(k) * c(k);
      (k < m1 ? e1 : e2) += ek;
    }
    out.dist_control_p1[i] = std::sqrt(std::max(e1, 0.0));
    out.dist_control_p2[i] = std::sqrt(std::max(e2, 0.0));
    out.dist_control[i] = std::sqrt(std::max(e1 + e2, 0.0));
  }
  return out;
}

// Initial point mass at x for the finite-horizon process, independent draw from the
// stationary law for the other.
inline CouplingDistances wasserstein2_coupling_bound(const GameSpec& spec,
                                                     const RiccatiSolution& ric,
                                                     const AreSolution& are,
                                                     const StationaryLaw& law, const Vector& x) {
  if (x.size() != spec.n()) throw InputError("initial state has wrong dimension");
  return coupling_distances(spec, ric, are,
                            independent_coupling(x, x * x.transpose(), law.mean_x, law.second_x));
}

// Exact W2 between two equal-size 1-D empirical measures given as sorted samples.
inline double wasserstein2_empirical_1d(const std::vector<double>& a,
                                        const std::vector<double>& b) {
  if (a.empty() || a.size() != b.size())
    throw InputError("wasserstein2_empirical_1d: sample sizes differ or are empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum / static_cast<double>(a.size()));
}

// A distance curve on [0, T] with the weight |x|^2 + 1 of its initial state.
struct EnvelopeCurve {
  const std::vector<double>* times;
  const std::vector<double>* values;
  double T;
  double weight;
};

struct Envelope {
  double K = 0.0;
  double lambda = 0.0;
  std::size_t points = 0;
  double loss = 0.0;
};

inline double envelope_shape(double lambda, double t, double T) {
  return std::exp(-lambda * t) + std::exp(-lambda * (T - t));
}

inline double envelope_bound(const Envelope& env, double weight, double t, double T) {
  return env.K * weight * envelope_shape(env.lambda, t, T);
}

namespace detail {

struct EnvelopeObjective {
  const std::vector<EnvelopeCurve>& curves;
  double floor;

  // K(lambda) = max ratio; returns (loss, K).
  std::pair<double, double> operator()(double lambda) const {
    double logK = -std::numeric_limits<double>::infinity();
    for (const auto& c : curves)
      for (std::size_t i = 0; i < c.values->size(); ++i) {
        const double d = (*c.values)[i];
        if (d <= floor) continue;
        logK = std::max(logK, std::log(d / c.weight) -
                                  std::log(envelope_shape(lambda, (*c.times)[i], c.T)));
      }
    double loss = 0.0;
    for (const auto& c : curves)
      for (std::size_t i = 0; i < c.values->size(); ++i) {
        const double d = (*c.values)[i];
        if (d <= floor) continue;
        const double r = std::log(d / c.weight) - logK -
                         std::log(envelope_shape(lambda, (*c.times)[i], c.T));
        loss += r * r;
      }
    return {loss, std::exp(logK)};
  }
};

}  // namespace detail

// Fits log d ~ log K + log(w) + log(e^{-lambda t} + e^{-lambda (T - t)}) jointly over the
// curves: K is the max ratio for each lambda, lambda minimizes the squared log residual
// (coarse scan, then golden section) on [1e-3, lambda_max].
inline Envelope fit_envelope(const std::vector<EnvelopeCurve>& curves, double lambda_max,
                             double floor = 1e-10) {
  std::size_t points = 0;
  for (const auto& c : curves)
    for (double d : *c.values)
      if (d > floor) ++points;
  if (points < 5) throw AnalysisError("insufficient points");
  const double lo = 1e-3;
  if (!(lambda_max > lo)) throw InputError("fit_envelope: empty search interval");

  const detail::EnvelopeObjective f{curves, floor};
  constexpr int kScan = 64;
  int best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> grid(kScan + 1);
  for (int k = 0; k <= kScan; ++k) {
    grid[k] = lo + (lambda_max - lo) * k / kScan;
    const double loss = f(grid[k]).first;
    if (loss < best_loss) {
      best_loss = loss;
      best = k;
    }
  }
  double a = grid[std::max(best - 1, 0)];
  double b = grid[std::min(best + 1, kScan)];
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1).first, f2 = f(x2).first;
  for (int it = 0; it < 200 && b - a > 1e-12 * (1.0 + b); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1).first;
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2).first;
    }
  }
  Envelope env;
  env.lambda = 0.5 * (a + b);
  const auto [loss, K] = f(env.lambda);
  env.K = K;
  env.loss = loss;
  env.points = points;
  return env;
}

// Single-curve convenience overload.
inline Envelope fit_envelope(const std::vector<double>& dist, const TimeGrid& grid,
                             double lambda_max, double floor = 1e-10) {
  if (dist.size() != grid.size()) throw InputError("fit_envelope: grid mismatch");
  return fit_envelope({EnvelopeCurve{&grid.times, &dist, grid.T, 1.0}}, lambda_max, floor);
}

inline constexpr double kBoundSlack = 1e-12;

struct TurnpikeReport {
  Vector x;
  double T = 0.0;
  CouplingDistances dist;
  std::vector<double> bound_value;
  std::vector<bool> node_ok;
  Envelope envelope;
  bool bound_ok = false;
  double midpoint_dist = 0.0;
  double kappa = 0.25;
  double kappa_window_max = 0.0;
  double kappa_window_bound = 0.0;
  bool kappa_ok = false;
  std::string failure;

  double total(std::size_t i) const { return dist.dist_state[i] + dist.dist_control[i]; }
  double weight() const { return x.squaredNorm() + 1.0; }
};

struct TurnpikeVerdict {
  std::vector<TurnpikeReport> reports;  // ordered by (x index, T index)
  Envelope envelope;
  bool trivial = false;  // every distance below the fit floor
  bool bound_ok = false;
  bool midpoint_decreasing = false;
  bool kappa_ok = false;
  bool pass = false;
  std::vector<std::string> reasons;
};

namespace detail {

inline void apply_envelope(TurnpikeReport& r, const Envelope& env, double floor) {
  r.envelope = env;
  const auto& t = r.dist.grid.times;
  const std::size_t N = t.size();
  r.bound_value.resize(N);
  r.node_ok.resize(N);
  r.bound_ok = true;
  r.kappa_window_max = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    r.bound_value[i] = envelope_bound(env, r.weight(), t[i], r.T);
    const double d = r.total(i);
    r.node_ok[i] = d <= r.bound_value[i] * (1.0 + kBoundSlack) || (env.K == 0.0 && d <= floor);
    if (!r.node_ok[i] && r.bound_ok) {
      r.bound_ok = false;
      r.failure = "bound violated at t=" + std::to_string(t[i]);
    }
    if (t[i] >= r.kappa * r.T - 1e-12 && t[i] <= (1.0 - r.kappa) * r.T + 1e-12)
      r.kappa_window_max = std::max(r.kappa_window_max, d);
  }
  r.kappa_window_bound = 2.0 * env.K * r.weight() * std::exp(-env.lambda * r.kappa * r.T);
  r.kappa_ok = r.kappa_window_max <= r.kappa_window_bound * (1.0 + kBoundSlack) ||
               (env.K == 0.0 && r.kappa_window_max <= floor);
  if (!r.kappa_ok && r.failure.empty()) r.failure = "kappa window bound violated";
}

}  // namespace detail

// Builds a report per (x, T), fits one envelope on the largest horizon across all x, and
// checks every report against it.
inline TurnpikeVerdict turnpike_verify(const GameSpec& spec, const std::vector<Vector>& xs,
                                       const std::vector<double>& Ts, double kappa,
                                       const SolverConfig& cfg, double floor = 1e-10) {
  if (xs.empty() || Ts.empty()) throw InputError("turnpike_verify: empty x or T list");
  if (!(kappa > 0.0 && kappa < 0.5)) throw InputError("kappa must lie in (0, 1/2)");
  for (const auto& x : xs)
    if (x.size() != spec.n()) throw InputError("initial state has wrong dimension");
  for (double T : Ts)
    if (!(T > 0)) throw InputError("horizons must be positive");

  const auto are = solve_are(spec, cfg);
  const auto law = stationary_law(spec, are);

  std::vector<RiccatiSolution> rics(Ts.size());
  parallel_for(Ts.size(), [&](std::size_t k) { rics[k] = solve_game(spec, Ts[k], cfg); });

  TurnpikeVerdict out;
  out.reports.resize(xs.size() * Ts.size());
  parallel_for(out.reports.size(), [&](std::size_t idx) {
    const std::size_t xi = idx / Ts.size(), ti = idx % Ts.size();
    auto& r = out.reports[idx];
    r.x = xs[xi];
    r.T = Ts[ti];
    r.kappa = kappa;
    r.dist = wasserstein2_coupling_bound(spec, rics[ti], are, law, xs[xi]);
    r.midpoint_dist = r.total(r.dist.grid.nearest(0.5 * r.T));
  });

  const std::size_t largest =
      static_cast<std::size_t>(std::max_element(Ts.begin(), Ts.end()) - Ts.begin());
  std::vector<std::vector<double>> totals;
  std::vector<EnvelopeCurve> curves;
  totals.reserve(xs.size());
  for (std::size_t xi = 0; xi < xs.size(); ++xi) {
    const auto& r = out.reports[xi * Ts.size() + largest];
    std::vector<double> tot(r.dist.grid.size());
    for (std::size_t i = 0; i < tot.size(); ++i) tot[i] = r.total(i);
    totals.push_back(std::move(tot));
  }
  bool any_above = false;
  for (std::size_t xi = 0; xi < xs.size(); ++xi) {
    const auto& r = out.reports[xi * Ts.size() + largest];
    curves.push_back({&r.dist.grid.times, &totals[xi], r.T, r.weight()});
    for (double d : totals[xi]) any_above = any_above || d > floor;
  }
  if (any_above) {
    out.envelope = fit_envelope(curves, 4.0 * std::abs(are.closed_loop_abscissa), floor);
  } else {
    out.trivial = true;
  }

  out.bound_ok = true;
  out.kappa_ok = true;
  for (auto& r : out.reports) {
    detail::apply_envelope(r, out.envelope, floor);
    out.bound_ok = out.bound_ok && r.bound_ok;
    out.kappa_ok = out.kappa_ok && r.kappa_ok;
    if (!r.failure.empty())
      out.reasons.push_back("x=" + std::to_string(r.x.norm()) + " T=" + std::to_string(r.T) +
                            ": " + r.failure);
  }

  // Midpoint distance must not increase with T (strictly decrease unless already at zero).
  out.midpoint_decreasing = true;
  std::vector<std::size_t> order(Ts.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return Ts[a] < Ts[b]; });
  for (std::size_t xi = 0; xi < xs.size(); ++xi)
    for (std::size_t k = 1; k < order.size(); ++k) {
      const double prev = out.reports[xi * Ts.size() + order[k - 1]].midpoint_dist;
      const double cur = out.reports[xi * Ts.size() + order[k]].midpoint_dist;
      const bool ok = cur < prev || (cur <= floor && prev <= floor);
      if (!ok) {
        out.midpoint_decreasing = false;
        out.reasons.push_back("midpoint distance not decreasing at T=" +
                              std::to_string(Ts[order[k]]));
      }
    }
  out.pass = out.bound_ok && out.kappa_ok && out.midpoint_decreasing;
  return out;
}

// Scalar cross-check: empirical W2 between a bank of X_T(t; x) and a bank from the
// stationary law, against the coupling bound at t.
struct WassersteinCrosscheck {
  double t = 0.0;
  double empirical = 0.0;
  double coupling_bound = 0.0;
  double standard_error = 0.0;  // sqrt((var_a + var_b) / N)
  bool ok = false;
};

inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mu = 0.0;
  for (double x : v) mu += x;
  mu /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return s / static_cast<double>(v.size() - 1);
}

inline WassersteinCrosscheck wasserstein_crosscheck(const GameSpec& spec,
                                                    const RiccatiSolution& ric,
                                                    const AreSolution& are, const Vector& x,
                                                    double t, std::size_t count,
                                                    const SolverConfig& cfg) {
  if (spec.n() != 1) throw InputError("empirical W2 cross-check needs a scalar state");
  if (count == 0) throw InputError("cross-check needs at least one sample");
  WassersteinCrosscheck out;
  const std::size_t node = ric.grid.nearest(t);
  out.t = ric.grid.times[node];

  StationaryLaw law = stationary_law(spec, are);
  const auto bound = wasserstein2_coupling_bound(spec, ric, are, law, x);
  out.coupling_bound = bound.dist_state[node];

  const auto path = finite_horizon_closed_loop(spec, ric, x);
  const auto finite = simulate_states(path, count, cfg.seed, {node});
  sample_stationary(spec, are, law, count, cfg);

  std::vector<double> a(count), b(count);
  for (std::size_t k = 0; k < count; ++k) {
    a[k] = finite[0][k](0);
    b[k] = law.samples_x[k](0);
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  out.empirical = wasserstein2_empirical_1d(a, b);
  out.standard_error =
      std::sqrt((sample_variance(a) + sample_variance(b)) / static_cast<double>(count));
  out.ok = out.empirical <= out.coupling_bound + 4.0 * out.standard_error;
  return out;
}

}  // namespace turnpike
