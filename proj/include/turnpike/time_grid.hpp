#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "turnpike/errors.hpp"

namespace turnpike {

// Uniform nodes 0, h, 2h, ... with a final (possibly short) step landing on T.
struct TimeGrid {
  double T = 0.0;
  double step = 0.0;
  std::vector<double> times;

  std::size_t size() const { return times.size(); }
  std::size_t last() const { return times.size() - 1; }

  // Node index for a time that lies on the grid (to within 1e-9 h).
  std::size_t index_of(double t) const {
    if (t < -1e-9 * step || t > T + 1e-9 * step) throw InputError("time outside grid");
    const double k = std::round(t / step);
    const auto idx = static_cast<std::size_t>(k);
    if (idx < times.size() && std::abs(times[idx] - t) <= 1e-9 * step) return idx;
    if (std::abs(times.back() - t) <= 1e-9 * step) return last();
    throw InputError("time " + std::to_string(t) + " is not a grid node");
  }

  // Nearest node to t, clamped to [0, T].
  std::size_t nearest(double t) const {
    if (t <= 0) return 0;
    if (t >= T) return last();
    const auto idx = static_cast<std::size_t>(std::llround(t / step));
    return std::min(idx, last());
  }
};

inline TimeGrid make_grid(double T, double step) {
  if (!(T > 0) || !(step > 0)) throw InputError("grid: T and step must be positive");
  TimeGrid g;
  g.T = T;
  g.step = step;
  const double ratio = T / step;
  auto full = static_cast<std::size_t>(std::floor(ratio + 1e-9));
  g.times.reserve(full + 2);
  for (std::size_t i = 0; i <= full; ++i) g.times.push_back(static_cast<double>(i) * step);
  if (T - g.times.back() > 1e-9 * step)
    g.times.push_back(T);
  else
    g.times.back() = T;
  if (g.times.size() < 2) g.times = {0.0, T};
  return g;
}

}  // namespace turnpike
