#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "turnpike.hpp"

namespace testing_support {

using turnpike::GameSpec;
using turnpike::Index;
using turnpike::Matrix;
using turnpike::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, Index r, Index c, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Index n, double scale) {
  return random_matrix(rng, n, 1, scale);
}

// Small random game: mildly stable drift, weak multiplicative noise, R11 > 0 > R22.
inline GameSpec random_spec(std::uint64_t seed, bool affine = false) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 4), ctl(1, 2);
  GameSpec s;
  s.dims = {dim(rng), ctl(rng), ctl(rng)};
  const Index n = s.dims.n, m1 = s.dims.m1, m2 = s.dims.m2;
  s.dyn.A = random_matrix(rng, n, n, 0.5) - 1.0 * Matrix::Identity(n, n);
  s.dyn.B1 = random_matrix(rng, n, m1, 0.7);
  s.dyn.B2 = random_matrix(rng, n, m2, 0.7);
  s.dyn.C = random_matrix(rng, n, n, 0.2);
  s.dyn.D1 = random_matrix(rng, n, m1, 0.2);
  s.dyn.D2 = random_matrix(rng, n, m2, 0.2);
  s.dyn.b = affine ? random_vector(rng, n, 0.5) : Vector::Zero(n);
  s.dyn.sigma = affine ? random_vector(rng, n, 0.5) : Vector::Zero(n);
  const Matrix G = random_matrix(rng, n, n, 0.6);
  s.cost.Q = G * G.transpose() + 0.1 * Matrix::Identity(n, n);
  s.cost.S1 = random_matrix(rng, m1, n, 0.1);
  s.cost.S2 = random_matrix(rng, m2, n, 0.1);
  const Matrix H1 = random_matrix(rng, m1, m1, 0.3);
  const Matrix H2 = random_matrix(rng, m2, m2, 0.3);
  s.cost.R11 = H1 * H1.transpose() + Matrix::Identity(m1, m1);
  s.cost.R22 = -(H2 * H2.transpose() + 2.0 * Matrix::Identity(m2, m2));
  s.cost.R12 = random_matrix(rng, m1, m2, 0.1);
  s.cost.R21 = s.cost.R12.transpose();
  s.cost.q = affine ? random_vector(rng, n, 0.3) : Vector::Zero(n);
  s.cost.r1 = affine ? random_vector(rng, m1, 0.3) : Vector::Zero(m1);
  s.cost.r2 = affine ? random_vector(rng, m2, 0.3) : Vector::Zero(m2);
  return s;
}

// Closed form of the CFG1 game Riccati solution, P_T(t) = (1 - e^{-2(T-t)}) / 2.
inline double cfg1_riccati(double T, double t) { return 0.5 * (1.0 - std::exp(-2.0 * (T - t))); }

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("turnpike_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string problem_path(const std::string& file) {
  return std::string(TURNPIKE_PROBLEMS_DIR) + "/" + file;
}

}  // namespace testing_support
