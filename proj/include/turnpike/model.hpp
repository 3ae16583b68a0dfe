#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "turnpike/linalg.hpp"

namespace turnpike {

struct Dimensions {
  Index n = 1;
  Index m1 = 1;
  Index m2 = 1;

  Index m() const { return m1 + m2; }
  bool operator==(const Dimensions&) const = default;
};

// dX = [A X + B1 u1 + B2 u2 + b] dt + [C X + D1 u1 + D2 u2 + sigma] dW
struct Dynamics {
  Matrix A, B1, B2, C, D1, D2;
  Vector b, sigma;
};

// Running cost weights of the block quadratic form [Q S1' S2'; S1 R11 R12; S2 R21 R22]
// plus the linear terms (q, r1, r2).
struct Costs {
  Matrix Q, S1, S2, R11, R12, R21, R22;
  Vector q, r1, r2;
};

struct GameSpec {
  Dimensions dims;
  Dynamics dyn;
  Costs cost;

  Index n() const { return dims.n; }
  Index m() const { return dims.m(); }

  Matrix B() const {
    Matrix out(dims.n, dims.m());
    out << dyn.B1, dyn.B2;
    return out;
  }
  Matrix D() const {
    Matrix out(dims.n, dims.m());
    out << dyn.D1, dyn.D2;
    return out;
  }
  Matrix S() const {
    Matrix out(dims.m(), dims.n);
    out << cost.S1, cost.S2;
    return out;
  }
  Matrix R() const {
    Matrix out(dims.m(), dims.m());
    out << cost.R11, cost.R12, cost.R21, cost.R22;
    return out;
  }
  Vector r() const {
    Vector out(dims.m());
    out << cost.r1, cost.r2;
    return out;
  }
};

namespace detail {
template <class M>
bool same_matrix(const M& a, const M& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}
}  // namespace detail

// Bit-exact equality of every coefficient.
inline bool operator==(const GameSpec& x, const GameSpec& y) {
  using detail::same_matrix;
  const auto& a = x.dyn;
  const auto& b = y.dyn;
  const auto& c = x.cost;
  const auto& d = y.cost;
  return x.dims == y.dims && same_matrix(a.A, b.A) && same_matrix(a.B1, b.B1) &&
         same_matrix(a.B2, b.B2) && same_matrix(a.C, b.C) && same_matrix(a.D1, b.D1) &&
         same_matrix(a.D2, b.D2) && same_matrix(a.b, b.b) && same_matrix(a.sigma, b.sigma) &&
         same_matrix(c.Q, d.Q) && same_matrix(c.S1, d.S1) && same_matrix(c.S2, d.S2) &&
         same_matrix(c.R11, d.R11) && same_matrix(c.R12, d.R12) &&
         same_matrix(c.R21, d.R21) && same_matrix(c.R22, d.R22) && same_matrix(c.q, d.q) &&
         same_matrix(c.r1, d.r1) && same_matrix(c.r2, d.r2);
}

struct SolverConfig {
  double step = 1e-3;
  double reg_delta = 1e-6;
  double tol_fixed_point = 1e-10;
  double tol_residual = 1e-8;
  double horizon_cap = 200.0;
  std::uint64_t seed = 0;

  void check() const {
    if (!(step > 0) || !(reg_delta > 0) || !(tol_fixed_point > 0) || !(tol_residual > 0) ||
        !(horizon_cap > 0))
      throw InputError("solver config: step, reg_delta, tolerances and horizon_cap must be > 0");
  }
};

struct Violation {
  std::string location;
  std::string message;
};

namespace detail {

inline void check_shape(std::vector<Violation>& out, const char* name, const Matrix& m,
                        Index rows, Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    out.push_back({name, std::string(name) + " shape: expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols())});
  } else if (!m.allFinite()) {
    out.push_back({name, std::string(name) + " has non-finite entries"});
  }
}

inline bool nearly_equal(const Matrix& a, const Matrix& b) {
  if (a.size() == 0) return true;
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace detail

// Every shape or symmetry violation; empty iff the spec is well formed.
inline std::vector<Violation> validate(const GameSpec& spec) {
  std::vector<Violation> out;
  const auto& d = spec.dims;
  if (d.n < 1) out.push_back({"n", "n must be >= 1"});
  if (d.m1 < 1) out.push_back({"m1", "m1 must be >= 1"});
  if (d.m2 < 1) out.push_back({"m2", "m2 must be >= 1"});
  if (!out.empty()) return out;

  using detail::check_shape;
  const Index n = d.n, m1 = d.m1, m2 = d.m2;
  check_shape(out, "A", spec.dyn.A, n, n);
  check_shape(out, "B1", spec.dyn.B1, n, m1);
  check_shape(out, "B2", spec.dyn.B2, n, m2);
  check_shape(out, "C", spec.dyn.C, n, n);
  check_shape(out, "D1", spec.dyn.D1, n, m1);
  check_shape(out, "D2", spec.dyn.D2, n, m2);
  check_shape(out, "b", spec.dyn.b, n, 1);
  check_shape(out, "sigma", spec.dyn.sigma, n, 1);
  check_shape(out, "Q", spec.cost.Q, n, n);
  check_shape(out, "S1", spec.cost.S1, m1, n);
  check_shape(out, "S2", spec.cost.S2, m2, n);
  check_shape(out, "R11", spec.cost.R11, m1, m1);
  check_shape(out, "R12", spec.cost.R12, m1, m2);
  check_shape(out, "R21", spec.cost.R21, m2, m1);
  check_shape(out, "R22", spec.cost.R22, m2, m2);
  check_shape(out, "q", spec.cost.q, n, 1);
  check_shape(out, "r1", spec.cost.r1, m1, 1);
  check_shape(out, "r2", spec.cost.r2, m2, 1);

  auto shaped = [&](const char* name) {
    for (const auto& v : out)
      if (v.location == name) return false;
    return true;
  };
  using detail::nearly_equal;
  if (shaped("Q") && !nearly_equal(spec.cost.Q, spec.cost.Q.transpose()))
    out.push_back({"Q", "Q is not symmetric"});
  if (shaped("R11") && !nearly_equal(spec.cost.R11, spec.cost.R11.transpose()))
    out.push_back({"R11", "R11 is not symmetric"});
  if (shaped("R22") && !nearly_equal(spec.cost.R22, spec.cost.R22.transpose()))
    out.push_back({"R22", "R22 is not symmetric"});
  if (shaped("R12") && shaped("R21") &&
      !nearly_equal(spec.cost.R21, spec.cost.R12.transpose()))
    out.push_back({"R21", "R21 != R12^T"});
  return out;
}

namespace detail {

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }
inline Vector scalar_vec(double v) { return Vector::Constant(1, v); }

}  // namespace detail

// Desk-scale fixtures CFG0..CFG3 (all scalar: n = m1 = m2 = 1).
inline GameSpec named_config(std::string_view name) {
  using detail::scalar;
  using detail::scalar_vec;
  GameSpec s;
  s.dims = {1, 1, 1};
  s.dyn.A = scalar(-1.0);
  s.dyn.B1 = scalar(1.0);
  s.dyn.B2 = scalar(1.0);
  s.dyn.C = scalar(0.0);
  s.dyn.D1 = scalar(0.0);
  s.dyn.D2 = scalar(0.0);
  s.dyn.b = scalar_vec(0.0);
  s.dyn.sigma = scalar_vec(0.0);
  s.cost.Q = scalar(1.0);
  s.cost.S1 = scalar(0.0);
  s.cost.S2 = scalar(0.0);
  s.cost.R11 = scalar(1.0);
  s.cost.R12 = scalar(0.0);
  s.cost.R21 = scalar(0.0);
  s.cost.R22 = scalar(-1.0);
  s.cost.q = scalar_vec(0.0);
  s.cost.r1 = scalar_vec(0.0);
  s.cost.r2 = scalar_vec(0.0);

  if (name == "CFG1") return s;
  if (name == "CFG0") {
    s.dyn.B1 = scalar(0.0);
    s.dyn.B2 = scalar(0.0);
    s.cost.Q = scalar(0.0);
    return s;
  }
  if (name == "CFG2") {
    s.dyn.b = scalar_vec(1.0);
    s.dyn.sigma = scalar_vec(1.0);
    return s;
  }
  if (name == "CFG3") {
    s.dyn.C = scalar(2.0);
    return s;
  }
  throw InputError("unknown fixture: " + std::string(name));
}

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"CFG0", "CFG1", "CFG2", "CFG3"};
  return names;
}

}  // namespace turnpike
