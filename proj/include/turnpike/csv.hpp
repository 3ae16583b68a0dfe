#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "turnpike/analysis.hpp"
#include "turnpike/are.hpp"
#include "turnpike/riccati.hpp"
#include "turnpike/sde.hpp"
#include "turnpike/stationary.hpp"

namespace turnpike::csv {

// 17 significant digits round-trips every double.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : width_(header.size()) { row(header); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double v : cells) s.push_back(num(v));
    row(s);
  }

  std::string str() const { return out_.str(); }

 private:
  std::size_t width_;
  std::ostringstream out_;
};

inline void append_matrix_names(std::vector<std::string>& h, const std::string& name, Index r,
                                Index c) {
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j)
      h.push_back(name + "_" + std::to_string(i) + "_" + std::to_string(j));
}

inline void append_vector_names(std::vector<std::string>& h, const std::string& name, Index n) {
  for (Index i = 0; i < n; ++i) h.push_back(name + "_" + std::to_string(i));
}

inline void append_matrix(std::vector<double>& row, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
}

inline void append_vector(std::vector<double>& row, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) row.push_back(v(i));
}

// t, P_i_j, Theta_i_j, phi_i, v_i, m1, m2 (matrices row-major; m1, m2 are the regularity
// margins of the two players).
inline std::string riccati_table(const RiccatiSolution& ric) {
  const Index n = ric.P.front().rows();
  const Index m = ric.Theta.front().rows();
  std::vector<std::string> h{"t"};
  append_matrix_names(h, "P", n, n);
  append_matrix_names(h, "Theta", m, n);
  append_vector_names(h, "phi", n);
  append_vector_names(h, "v", m);
  h.push_back("m1");
  h.push_back("m2");
  Table t(h);
  for (std::size_t i = 0; i < ric.grid.size(); ++i) {
    std::vector<double> r{ric.grid.times[i]};
    append_matrix(r, ric.P[i]);
    append_matrix(r, ric.Theta[i]);
    append_vector(r, ric.phi[i]);
    append_vector(r, ric.v[i]);
    r.push_back(ric.reg_margin_1.empty() ? 0.0 : ric.reg_margin_1[i]);
    r.push_back(ric.reg_margin_2.empty() ? 0.0 : ric.reg_margin_2[i]);
    t.row(r);
  }
  return t.str();
}

class KeyValue {
 public:
  KeyValue() : table_({"key", "value"}) {}
  void add(const std::string& key, double v) { table_.row({key, num(v)}); }
  void add(const std::string& key, const std::string& v) { table_.row({key, v}); }
  void add(const std::string& name, const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j)
        add(name + "_" + std::to_string(i) + "_" + std::to_string(j), m(i, j));
  }
  void add(const std::string& name, const Vector& v) {
    for (Index i = 0; i < v.size(); ++i) add(name + "_" + std::to_string(i), v(i));
  }
  std::string str() const { return table_.str(); }

 private:
  Table table_;
};

inline std::string are_table(const AreSolution& are, const StationaryLaw& law) {
  KeyValue kv;
  kv.add("P", are.P);
  kv.add("Theta", are.Theta);
  kv.add("phi", are.phi);
  kv.add("v", are.v);
  kv.add("residual", are.residual);
  kv.add("closed_loop_abscissa", are.closed_loop_abscissa);
  kv.add("regularity_1", are.regularity_1);
  kv.add("regularity_2", are.regularity_2);
  kv.add("horizon_used", are.horizon_used);
  kv.add("newton_iterations", static_cast<double>(are.newton_iterations));
  kv.add("mean_x", law.mean_x);
  kv.add("second_x", law.second_x);
  kv.add("mean_u", law.mean_u);
  kv.add("second_u", law.second_u);
  return kv.str();
}

// t, mean components, vec(second) in column-stacking order.
inline std::string moment_table(const MomentCurve& curve) {
  const Index n = curve.mean.front().size();
  std::vector<std::string> h{"t"};
  append_vector_names(h, "mean", n);
  append_vector_names(h, "vec_second", n * n);
  Table t(h);
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    std::vector<double> r{curve.grid.times[i]};
    append_vector(r, curve.mean[i]);
    append_vector(r, vec(curve.second[i]));
    t.row(r);
  }
  return t.str();
}

// One row per sample: prefix_0 ... prefix_{d-1}.
inline std::string sample_bank(const std::vector<Vector>& samples, Index dim,
                               const std::string& prefix) {
  std::vector<std::string> h;
  append_vector_names(h, prefix, dim);
  Table t(h);
  for (const auto& s : samples) {
    std::vector<double> r;
    append_vector(r, s);
    t.row(r);
  }
  return t.str();
}

// Distances are coupling upper bounds on the W2 distances.
inline std::string report_table(const TurnpikeReport& r) {
  Table t({"t", "dist_state", "dist_control_p1", "dist_control_p2", "bound_value", "ok"});
  for (std::size_t i = 0; i < r.dist.grid.size(); ++i)
    t.row({num(r.dist.grid.times[i]), num(r.dist.dist_state[i]), num(r.dist.dist_control_p1[i]),
           num(r.dist.dist_control_p2[i]), num(r.bound_value[i]), r.node_ok[i] ? "1" : "0"});
  return t.str();
}

inline std::string format_state(const Vector& x) {
  std::string s;
  for (Index i = 0; i < x.size(); ++i) {
    if (i) s += ' ';
    s += num(x(i));
  }
  return s;
}

inline std::string summary_table(const TurnpikeVerdict& v) {
  Table t({"x", "T", "K_hat", "lambda_hat", "midpoint_dist", "verdict"});
  for (const auto& r : v.reports)
    t.row({format_state(r.x), num(r.T), num(v.envelope.K), num(v.envelope.lambda),
           num(r.midpoint_dist),
           r.bound_ok && r.kappa_ok && v.midpoint_decreasing ? "pass" : "fail"});
  return t.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << content;
  if (!f) throw InputError("write failed: " + path);
}

}  // namespace turnpike::csv
