#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "turnpike/model.hpp"

namespace turnpike {

// Problem file: one JSON object with fields n, m1, m2, A, B1, B2, C, D1, D2, b, sigma,
// Q, S1, S2, R11, R12, R22, q, r1, r2. Matrices are row-major nested arrays.
// R21 is derived as R12^T unless given explicitly.
namespace detail {

using json = nlohmann::json;

inline Matrix matrix_from_json(const json& j, const char* name) {
  if (!j.is_array()) throw InputError(std::string(name) + ": expected nested array");
  const auto rows = static_cast<Index>(j.size());
  Index cols = 0;
  if (rows > 0) {
    if (!j[0].is_array()) throw InputError(std::string(name) + ": expected nested array");
    cols = static_cast<Index>(j[0].size());
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw InputError(std::string(name) + ": ragged rows");
    for (Index k = 0; k < cols; ++k) {
      const auto& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw InputError(std::string(name) + ": non-numeric entry");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

inline Vector vector_from_json(const json& j, const char* name) {
  if (!j.is_array()) throw InputError(std::string(name) + ": expected array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError(std::string(name) + ": non-numeric entry");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(std::move(row));
  }
  return out;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Index dim_from_json(const json& j, const char* name) {
  if (!j.is_number_integer()) throw InputError(std::string(name) + ": expected integer");
  return static_cast<Index>(j.get<long long>());
}

}  // namespace detail

inline GameSpec parse_problem(const std::string& text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("problem file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("problem file must be a JSON object");

  static const std::set<std::string> required{"n",  "m1", "m2", "A",   "B1",  "B2",  "C",
                                              "D1", "D2", "b",  "sigma", "Q", "S1",  "S2",
                                              "R11", "R12", "R22", "q", "r1", "r2"};
  for (const auto& [key, _] : doc.items())
    if (!required.count(key) && key != "R21") throw InputError("unknown field: " + key);
  for (const auto& key : required)
    if (!doc.contains(key)) throw InputError("missing field: " + key);

  using detail::matrix_from_json;
  using detail::vector_from_json;
  GameSpec s;
  s.dims.n = detail::dim_from_json(doc["n"], "n");
  s.dims.m1 = detail::dim_from_json(doc["m1"], "m1");
  s.dims.m2 = detail::dim_from_json(doc["m2"], "m2");
  s.dyn.A = matrix_from_json(doc["A"], "A");
  s.dyn.B1 = matrix_from_json(doc["B1"], "B1");
  s.dyn.B2 = matrix_from_json(doc["B2"], "B2");
  s.dyn.C = matrix_from_json(doc["C"], "C");
  s.dyn.D1 = matrix_from_json(doc["D1"], "D1");
  s.dyn.D2 = matrix_from_json(doc["D2"], "D2");
  s.dyn.b = vector_from_json(doc["b"], "b");
  s.dyn.sigma = vector_from_json(doc["sigma"], "sigma");
  s.cost.Q = matrix_from_json(doc["Q"], "Q");
  s.cost.S1 = matrix_from_json(doc["S1"], "S1");
  s.cost.S2 = matrix_from_json(doc["S2"], "S2");
  s.cost.R11 = matrix_from_json(doc["R11"], "R11");
  s.cost.R12 = matrix_from_json(doc["R12"], "R12");
  s.cost.R22 = matrix_from_json(doc["R22"], "R22");
  s.cost.R21 = doc.contains("R21") ? matrix_from_json(doc["R21"], "R21")
                                   : Matrix(s.cost.R12.transpose());
  s.cost.q = vector_from_json(doc["q"], "q");
  s.cost.r1 = vector_from_json(doc["r1"], "r1");
  s.cost.r2 = vector_from_json(doc["r2"], "r2");
  return s;
}

// R21 is written only when it differs from R12^T, so parse(emit(s)) == s always.
inline std::string emit_problem(const GameSpec& s) {
  using detail::json;
  using detail::matrix_to_json;
  using detail::vector_to_json;
  json doc = json::object();
  doc["n"] = s.dims.n;
  doc["m1"] = s.dims.m1;
  doc["m2"] = s.dims.m2;
  doc["A"] = matrix_to_json(s.dyn.A);
  doc["B1"] = matrix_to_json(s.dyn.B1);
  doc["B2"] = matrix_to_json(s.dyn.B2);
  doc["C"] = matrix_to_json(s.dyn.C);
  doc["D1"] = matrix_to_json(s.dyn.D1);
  doc["D2"] = matrix_to_json(s.dyn.D2);
  doc["b"] = vector_to_json(s.dyn.b);
  doc["sigma"] = vector_to_json(s.dyn.sigma);
  doc["Q"] = matrix_to_json(s.cost.Q);
  doc["S1"] = matrix_to_json(s.cost.S1);
  doc["S2"] = matrix_to_json(s.cost.S2);
  doc["R11"] = matrix_to_json(s.cost.R11);
  doc["R12"] = matrix_to_json(s.cost.R12);
  doc["R22"] = matrix_to_json(s.cost.R22);
  const bool derived = s.cost.R21.rows() == s.cost.R12.cols() &&
                       s.cost.R21.cols() == s.cost.R12.rows() &&
                       (s.cost.R21.size() == 0 || s.cost.R21 == s.cost.R12.transpose());
  if (!derived) doc["R21"] = matrix_to_json(s.cost.R21);
  doc["q"] = vector_to_json(s.cost.q);
  doc["r1"] = vector_to_json(s.cost.r1);
  doc["r2"] = vector_to_json(s.cost.r2);
  return doc.dump(2) + "\n";
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline GameSpec load_problem(const std::string& path) {
  return parse_problem(read_text_file(path));
}

}  // namespace turnpike
