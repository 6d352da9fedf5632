#include "rapdb/problem_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "rapdb/errors.hpp"

namespace rapdb {

using nlohmann::json;

namespace {

double number_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  throw InputError(where + ": expected a number");
}

json number_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw InputError(where + ": missing field '" + key + "'");
  return j.at(key);
}

Eigen::Index index_from_json(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number_integer()) throw InputError(where + "." + key + ": expected an integer");
  return v.get<Eigen::Index>();
}

DenseMatrix dense_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                            const std::string& where) {
  DenseMatrix out(rows, cols);
  if (!j.is_array()) throw InputError(where + ": expected an array");
  if (rows == 0) return out;
  if (!j.empty() && j.front().is_array()) {
    if (static_cast<Eigen::Index>(j.size()) != rows)
      throw InputError(where + ": expected " + std::to_string(rows) + " rows");
    for (Eigen::Index r = 0; r < rows; ++r) {
      const json& row = j[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
        throw InputError(where + "[" + std::to_string(r) + "]: expected " +
                         std::to_string(cols) + " columns");
      for (Eigen::Index c = 0; c < cols; ++c)
        out(r, c) = number_from_json(row[static_cast<std::size_t>(c)],
                                     where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  } else {
    if (static_cast<Eigen::Index>(j.size()) != rows * cols)
      throw InputError(where + ": expected " + std::to_string(rows * cols) + " entries (row-major)");
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        out(r, c) = number_from_json(j[static_cast<std::size_t>(r * cols + c)], where);
  }
  return out;
}

json dense_to_json(const DenseMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                        const std::string& where) {
  if (j.is_object()) {
    const json& fmt = field(j, "format", where);
    if (fmt != "csr") throw InputError(where + ".format: only \"csr\" is supported");
    try {
      return Matrix::from_csr(rows, cols,
                              field(j, "indptr", where).get<std::vector<std::int64_t>>(),
                              field(j, "indices", where).get<std::vector<std::int64_t>>(),
                              field(j, "data", where).get<std::vector<double>>());
    } catch (const json::exception& e) {
      throw InputError(where + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  return Matrix::from_dense(dense_from_json(j, rows, cols, where));
}

json matrix_to_json(const Matrix& m) {
  if (!m.is_sparse()) return dense_to_json(m.dense());
  const CsrMatrix& a = m.csr();
  std::vector<std::int64_t> indptr(a.outerIndexPtr(), a.outerIndexPtr() + a.rows() + 1);
  std::vector<std::int64_t> indices(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros());
  std::vector<double> data(a.valuePtr(), a.valuePtr() + a.nonZeros());
  return json{{"format", "csr"}, {"indptr", indptr}, {"indices", indices}, {"data", data}};
}

}  // namespace

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_to_json(v(i)));
  return out;
}

Vector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array");
  Vector out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = number_from_json(j[i], where + "[" + std::to_string(i) + "]");
  return out;
}

json set_to_json(const SimpleSet& s) {
  return std::visit(
      [](const auto& set) -> json {
        using T = std::decay_t<decltype(set)>;
        if constexpr (std::is_same_v<T, Box>) {
          return {{"type", "box"}, {"lower", vector_to_json(set.lower)},
                  {"upper", vector_to_json(set.upper)}};
        } else if constexpr (std::is_same_v<T, Ball>) {
          return {{"type", "ball"}, {"center", vector_to_json(set.center)}, {"radius", set.radius}};
        } else if constexpr (std::is_same_v<T, Simplex>) {
          return {{"type", "simplex"}, {"dim", set.dim}, {"scale", set.scale}};
        } else {
          return {{"type", "nonneg_linear_eq"}, {"direction", vector_to_json(set.direction)}};
        }
      },
      s.kind);
}

SimpleSet set_from_json(const json& j, Eigen::Index n) {
  const std::string where = "set";
  const std::string type = field(j, "type", where).get<std::string>();
  if (type == "box") {
    return SimpleSet::box(vector_from_json(field(j, "lower", where), "box.lower"),
                          vector_from_json(field(j, "upper", where), "box.upper"));
  }
  if (type == "ball") {
    const Vector center = j.contains("center") ? vector_from_json(j.at("center"), "ball.center")
                                               : Vector::Zero(n);
    return SimpleSet::ball(center, number_from_json(field(j, "radius", where), "ball.radius"));
  }
  if (type == "simplex") {
    const Eigen::Index dim = j.contains("dim") ? j.at("dim").get<Eigen::Index>() : n;
    const double scale = j.contains("scale") ? number_from_json(j.at("scale"), "simplex.scale") : 1.0;
    return SimpleSet::simplex(dim, scale);
  }
  if (type == "nonneg_linear_eq") {
    return SimpleSet::nonneg_with_linear_eq(
        vector_from_json(field(j, "direction", where), "nonneg_linear_eq.direction"));
  }
  throw InputError("set.type: unknown set type '" + type + "'");
}

json cone_to_json(const Cone& c) {
  return std::visit(
      [](const auto& k) -> json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, NonnegOrthant>) {
          return {{"type", "nonneg"}, {"dim", k.dim}};
        } else if constexpr (std::is_same_v<T, SecondOrderCone>) {
          return {{"type", "soc"}, {"dim", k.dim}};
        } else {
          json parts = json::array();
          for (const auto& p : k.parts) parts.push_back(cone_to_json(p));
          return {{"type", "product"}, {"parts", parts}};
        }
      },
      c.kind);
}

Cone cone_from_json(const json& j) {
  const std::string type = field(j, "type", "cone").get<std::string>();
  if (type == "nonneg" || type == "orthant") return Cone::nonneg(index_from_json(j, "dim", "cone"));
  if (type == "soc") return Cone::soc(index_from_json(j, "dim", "cone"));
  if (type == "product") {
    std::vector<Cone> parts;
    for (const auto& p : field(j, "parts", "cone")) parts.push_back(cone_from_json(p));
    return Cone::product(std::move(parts));
  }
  throw InputError("cone.type: unknown cone type '" + type + "'");
}

json problem_to_json(const ProblemInstance& inst) {
  const ProblemData& d = inst.data();
  json j;
  j["n"] = d.n;
  j["m"] = d.m;
  j["p"] = d.p;
  json Q = json::array();
  for (const auto& M : d.Q) Q.push_back(matrix_to_json(M));
  j["Q"] = std::move(Q);
  json q = json::array();
  for (const auto& v : d.q) q.push_back(vector_to_json(v));
  j["q"] = std::move(q);
  j["r"] = vector_to_json(d.r);
  j["A"] = dense_to_json(d.A);
  j["b"] = vector_to_json(d.b);
  j["primal_set"] = set_to_json(d.primal_set);
  j["cone"] = cone_to_json(d.cone);
  if (d.multiplier_set) j["dual_set"] = set_to_json(*d.multiplier_set);
  j["mu"] = d.mu;
  return j;
}

ProblemInstance problem_from_json(const json& j) {
  const std::string where = "problem";
  ProblemData d;
  d.n = index_from_json(j, "n", where);
  d.m = index_from_json(j, "m", where);
  d.p = j.contains("p") ? index_from_json(j, "p", where) : 0;
  if (d.n <= 0 || d.m < 0 || d.p < 0) throw InputError("problem: invalid dimensions");
  const json& Q = field(j, "Q", where);
  const json& q = field(j, "q", where);
  if (!Q.is_array() || static_cast<Eigen::Index>(Q.size()) != d.m + 1)
    throw InputError("problem.Q: expected m+1 = " + std::to_string(d.m + 1) + " matrices");
  if (!q.is_array() || static_cast<Eigen::Index>(q.size()) != d.m + 1)
    throw InputError("problem.q: expected m+1 = " + std::to_string(d.m + 1) + " vectors");
  for (std::size_t i = 0; i < Q.size(); ++i) {
    const std::string w = "problem.Q[" + std::to_string(i) + "]";
    d.Q.push_back(matrix_from_json(Q[i], d.n, d.n, w));
    d.q.push_back(vector_from_json(q[i], "problem.q[" + std::to_string(i) + "]"));
  }
  d.r = vector_from_json(field(j, "r", where), "problem.r");
  d.A = d.p > 0 ? dense_from_json(field(j, "A", where), d.p, d.n, "problem.A") : DenseMatrix(0, d.n);
  d.b = d.p > 0 ? vector_from_json(field(j, "b", where), "problem.b") : Vector(0);
  d.primal_set = j.contains("primal_set") ? set_from_json(j.at("primal_set"), d.n)
                                          : SimpleSet::free(d.n);
  d.cone = j.contains("cone") ? cone_from_json(j.at("cone")) : Cone::nonneg(d.m);
  if (j.contains("dual_set") && !j.at("dual_set").is_null())
    d.multiplier_set = set_from_json(j.at("dual_set"), d.m);
  d.mu = j.contains("mu") ? number_from_json(j.at("mu"), "problem.mu") : 0.0;
  return ProblemInstance(std::move(d));
}

json iterate_to_json(const Iterate& z) {
  return {{"x", vector_to_json(z.x)}, {"v", vector_to_json(z.v)}, {"lambda", vector_to_json(z.lam)}};
}

Iterate iterate_from_json(const json& j, const ProblemInstance& inst) {
  Iterate z = Iterate::zeros(inst.n(), inst.p(), inst.m());
  z.x = vector_from_json(field(j, "x", "point"), "point.x");
  if (j.contains("v")) z.v = vector_from_json(j.at("v"), "point.v");
  if (j.contains("lambda")) z.lam = vector_from_json(j.at("lambda"), "point.lambda");
  inst.check_iterate(z);
  return z;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

ProblemInstance load_problem(const std::string& path) {
  const json j = load_json(path);
  try {
    return problem_from_json(j);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  } catch (const DataError& e) {
    throw InputError(path + ": " + e.what());
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(path + ": cannot open for writing");
    out << content;
    if (!out) throw InputError(path + ": write failed");
  }
  fs::rename(tmp, target);
}

void save_problem(const ProblemInstance& inst, const std::string& path) {
  write_text_atomic(path, problem_to_json(inst).dump() + "\n");
}

}  // namespace rapdb
