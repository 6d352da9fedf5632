#pragma once

#include <string>

#include "json.hpp"
#include "rapdb/problem.hpp"

namespace rapdb {

// Problem JSON:
//   {"n","m","p","Q":[dense rows | {"format":"csr","indptr","indices","data"}],
//    "q":[...],"r":[...],"A":[[...]],"b":[...],
//    "primal_set":{"type":"box","lower":[...],"upper":[...]} | ball | simplex | nonneg_linear_eq,
//    "cone":{"type":"nonneg"|"soc","dim":m} | {"type":"product","parts":[...]},
//    "dual_set": optional set descriptor, "mu": 0}
// Infinite bounds are written as the strings "inf" / "-inf".
nlohmann::json problem_to_json(const ProblemInstance& inst);
ProblemInstance problem_from_json(const nlohmann::json& j);

nlohmann::json set_to_json(const SimpleSet& s);
SimpleSet set_from_json(const nlohmann::json& j, Eigen::Index n);
nlohmann::json cone_to_json(const Cone& c);
Cone cone_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j, const std::string& where);

nlohmann::json iterate_to_json(const Iterate& z);
Iterate iterate_from_json(const nlohmann::json& j, const ProblemInstance& inst);

// File helpers; errors carry the path and the failing field.
ProblemInstance load_problem(const std::string& path);
void save_problem(const ProblemInstance& inst, const std::string& path);
nlohmann::json load_json(const std::string& path);
// Writes to a temporary sibling then renames.
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace rapdb
