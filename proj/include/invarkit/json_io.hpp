#pragma once

#include <json.hpp>

#include <string>

#include "invarkit/polytope.hpp"

namespace invar {

using Json = nlohmann::json;

Json matrix_to_json(const Matrix& m);   // row-major nested arrays
Matrix matrix_from_json(const Json& j, int expected_cols = -1);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

/// {"dim": d, "A": [[...]], "b": [...]} with {"box": {"lower", "upper"}}
/// accepted on input as shorthand for axis-aligned boxes.
Json polytope_to_json(const HPolytope& p);
HPolytope polytope_from_json(const Json& j);

HPolytope load_polytope(const std::string& path);
void save_polytope(const HPolytope& p, const std::string& path);

/// Serialized with shortest round-trip doubles and sorted keys; byte-stable
/// across runs for identical inputs.
std::string dump_json(const Json& j);
Json parse_json_text(const std::string& text);
Json load_json(const std::string& path);
void save_json(const Json& j, const std::string& path);

/// FNV-1a over the canonical serialization.
std::string content_hash(const std::string& text);

}  // namespace invar
