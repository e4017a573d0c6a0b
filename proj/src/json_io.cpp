#include "invarkit/json_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace invar {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

double as_number(const Json& j, const char* where) {
  if (!j.is_number()) fail(std::string("expected a number in ") + where);
  return j.get<double>();
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, int expected_cols) {
  if (!j.is_array()) fail("matrix must be an array of rows");
  const auto n_rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index n_cols = expected_cols;
  if (n_rows == 0) {
    if (expected_cols < 0) fail("cannot infer column count of an empty matrix");
    return Matrix(0, n_cols);
  }
  if (!j[0].is_array()) fail("matrix rows must be arrays");
  if (expected_cols < 0) n_cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(n_rows, n_cols);
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    const Json& row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n_cols)
      fail("matrix rows must all have the same length");
    for (Eigen::Index k = 0; k < n_cols; ++k) m(i, k) = as_number(row[k], "matrix");
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) fail("vector must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = as_number(j[i], "vector");
  return v;
}

Json polytope_to_json(const HPolytope& p) {
  Json j;
  j["dim"] = p.dim;
  j["A"] = matrix_to_json(p.sys.normals);
  j["b"] = vector_to_json(p.sys.offsets);
  return j;
}

HPolytope polytope_from_json(const Json& j) {
  if (!j.is_object()) fail("polytope must be a JSON object");
  if (j.contains("box")) {
    const Json& box = j.at("box");
    Vector lo = vector_from_json(box.at("lower"));
    Vector hi = vector_from_json(box.at("upper"));
    if (lo.size() != hi.size()) fail("box lower/upper lengths differ");
    return HPolytope::box(lo, hi);
  }
  if (!j.contains("dim") || !j.contains("A") || !j.contains("b"))
    fail("polytope needs dim, A, b (or a box shorthand)");
  const int dim = j.at("dim").get<int>();
  if (dim < 0) fail("polytope dim must be nonnegative");
  HPolytope p;
  p.dim = dim;
  p.sys.normals = matrix_from_json(j.at("A"), dim);
  p.sys.offsets = vector_from_json(j.at("b"));
  if (p.sys.normals.rows() != p.sys.offsets.size())
    fail("polytope A and b row counts differ");
  p.sys.validate();
  return p;
}

HPolytope load_polytope(const std::string& path) {
  return polytope_from_json(load_json(path));
}

void save_polytope(const HPolytope& p, const std::string& path) {
  save_json(polytope_to_json(p), path);
}

std::string dump_json(const Json& j) {
  // nlohmann emits shortest-round-trip doubles; an ordered dump with a fixed
  // indent makes the bytes a pure function of the value.
  return j.dump(2);
}

Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str());
}

void save_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  out << dump_json(j) << '\n';
}

std::string content_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace invar
