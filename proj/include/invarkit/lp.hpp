#pragma once

#include <stdexcept>
#include <string>

#include "invarkit/linalg.hpp"

namespace invar {

/// Constraint system {x : normals * x <= offsets}. Rows may be in arbitrary
/// scale; a system with zero rows describes the whole space.
struct HalfspaceSystem {
  Matrix normals;  // q x n
  Vector offsets;  // q

  HalfspaceSystem() : normals(0, 0), offsets(0) {}
  HalfspaceSystem(Matrix a, Vector b) : normals(std::move(a)), offsets(std::move(b)) {}

  Eigen::Index rows() const { return normals.rows(); }
  Eigen::Index cols() const { return normals.cols(); }

  /// Throws std::invalid_argument on row/offset mismatch or non-finite entries.
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector optimizer;  // meaningful iff status == Optimal
  double value = 0.0;
};

/// Raised when the solver cannot certify an answer (never a wrong Optimal).
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Maximize objective . x over {x : A x <= b}, x free.
///
/// Dense two-phase simplex. Optimal answers are re-verified by substitution;
/// if verification fails the solve is restarted with Bland's rule, and a
/// second failure raises SolverError. Stateless; safe to call concurrently.
LpResult solve_max(const Vector& objective, const HalfspaceSystem& constraints);

}  // namespace invar
