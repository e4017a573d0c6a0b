#pragma once

#include <Eigen/Dense>

namespace invar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Shared numeric tolerances. All containment-style tolerances are understood
// on unit-norm constraint rows.
namespace tol {
inline constexpr double kFeas = 1e-8;        // LP feasibility / certificate residual
inline constexpr double kOpt = 1e-9;         // LP reduced-cost optimality
inline constexpr double kRedundancy = 1e-9;  // strict-excess margin certifying a row irredundant
inline constexpr double kContain = 1e-6;     // default set-containment tolerance
inline constexpr double kPivot = 1e-9;       // smallest acceptable simplex pivot
inline constexpr double kZeroCoeff = 1e-10;  // coefficient treated as zero on unit rows
}  // namespace tol

}  // namespace invar
