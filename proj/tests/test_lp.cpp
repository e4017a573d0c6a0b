#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "invarkit/lp.hpp"
#include "oracles.hpp"

using namespace invar;

namespace {

HalfspaceSystem rows1(std::initializer_list<std::pair<double, double>> rows) {
  Matrix a(static_cast<Eigen::Index>(rows.size()), 1);
  Vector b(static_cast<Eigen::Index>(rows.size()));
  Eigen::Index i = 0;
  for (const auto& [coef, off] : rows) {
    a(i, 0) = coef;
    b(i) = off;
    ++i;
  }
  return {a, b};
}

Vector scalar(double v) { return Vector::Constant(1, v); }

}  // namespace

TEST_CASE("one dimensional box maximum") {
  const auto res = solve_max(scalar(1.0), rows1({{1, 5}, {-1, 5}}));
  REQUIRE(res.status == LpStatus::Optimal);
  CHECK(res.value == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(res.optimizer(0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("contradictory bounds are infeasible") {
  const auto res = solve_max(scalar(1.0), rows1({{1, -1}, {-1, 0}}));
  CHECK(res.status == LpStatus::Infeasible);
}

TEST_CASE("open ray is unbounded") {
  const auto res = solve_max(scalar(1.0), rows1({{-1, 0}}));
  CHECK(res.status == LpStatus::Unbounded);
}

TEST_CASE("zero objective over a feasible set is optimal at zero") {
  const auto res = solve_max(scalar(0.0), rows1({{1, 5}, {-1, 5}}));
  REQUIRE(res.status == LpStatus::Optimal);
  CHECK(res.value == doctest::Approx(0.0));
}

TEST_CASE("square corner optimum") {
  Matrix a(4, 2);
  a << 1, 0, -1, 0, 0, 1, 0, -1;
  Vector b(4);
  b << 1, 1, 1, 1;
  Vector obj(2);
  obj << 1, 1;
  const auto res = solve_max(obj, HalfspaceSystem{a, b});
  REQUIRE(res.status == LpStatus::Optimal);
  CHECK(res.value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(res.optimizer(0) == doctest::Approx(1.0));
  CHECK(res.optimizer(1) == doctest::Approx(1.0));
}

TEST_CASE("dimension mismatch is rejected") {
  Matrix a(1, 2);
  a << 1, 0;
  Vector b = scalar(1.0);
  CHECK_THROWS_AS(solve_max(scalar(1.0), HalfspaceSystem{a, b}), std::invalid_argument);
}

TEST_CASE("non finite constraint data is rejected") {
  HalfspaceSystem sys = rows1({{1, 5}});
  sys.offsets(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_max(scalar(1.0), sys), std::invalid_argument);
}

// Random feasible bounded instances: box rows guarantee boundedness, and every
// extra cut passes through a margin around a known interior point, so the
// vertex-enumeration optimum is a sound reference.
TEST_CASE("duality spot-check against vertex enumeration") {
  oracle::Rng rng(20260817);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = rng.integer(1, 3);
    const double r = rng.range(0.5, 10.0);
    Vector x0(n);
    for (int i = 0; i < n; ++i) x0(i) = rng.range(-0.4 * r, 0.4 * r);

    const int extra = rng.integer(0, 8 - 2 * n > 0 ? 8 - 2 * n : 0);
    Matrix a(2 * n + extra, n);
    Vector b(2 * n + extra);
    a.setZero();
    for (int i = 0; i < n; ++i) {
      a(2 * i, i) = 1;
      b(2 * i) = r;
      a(2 * i + 1, i) = -1;
      b(2 * i + 1) = r;
    }
    for (int e = 0; e < extra; ++e) {
      Vector dir(n);
      for (int i = 0; i < n; ++i) dir(i) = rng.range(-1.0, 1.0);
      if (dir.norm() < 1e-3) dir(0) = 1.0;
      a.row(2 * n + e) = dir;
      b(2 * n + e) = dir.dot(x0) + rng.range(0.1, r);
    }

    Vector obj(n);
    for (int i = 0; i < n; ++i) obj(i) = rng.range(-1.0, 1.0);

    const auto res = solve_max(obj, HalfspaceSystem{a, b});
    REQUIRE(res.status == LpStatus::Optimal);

    // Certificate: residual within the feasibility tolerance, value consistent.
    const Vector residual = a * res.optimizer - b;
    CHECK(residual.maxCoeff() <= tol::kFeas * std::max(1.0, b.cwiseAbs().maxCoeff()));
    CHECK(res.value == doctest::Approx(obj.dot(res.optimizer)).epsilon(1e-9));

    const auto verts = oracle::enumerate_vertices(HPolytope(a, b));
    REQUIRE(!verts.empty());
    CHECK(res.value == doctest::Approx(oracle::vertex_support(verts, obj)).epsilon(1e-6));
  }
}
