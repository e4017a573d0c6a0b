#include "invarkit/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace invar {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix stack_rows(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

Vector stack(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}
}  // namespace

HPolytope::HPolytope(Matrix a, Vector b) : sys(std::move(a), std::move(b)) {
  sys.validate();
  dim = static_cast<int>(sys.cols());
}

HPolytope HPolytope::whole_space(int dim) {
  HPolytope p;
  p.sys = HalfspaceSystem(Matrix(0, dim), Vector(0));
  p.dim = dim;
  return p;
}

HPolytope HPolytope::empty_set(int dim) {
  if (dim == 0) {
    HPolytope p;
    p.sys = HalfspaceSystem(Matrix(1, 0), Vector::Constant(1, -1.0));
    return p;
  }
  Matrix a = Matrix::Zero(2, dim);
  a(0, 0) = 1.0;
  a(1, 0) = -1.0;
  Vector b(2);
  b << -1.0, 0.0;  // x1 <= -1 and x1 >= 0
  return HPolytope(std::move(a), std::move(b));
}

HPolytope HPolytope::box(const Vector& lower, const Vector& upper) {
  if (lower.size() != upper.size()) throw std::invalid_argument("box: bound length mismatch");
  const auto n = lower.size();
  Matrix a = Matrix::Zero(2 * n, n);
  Vector b(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(2 * i, i) = 1.0;
    b(2 * i) = upper(i);
    a(2 * i + 1, i) = -1.0;
    b(2 * i + 1) = -lower(i);
  }
  return HPolytope(std::move(a), std::move(b));
}

bool is_empty(const HPolytope& p) {
  if (p.dim == 0) return p.rows() > 0 && p.b().minCoeff() < -tol::kFeas;
  if (p.rows() == 0) return false;
  return solve_max(Vector::Zero(p.dim), p.sys).status == LpStatus::Infeasible;
}

double support(const HPolytope& p, const Vector& direction) {
  if (direction.size() != p.dim) throw std::invalid_argument("support: direction dimension mismatch");
  if (p.dim == 0) {
    if (is_empty(p)) throw std::domain_error("support: empty polytope");
    return 0.0;
  }
  const LpResult r = solve_max(direction, p.sys);
  switch (r.status) {
    case LpStatus::Optimal:
      return r.value;
    case LpStatus::Unbounded:
      return kInf;
    default:
      throw std::domain_error("support: empty polytope");
  }
}

HPolytope intersect(const HPolytope& p, const HPolytope& r, bool canonicalize) {
  if (p.dim != r.dim) throw std::invalid_argument("intersect: dimension mismatch");
  HPolytope out(stack_rows(p.A(), r.A()), stack(p.b(), r.b()));
  return canonicalize ? remove_redundancy(out) : out;
}

HPolytope pontryagin_diff_mapped(const HPolytope& p, const std::vector<MappedSet>& terms) {
  for (const auto& t : terms) {
    if (t.map.rows() != p.dim) throw std::invalid_argument("pontryagin: map row count != polytope dim");
    if (t.map.cols() != t.set.dim) throw std::invalid_argument("pontryagin: map column count != set dim");
    if (is_empty(t.set)) throw std::domain_error("pontryagin: empty summand");
  }
  if (terms.empty() || p.rows() == 0) return p;

  Matrix a = p.A();
  Vector b = p.b();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double shift = 0.0;
    for (const auto& t : terms) {
      const double h = support(t.set, t.map.transpose() * a.row(i).transpose());
      if (!std::isfinite(h)) throw std::domain_error("pontryagin: unbounded summand along a facet normal");
      shift += h;
    }
    b(i) -= shift;
  }
  return HPolytope(std::move(a), std::move(b));
}

HPolytope preimage(const HPolytope& p, const Matrix& m, const Vector& c) {
  if (m.rows() != p.dim || c.size() != p.dim) {
    throw std::invalid_argument("preimage: map/offset dimension mismatch");
  }
  return HPolytope(p.A() * m, p.b() - p.A() * c);
}

HPolytope preimage(const HPolytope& p, const Matrix& m) {
  return preimage(p, m, Vector::Zero(p.dim));
}

HPolytope normalize_rows(const HPolytope& p) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double nrm = p.A().row(i).norm();
    if (nrm <= 1e-300) {
      if (p.b()(i) < -tol::kFeas) return HPolytope::empty_set(p.dim);
      continue;  // trivially true
    }
    keep.push_back(i);
  }
  Matrix a(static_cast<Eigen::Index>(keep.size()), p.dim);
  Vector b(static_cast<Eigen::Index>(keep.size()));
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    const double nrm = p.A().row(keep[k]).norm();
    a.row(k) = p.A().row(keep[k]) / nrm;
    b(k) = p.b()(keep[k]) / nrm;
  }
  HPolytope out;
  out.sys = HalfspaceSystem(std::move(a), std::move(b));
  out.dim = p.dim;
  return out;
}

namespace {

// Unit-normalized rows sorted lexicographically, parallel duplicates
// collapsed to the tightest offset.
HPolytope dedupe_rows(const HPolytope& p) {
  const Eigen::Index q = p.rows();
  if (q <= 1) return p;
  std::vector<Eigen::Index> order(q);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    for (Eigen::Index k = 0; k < p.dim; ++k) {
      if (p.A()(i, k) != p.A()(j, k)) return p.A()(i, k) < p.A()(j, k);
    }
    return p.b()(i) < p.b()(j);
  });
  // Rows whose normals agree to 1e-12 collapse into one constraint. The sort
  // only orders exact ties by offset, so the tightest offset of a cluster is
  // tracked explicitly rather than assumed to arrive first.
  std::vector<Eigen::Index> keep;
  std::vector<double> off;
  for (Eigen::Index t = 0; t < q; ++t) {
    const Eigen::Index i = order[t];
    if (!keep.empty() &&
        (p.A().row(i) - p.A().row(keep.back())).cwiseAbs().maxCoeff() <= 1e-12) {
      off.back() = std::min(off.back(), p.b()(i));
      continue;
    }
    keep.push_back(i);
    off.push_back(p.b()(i));
  }
  Matrix a(static_cast<Eigen::Index>(keep.size()), p.dim);
  Vector b(static_cast<Eigen::Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    a.row(static_cast<Eigen::Index>(k)) = p.A().row(keep[k]);
    b(static_cast<Eigen::Index>(k)) = off[k];
  }
  HPolytope out;
  out.sys = HalfspaceSystem(std::move(a), std::move(b));
  out.dim = p.dim;
  return out;
}

}  // namespace

HPolytope remove_redundancy(const HPolytope& p) {
  if (p.dim == 0) {
    const bool bad = p.rows() > 0 && p.b().minCoeff() < -tol::kFeas;
    return bad ? HPolytope::empty_set(0) : HPolytope::whole_space(0);
  }
  HPolytope cur = dedupe_rows(normalize_rows(p));
  if (cur.rows() == 0) return cur;
  if (is_empty(cur)) return HPolytope::empty_set(p.dim);

  std::vector<bool> active(static_cast<size_t>(cur.rows()), true);
  Eigen::Index n_active = cur.rows();
  for (Eigen::Index i = 0; i < cur.rows(); ++i) {
    if (n_active == 1) break;  // a single row is never redundant in a nonempty system
    // Maximize row i subject to the other active rows, capped at b_i + 1 so
    // the subproblem stays bounded.
    Matrix a(n_active, cur.dim);
    Vector b(n_active);
    Eigen::Index w = 0;
    for (Eigen::Index j = 0; j < cur.rows(); ++j) {
      if (!active[static_cast<size_t>(j)] || j == i) continue;
      a.row(w) = cur.A().row(j);
      b(w) = cur.b()(j);
      ++w;
    }
    a.row(w) = cur.A().row(i);
    b(w) = cur.b()(i) + 1.0;
    const LpResult r = solve_max(cur.A().row(i).transpose(), HalfspaceSystem(std::move(a), std::move(b)));
    if (r.status == LpStatus::Optimal && r.value <= cur.b()(i) + tol::kRedundancy) {
      active[static_cast<size_t>(i)] = false;
      --n_active;
    }
  }

  Matrix a(n_active, cur.dim);
  Vector b(n_active);
  Eigen::Index w = 0;
  for (Eigen::Index j = 0; j < cur.rows(); ++j) {
    if (!active[static_cast<size_t>(j)]) continue;
    a.row(w) = cur.A().row(j);
    b(w) = cur.b()(j);
    ++w;
  }
  HPolytope out;
  out.sys = HalfspaceSystem(std::move(a), std::move(b));
  out.dim = p.dim;
  return out;
}

namespace {

// One Fourier-Motzkin step: eliminate column `col` and remove it.
HPolytope fm_step(const HPolytope& p, Eigen::Index col) {
  std::vector<Eigen::Index> pos, neg, zer;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double c = p.A()(i, col);
    if (c > tol::kZeroCoeff) {
      pos.push_back(i);
    } else if (c < -tol::kZeroCoeff) {
      neg.push_back(i);
    } else {
      zer.push_back(i);
    }
  }
  const Eigen::Index out_rows = static_cast<Eigen::Index>(zer.size() + pos.size() * neg.size());
  Matrix a(out_rows, p.dim - 1);
  Vector b(out_rows);

  auto drop_col = [&](const Eigen::RowVectorXd& row) {
    Eigen::RowVectorXd out(p.dim - 1);
    out << row.head(col), row.tail(p.dim - 1 - col);
    return out;
  };

  Eigen::Index w = 0;
  for (const Eigen::Index i : zer) {
    a.row(w) = drop_col(p.A().row(i));
    b(w) = p.b()(i);
    ++w;
  }
  for (const Eigen::Index i : pos) {
    const double ci = p.A()(i, col);
    const Eigen::RowVectorXd ri = p.A().row(i) / ci;
    const double bi = p.b()(i) / ci;
    for (const Eigen::Index j : neg) {
      const double cj = -p.A()(j, col);
      a.row(w) = drop_col(ri + p.A().row(j) / cj);
      b(w) = bi + p.b()(j) / cj;
      ++w;
    }
  }
  HPolytope out;
  out.sys = HalfspaceSystem(std::move(a), std::move(b));
  out.dim = p.dim - 1;
  return out;
}

}  // namespace

HPolytope eliminate(const HPolytope& p, std::vector<int> drop) {
  std::sort(drop.begin(), drop.end());
  drop.erase(std::unique(drop.begin(), drop.end()), drop.end());
  for (const int d : drop) {
    if (d < 0 || d >= p.dim) throw std::invalid_argument("eliminate: index out of range");
  }
  HPolytope cur = normalize_rows(p);
  cur = dedupe_rows(cur);
  while (!drop.empty()) {
    // Pick the pending variable with the smallest pos*neg row product.
    size_t best_k = 0;
    long best_score = std::numeric_limits<long>::max();
    for (size_t k = 0; k < drop.size(); ++k) {
      long np = 0, nn = 0;
      for (Eigen::Index i = 0; i < cur.rows(); ++i) {
        const double c = cur.A()(i, drop[k]);
        if (c > tol::kZeroCoeff) ++np;
        else if (c < -tol::kZeroCoeff) ++nn;
      }
      const long score = np * nn;
      if (score < best_score) {
        best_score = score;
        best_k = k;
      }
    }
    const int col = drop[best_k];
    // Projection of an empty set stays empty: remove_redundancy collapses it
    // to the canonical marker, which keeps the remaining steps trivial.
    cur = remove_redundancy(fm_step(cur, col));
    drop.erase(drop.begin() + static_cast<std::ptrdiff_t>(best_k));
    for (int& d : drop) {
      if (d > col) --d;
    }
  }
  return cur;
}

bool contains_point(const HPolytope& p, const Vector& x, double tol) {
  if (x.size() != p.dim) throw std::invalid_argument("contains_point: dimension mismatch");
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double nrm = p.A().row(i).norm();
    if (nrm <= 1e-300) {
      if (p.b()(i) < -tol) return false;
      continue;
    }
    if (p.A().row(i).dot(x) > p.b()(i) + tol * nrm) return false;
  }
  return true;
}

bool contains_set(const HPolytope& p, const HPolytope& r, double tol) {
  if (p.dim != r.dim) throw std::invalid_argument("contains_set: dimension mismatch");
  if (is_empty(r)) return true;
  if (p.dim == 0) return p.rows() == 0 || p.b().minCoeff() >= -tol;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double nrm = p.A().row(i).norm();
    if (nrm <= 1e-300) {
      if (p.b()(i) < -tol) return false;
      continue;
    }
    const double h = support(r, p.A().row(i).transpose() / nrm);
    if (h > p.b()(i) / nrm + tol) return false;
  }
  return true;
}

bool set_equal(const HPolytope& p, const HPolytope& r, double tol) {
  return contains_set(p, r, tol) && contains_set(r, p, tol);
}

std::pair<Vector, double> chebyshev_center(const HPolytope& p) {
  constexpr double kRadiusCap = 1e9;
  if (p.dim == 0) {
    const bool bad = p.rows() > 0 && p.b().minCoeff() < -tol::kFeas;
    return {Vector(0), bad ? -kInf : 0.0};
  }
  // max r  s.t.  a_i.x + |a_i| r <= b_i,  r <= cap
  Matrix a(p.rows() + 1, p.dim + 1);
  Vector b(p.rows() + 1);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    a.row(i).head(p.dim) = p.A().row(i);
    a(i, p.dim) = p.A().row(i).norm();
    b(i) = p.b()(i);
  }
  a.row(p.rows()).setZero();
  a(p.rows(), p.dim) = 1.0;
  b(p.rows()) = kRadiusCap;

  Vector c = Vector::Zero(p.dim + 1);
  c(p.dim) = 1.0;
  const LpResult r = solve_max(c, HalfspaceSystem(std::move(a), std::move(b)));
  if (r.status != LpStatus::Optimal) return {Vector::Zero(p.dim), -kInf};
  return {r.optimizer.head(p.dim), r.value};
}

HPolytope slice(const HPolytope& p, const std::vector<std::pair<int, double>>& fixed) {
  std::vector<bool> is_fixed(static_cast<size_t>(p.dim), false);
  Vector fix_val = Vector::Zero(p.dim);
  for (const auto& [idx, val] : fixed) {
    if (idx < 0 || idx >= p.dim) throw std::invalid_argument("slice: index out of range");
    if (is_fixed[static_cast<size_t>(idx)]) throw std::invalid_argument("slice: duplicate index");
    is_fixed[static_cast<size_t>(idx)] = true;
    fix_val(idx) = val;
  }
  std::vector<int> free_idx;
  for (int i = 0; i < p.dim; ++i) {
    if (!is_fixed[static_cast<size_t>(i)]) free_idx.push_back(i);
  }
  Matrix a(p.rows(), static_cast<Eigen::Index>(free_idx.size()));
  for (size_t k = 0; k < free_idx.size(); ++k) a.col(static_cast<Eigen::Index>(k)) = p.A().col(free_idx[k]);
  Vector b = p.b() - p.A() * fix_val;
  HPolytope out;
  out.sys = HalfspaceSystem(std::move(a), std::move(b));
  out.dim = static_cast<int>(free_idx.size());
  return out;
}

std::pair<Vector, Vector> bounding_box(const HPolytope& p) {
  Vector lo(p.dim), hi(p.dim);
  for (int i = 0; i < p.dim; ++i) {
    Vector d = Vector::Zero(p.dim);
    d(i) = 1.0;
    hi(i) = support(p, d);
    d(i) = -1.0;
    lo(i) = -support(p, d);
  }
  return {lo, hi};
}

}  // namespace invar
