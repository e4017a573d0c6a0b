#include "invarkit/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace invar {

void HalfspaceSystem::validate() const {
  if (normals.rows() != offsets.size()) {
    throw std::invalid_argument("halfspace system: row count of normals (" +
                                std::to_string(normals.rows()) + ") != length of offsets (" +
                                std::to_string(offsets.size()) + ")");
  }
  if (!normals.allFinite() || !offsets.allFinite()) {
    throw std::invalid_argument("halfspace system: non-finite entry");
  }
}

namespace {

// Dense tableau for max c.x s.t. A x <= b with free x, via the split
// x = xp - xm, slack per row and artificials for rows with negative rhs.
//
// Column layout: [xp (n) | xm (n) | slack (q) | artificial (na)].
class SimplexTableau {
 public:
  SimplexTableau(const Vector& c, const Matrix& a, const Vector& b, bool bland)
      : n_(c.size()), q_(a.rows()), bland_(bland) {
    // Row scaling only; the feasible set is unchanged.
    Vector scale(q_);
    for (Eigen::Index i = 0; i < q_; ++i) {
      const double nrm = a.row(i).norm();
      scale(i) = nrm > 1e-300 ? 1.0 / nrm : 1.0;
    }

    std::vector<Eigen::Index> art_rows;
    for (Eigen::Index i = 0; i < q_; ++i) {
      if (b(i) * scale(i) < 0.0) art_rows.push_back(i);
    }
    na_ = static_cast<Eigen::Index>(art_rows.size());
    ncols_ = 2 * n_ + q_ + na_;

    t_.setZero(q_, ncols_);
    rhs_.resize(q_);
    basis_.resize(q_);

    Eigen::Index art = 0;
    for (Eigen::Index i = 0; i < q_; ++i) {
      const double sgn = (b(i) * scale(i) < 0.0) ? -1.0 : 1.0;
      t_.row(i).segment(0, n_) = sgn * scale(i) * a.row(i);
      t_.row(i).segment(n_, n_) = -sgn * scale(i) * a.row(i);
      t_(i, 2 * n_ + i) = sgn;  // slack
      rhs_(i) = sgn * scale(i) * b(i);
      if (sgn < 0.0) {
        t_(i, 2 * n_ + q_ + art) = 1.0;
        basis_[i] = 2 * n_ + q_ + art;
        ++art;
      } else {
        basis_[i] = 2 * n_ + i;
      }
    }

    obj_.setZero(ncols_);
    obj_.segment(0, n_) = c;
    obj_.segment(n_, n_) = -c;
  }

  // Returns Optimal/Infeasible/Unbounded; fills x on Optimal.
  LpStatus run(Vector& x) {
    if (na_ > 0) {
      // Phase 1: maximize -(sum of artificials).
      Vector red = Vector::Zero(ncols_);
      double val = 0.0;
      for (Eigen::Index i = 0; i < q_; ++i) {
        if (basis_[i] >= 2 * n_ + q_) {
          red += t_.row(i);
          val -= rhs_(i);
        }
      }
      red.segment(2 * n_ + q_, na_).setZero();
      if (!iterate(red, val, /*phase1=*/true)) {
        throw SolverError("simplex: phase 1 unbounded (internal inconsistency)");
      }
      if (val < -tol::kFeas) return LpStatus::Infeasible;
      purge_artificials();
    }

    // Phase 2.
    Vector red = obj_;
    double val = 0.0;
    for (Eigen::Index i = 0; i < q_; ++i) {
      const double cb = obj_(basis_[i]);
      if (cb != 0.0) {
        red -= cb * t_.row(i).transpose();
        val += cb * rhs_(i);
      }
    }
    if (!iterate(red, val, /*phase1=*/false)) return LpStatus::Unbounded;

    x.setZero(n_);
    for (Eigen::Index i = 0; i < q_; ++i) {
      const Eigen::Index v = basis_[i];
      if (v < n_) {
        x(v) += rhs_(i);
      } else if (v < 2 * n_) {
        x(v - n_) -= rhs_(i);
      }
    }
    return LpStatus::Optimal;
  }

 private:
  // Price/pivot loop on the current reduced-cost row. Returns false on
  // unboundedness. `red` holds reduced costs of a maximization. Artificial
  // columns are never priced: once out of the basis they must not re-enter,
  // and pivot updates keep touching their reduced costs.
  bool iterate(Vector& red, double& val, bool phase1) {
    const long switch_at = bland_ ? 0 : 50 * (q_ + ncols_) + 200;
    const long hard_cap = 500000;
    const Eigen::Index price_cols = 2 * n_ + q_;
    for (long it = 0;; ++it) {
      if (it > hard_cap) throw SolverError("simplex: iteration cap exceeded");
      const bool bland = bland_ || it >= switch_at;

      Eigen::Index enter = -1;
      if (bland) {
        for (Eigen::Index j = 0; j < price_cols; ++j) {
          if (red(j) > tol::kOpt) {
            enter = j;
            break;
          }
        }
      } else {
        double best = tol::kOpt;
        for (Eigen::Index j = 0; j < price_cols; ++j) {
          if (red(j) > best) {
            best = red(j);
            enter = j;
          }
        }
      }
      if (enter < 0) return true;  // optimal

      Eigen::Index leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < q_; ++i) {
        const double piv = t_(i, enter);
        if (piv > tol::kPivot) {
          const double ratio = rhs_(i) / piv;
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 && better_tie(i, leave))) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) {
        if (phase1) return false;  // cannot happen: phase-1 objective is bounded
        return false;              // unbounded
      }
      pivot(leave, enter, red, val);
    }
  }

  // Tie-break for the ratio test: prefer rows whose basic variable is an
  // artificial (drives them out), then the smallest basic index (Bland-safe).
  bool better_tie(Eigen::Index cand, Eigen::Index cur) const {
    if (cur < 0) return true;
    const bool cand_art = basis_[cand] >= 2 * n_ + q_;
    const bool cur_art = basis_[cur] >= 2 * n_ + q_;
    if (cand_art != cur_art) return cand_art;
    return basis_[cand] < basis_[cur];
  }

  void pivot(Eigen::Index r, Eigen::Index c, Vector& red, double& val) {
    const double piv = t_(r, c);
    t_.row(r) /= piv;
    rhs_(r) /= piv;
    t_(r, c) = 1.0;  // exact
    for (Eigen::Index i = 0; i < q_; ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) {
        t_.row(i) -= f * t_.row(r);
        t_(i, c) = 0.0;
        rhs_(i) -= f * rhs_(r);
        if (rhs_(i) < 0.0 && rhs_(i) > -1e-11) rhs_(i) = 0.0;
      }
    }
    const double f = red(c);
    if (f != 0.0) {
      red -= f * t_.row(r).transpose();
      red(c) = 0.0;
      val += f * rhs_(r);
    }
    basis_[r] = c;
  }

  // After phase 1, pivot basic artificials (all at value ~0) out of the basis
  // where possible; rows where no structural pivot exists are redundant and
  // stay inert.
  void purge_artificials() {
    for (Eigen::Index i = 0; i < q_; ++i) {
      if (basis_[i] < 2 * n_ + q_) continue;
      Eigen::Index c = -1;
      double best = 1e-7;
      for (Eigen::Index j = 0; j < 2 * n_ + q_; ++j) {
        if (std::abs(t_(i, j)) > best) {
          best = std::abs(t_(i, j));
          c = j;
        }
      }
      if (c >= 0) {
        Vector dummy_red = Vector::Zero(ncols_);
        double dummy_val = 0.0;
        pivot(i, c, dummy_red, dummy_val);
      }
    }
  }

  Eigen::Index n_, q_, na_ = 0, ncols_ = 0;
  bool bland_;
  Matrix t_;
  Vector rhs_;
  Vector obj_;
  std::vector<Eigen::Index> basis_;
};

double residual(const Vector& x, const Matrix& a, const Vector& b) {
  if (a.rows() == 0) return 0.0;
  return (a * x - b).maxCoeff();
}

}  // namespace

LpResult solve_max(const Vector& objective, const HalfspaceSystem& constraints) {
  constraints.validate();
  if (objective.size() != constraints.cols()) {
    throw std::invalid_argument("solve_max: objective length " + std::to_string(objective.size()) +
                                " != constraint column count " + std::to_string(constraints.cols()));
  }
  if (!objective.allFinite()) throw std::invalid_argument("solve_max: non-finite objective");

  const Matrix& a = constraints.normals;
  const Vector& b = constraints.offsets;

  // Zero-dimensional corner: feasibility is just sign of the offsets.
  if (constraints.cols() == 0) {
    LpResult r;
    if (constraints.rows() == 0 || b.minCoeff() >= -tol::kFeas) {
      r.status = LpStatus::Optimal;
      r.optimizer = Vector(0);
      r.value = 0.0;
    }
    return r;
  }

  // Residual acceptance scale: absolute for well-scaled data, relative guard
  // for large coefficients.
  auto scale_for = [&](const Vector& x) {
    double s = 1.0;
    if (b.size() > 0) s = std::max(s, b.cwiseAbs().maxCoeff());
    if (x.size() > 0 && a.rows() > 0) {
      s = std::max(s, a.cwiseAbs().maxCoeff() * std::max(1.0, x.cwiseAbs().maxCoeff()));
    }
    return s;
  };

  for (int attempt = 0; attempt < 2; ++attempt) {
    SimplexTableau tab(objective, a, b, /*bland=*/attempt == 1);
    Vector x;
    const LpStatus st = tab.run(x);
    if (st != LpStatus::Optimal) {
      LpResult r;
      r.status = st;
      return r;
    }
    if (residual(x, a, b) <= tol::kFeas * scale_for(x)) {
      LpResult r;
      r.status = LpStatus::Optimal;
      r.optimizer = std::move(x);
      r.value = objective.dot(r.optimizer);
      return r;
    }
  }
  throw SolverError("solve_max: optimal certificate failed after restart");
}

}  // namespace invar
