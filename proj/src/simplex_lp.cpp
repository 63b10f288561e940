#include "trajent/simplex_lp.hpp"

#include <vector>

namespace trajent {

namespace {

// Full-tableau simplex state. Columns: decision variables first, then
// slack/surplus, then artificials. The reduced-cost row is maintained
// incrementally and rebuilt when the objective changes between phases.
struct Tableau {
  Matrix body;             // m x total
  Vector rhs;              // m, kept nonnegative
  Vector reduced;          // total, c_j - y'A_j
  double objective = 0.0;  // c_B' x_B
  std::vector<int> basis;  // basic column per row
  int total = 0;

  void rebuild_reduced(const Vector& cost) {
    const int m = static_cast<int>(basis.size());
    reduced = cost;
    objective = 0.0;
    for (int i = 0; i < m; ++i) {
      const double cb = cost(basis[i]);
      if (cb != 0.0) {
        reduced -= cb * body.row(i).transpose();
        objective += cb * rhs(i);
      }
    }
  }

  void pivot(int row, int col) {
    const double p = body(row, col);
    body.row(row) /= p;
    rhs(row) /= p;
    const int m = static_cast<int>(basis.size());
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      const double f = body(i, col);
      if (f != 0.0) {
        body.row(i) -= f * body.row(row);
        rhs(i) -= f * rhs(row);
      }
    }
    const double fr = reduced(col);
    if (fr != 0.0) {
      reduced -= fr * body.row(row).transpose();
      objective += fr * rhs(row);
    }
    basis[row] = col;
  }
};

enum class IterateOutcome { Optimal, Unbounded, IterationLimit };

// Maximisation with Bland's rule: entering = lowest-index column with a
// positive reduced cost, leaving = lowest basic index among ratio ties.
IterateOutcome iterate(Tableau& t, const std::vector<bool>& barred, double tol,
                       int& iterations_left, int* unbounded_column = nullptr) {
  const int m = static_cast<int>(t.basis.size());
  while (iterations_left-- > 0) {
    int entering = -1;
    for (int j = 0; j < t.total; ++j) {
      if (!barred[j] && t.reduced(j) > tol) {
        entering = j;
        break;
      }
    }
    if (entering < 0) return IterateOutcome::Optimal;

    int leaving = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      const double coef = t.body(i, entering);
      if (coef > tol) {
        const double ratio = t.rhs(i) / coef;
        if (leaving < 0 || ratio < best_ratio - tol ||
            (ratio < best_ratio + tol && t.basis[i] < t.basis[leaving])) {
          leaving = i;
          best_ratio = ratio;
        }
      }
    }
    if (leaving < 0) {
      if (unbounded_column != nullptr) *unbounded_column = entering;
      return IterateOutcome::Unbounded;
    }
    t.pivot(leaving, entering);
  }
  return IterateOutcome::IterationLimit;
}

}  // namespace

LpResult solve_lp(const Vector& objective, const Matrix& constraints, const Vector& rhs_in,
                  const std::vector<LpConstraint>& kinds, double tol, int max_iterations) {
  const int n = static_cast<int>(objective.size());
  int m = static_cast<int>(constraints.rows());

  Matrix a = constraints;
  Vector rhs = rhs_in;
  std::vector<LpConstraint> kind = kinds;
  std::vector<double> row_sign(m, 1.0);
  for (int i = 0; i < m; ++i) {
    if (rhs(i) < 0.0) {
      a.row(i) *= -1.0;
      rhs(i) *= -1.0;
      row_sign[i] = -1.0;
      if (kind[i] == LpConstraint::LessEqual) kind[i] = LpConstraint::GreaterEqual;
      else if (kind[i] == LpConstraint::GreaterEqual) kind[i] = LpConstraint::LessEqual;
    }
  }

  std::vector<int> slack_col(m, -1), art_col(m, -1);
  int next = n;
  for (int i = 0; i < m; ++i) {
    if (kind[i] != LpConstraint::Equal) slack_col[i] = next++;
  }
  for (int i = 0; i < m; ++i) {
    if (kind[i] != LpConstraint::LessEqual) art_col[i] = next++;
  }
  const int total = next;
  const int first_artificial = total - [&] {
    int count = 0;
    for (int i = 0; i < m; ++i) count += art_col[i] >= 0 ? 1 : 0;
    return count;
  }();

  Tableau t;
  t.total = total;
  t.body = Matrix::Zero(m, total);
  t.body.leftCols(n) = a;
  t.rhs = rhs;
  t.basis.resize(m);
  for (int i = 0; i < m; ++i) {
    if (slack_col[i] >= 0)
      t.body(i, slack_col[i]) = kind[i] == LpConstraint::LessEqual ? 1.0 : -1.0;
    if (art_col[i] >= 0) t.body(i, art_col[i]) = 1.0;
    t.basis[i] = art_col[i] >= 0 ? art_col[i] : slack_col[i];
  }

  std::vector<bool> barred(total, false);
  int iterations_left = max_iterations;
  bool rows_dropped = false;
  LpResult result;

  if (first_artificial < total) {
    Vector phase1 = Vector::Zero(total);
    for (int i = 0; i < m; ++i) {
      if (art_col[i] >= 0) phase1(art_col[i]) = -1.0;
    }
    t.rebuild_reduced(phase1);
    const IterateOutcome outcome = iterate(t, barred, tol, iterations_left);
    if (outcome == IterateOutcome::IterationLimit) {
      result.status = LpStatus::IterationLimit;
      return result;
    }
    if (t.objective < -tol) {
      result.status = LpStatus::Infeasible;
      return result;
    }
    // Drive leftover (degenerate) artificials out of the basis; a row with
    // no structural entry left is redundant and dropped.
    for (int i = m - 1; i >= 0; --i) {
      if (t.basis[i] < first_artificial) continue;
      int pivot_col = -1;
      for (int j = 0; j < first_artificial; ++j) {
        if (std::abs(t.body(i, j)) > tol) {
          pivot_col = j;
          break;
        }
      }
      if (pivot_col >= 0) {
        t.pivot(i, pivot_col);
      } else {
        const int rows = static_cast<int>(t.basis.size());
        Matrix body(rows - 1, total);
        Vector r(rows - 1);
        for (int k = 0, dst = 0; k < rows; ++k) {
          if (k == i) continue;
          body.row(dst) = t.body.row(k);
          r(dst) = t.rhs(k);
          ++dst;
        }
        t.body = std::move(body);
        t.rhs = std::move(r);
        t.basis.erase(t.basis.begin() + i);
        rows_dropped = true;
      }
    }
    for (int j = first_artificial; j < total; ++j) barred[j] = true;
  }

  Vector phase2 = Vector::Zero(total);
  phase2.head(n) = objective;
  t.rebuild_reduced(phase2);
  int unbounded_column = -1;
  const IterateOutcome outcome = iterate(t, barred, tol, iterations_left, &unbounded_column);
  if (outcome == IterateOutcome::IterationLimit) {
    result.status = LpStatus::IterationLimit;
    return result;
  }
  if (outcome == IterateOutcome::Unbounded) {
    result.status = LpStatus::Unbounded;
    result.ray = Vector::Zero(n);
    if (unbounded_column < n) result.ray(unbounded_column) = 1.0;
    for (std::size_t i = 0; i < t.basis.size(); ++i) {
      if (t.basis[i] < n) result.ray(t.basis[i]) = -t.body(static_cast<int>(i), unbounded_column);
    }
    return result;
  }

  result.status = LpStatus::Optimal;
  result.objective = t.objective;
  result.solution = Vector::Zero(n);
  for (std::size_t i = 0; i < t.basis.size(); ++i) {
    if (t.basis[i] < n) result.solution(t.basis[i]) = t.rhs(static_cast<int>(i));
  }
  if (!rows_dropped) {
    // y'A_j = c_j - reduced_j read off the identity columns each row started
    // with, mapped back through the row sign normalisation.
    result.duals = Vector::Zero(m);
    for (int i = 0; i < m; ++i) {
      double y;
      if (art_col[i] >= 0) {
        y = -t.reduced(art_col[i]);
      } else {
        y = kind[i] == LpConstraint::LessEqual ? -t.reduced(slack_col[i])
                                               : t.reduced(slack_col[i]);
      }
      result.duals(i) = row_sign[i] * y;
    }
  }
  return result;
}

}  // namespace trajent
