#pragma once

#include <vector>

#include "trajent/types.hpp"

namespace trajent {

/// Dense two-phase simplex method for the small linear programs arising in
/// alpha-vector domination tests (a handful of variables, tens of
/// constraints). Bland's rule throughout, so cycling cannot occur.
///
/// Solves: maximise c'x subject to A x (<=|=|>=) b, x >= 0.
enum class LpConstraint { LessEqual, Equal, GreaterEqual };

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  Vector solution;  // primal x, defined when status == Optimal
  // Constraint multipliers y with c - y'A equal to the reduced costs at the
  // optimum. Empty when a redundant row had to be dropped during phase 1.
  Vector duals;
  // For an unbounded problem, a feasible ray: x + t * ray stays feasible with
  // c'ray > 0 for all t >= 0.
  Vector ray;
};

LpResult solve_lp(const Vector& objective, const Matrix& constraints, const Vector& rhs,
                  const std::vector<LpConstraint>& kinds, double tol = 1e-9,
                  int max_iterations = 10000);

}  // namespace trajent
