#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "trajent/costs.hpp"
#include "trajent/types.hpp"

namespace trajent {

/// One hyperplane of a piecewise-linear cost surface, tagged with the
/// control that generated it (-1 for terminal-stage vectors) and, as a
/// diagnostic, the index of the base point it was taken at (-1 once vectors
/// have been combined by backups).
struct AlphaVector {
  Vector weights;
  int action = -1;
  int base_index = -1;
};

/// Pointwise minimum of finitely many hyperplanes over the simplex: the
/// representation of concave costs and cost-to-go functions the solver
/// operates on.
struct PwlcFunction {
  std::vector<AlphaVector> vectors;

  double value(const Belief& belief) const;
  /// Index of a minimising vector; the first one in stored order on ties.
  int argmin(const Belief& belief) const;
  bool empty() const { return vectors.empty(); }
  int size() const { return static_cast<int>(vectors.size()); }
};

/// Interior beliefs at which tangent hyperplanes are taken.
enum class BaseScheme {
  Paper,   // simplex centre plus one near-vertex point per state
  Lattice  // all compositions of `resolution`, pulled to the interior
};

std::string to_string(BaseScheme scheme);
BaseScheme base_scheme_from_string(const std::string& name);

struct BasePointSet {
  std::vector<Belief> points;
  BaseScheme scheme = BaseScheme::Paper;
  int resolution = 0;        // lattice granularity, 0 for the paper scheme
  double sparsity_estimate = 0.0;  // empirical max-min l1 distance, see below
};

/// Builds the base-point set and estimates its sparsity as the maximum over
/// a quasi-random simplex sample of the l1 distance to the nearest base
/// point (an estimate; the exact sparsity is not computed). Lattice
/// resolution must be >= 1.
BasePointSet generate_base_points(int num_states, BaseScheme scheme, int resolution = 0,
                                  int sparsity_samples = 100000);

/// Tangent-hyperplane PWLC upper bound of a concave cost: one alpha vector
/// per base point, arranged so <pi, alpha> = f(xi) + <pi - xi, grad f(xi)>.
/// Throws StructureError when a gradient is non-finite (boundary base point).
PwlcFunction build_pwlc_cost(const std::function<StageCostEvaluation(const Belief&)>& cost,
                             const BasePointSet& base_points, int action_tag);

/// Minkowski sum of two alpha-vector sets (every pairwise weight sum); the
/// action tag of the left operand is kept.
std::vector<AlphaVector> cross_sum(const std::vector<AlphaVector>& a,
                                   const std::vector<AlphaVector>& b);

/// Removes vectors that do not affect the pointwise minimum: exact
/// duplicates, componentwise-dominated vectors, and (unless lp_pruning is
/// off) vectors for which a witness linear program finds no belief where
/// they are strictly lowest by more than tol. An LP that fails numerically
/// retains its candidate.
std::vector<AlphaVector> prune(std::vector<AlphaVector> vectors, double tol = 1e-9,
                               bool lp_pruning = true);

/// Belief where `candidate` is below every vector in `others` by more than
/// tol, if one exists. Exposed for tests.
std::optional<Belief> find_witness(const AlphaVector& candidate,
                                   const std::vector<AlphaVector>& others, double tol = 1e-9);

}  // namespace trajent
