#pragma once

#include <map>
#include <string>

#include "trajent/pomdp.hpp"
#include "trajent/types.hpp"

namespace trajent {

/// Planning objective. The first six have concave stage costs in the belief
/// and can be handed to the PWLC solver; the two *ConvexForm objectives are
/// the algebraically equivalent convex-cost formulations, kept evaluable for
/// structure checks but rejected by the solver.
enum class Objective {
  ActiveEstimation,      // minimise trajectory-posterior entropy + costs
  ActiveObfuscation,     // maximise trajectory-posterior entropy, minimise costs
  StandardPomdp,         // operational costs only
  MinDirectedInfo,       // minimise information leaked by measurements + costs
  MinMarginalEntropy,    // minimise sum of per-stage belief entropies + costs
  MinTerminalEntropy,    // minimise final belief entropy + costs
  EstimationConvexForm,  // filter-form estimation cost (convex); checks only
  ObfuscationConvexForm  // backward-form obfuscation cost (convex); checks only
};

bool is_concave_objective(Objective objective);
std::string to_string(Objective objective);
Objective objective_from_string(const std::string& name);

/// Operational cost tables plus the objective selector. stage_cost is
/// time-invariant unless an override for a specific stage is present.
struct CostModel {
  Matrix stage_cost;                      // N x |U|, entry (x, u) = c(x, u)
  std::map<int, Matrix> stage_overrides;  // optional per-stage replacement
  Vector terminal_cost;                   // length N
  Objective objective = Objective::StandardPomdp;
  double lambda = 1.0;  // trade-off coefficient on operational costs

  const Matrix& stage_table(int stage) const;
  void validate(const PomdpModel& model) const;
};

CostModel load_cost_model(const std::string& path, const PomdpModel& model);
CostModel parse_cost_model(const std::string& json_text, const PomdpModel& model);
void save_cost_model(const CostModel& cost, const std::string& path);

// --- Belief-state entropy functionals ----------------------------------------
// All entropies are in nats with the 0 log 0 = 0 convention.

/// Entropy of the belief itself.
double belief_entropy(const Belief& belief);

/// Entropy of the one-step-ahead state distribution A(u) * belief.
double predicted_entropy(const PomdpModel& model, const Belief& belief, int u);

/// Expected entropy of the forward transition kernel under the belief,
/// i.e. the conditional entropy of the next state given the current one.
double transition_entropy(const PomdpModel& model, const Belief& belief, int u);

/// Conditional entropy of the current state given the next state and the
/// measurement history: the backward-kernel entropy weighted by the
/// predicted distribution of the next state.
double backward_transition_entropy(const PomdpModel& model, const Belief& belief, int u);

/// Expected entropy of the updated belief over the next measurement.
double expected_update_entropy(const PomdpModel& model, const Belief& belief, int u);

/// Per-measurement increment of the trajectory-posterior entropy in filter
/// form: entropy(updated belief) - predicted_entropy + transition_entropy.
/// Throws ImpossibleMeasurement for unreachable y.
double filter_entropy_increment(const PomdpModel& model, const Belief& belief, int u, int y);

// --- Stage costs --------------------------------------------------------------

/// Value and gradient (with respect to the belief, on the simplex interior)
/// of a stage or terminal cost.
struct StageCostEvaluation {
  double value = 0.0;
  Vector gradient;
};

/// Dispatches the per-objective stage cost for 1 <= stage < horizon.
StageCostEvaluation stage_cost(const PomdpModel& model, const CostModel& cost, int stage,
                               const Belief& belief, int u);

/// Terminal cost at stage T.
StageCostEvaluation terminal_cost(const PomdpModel& model, const CostModel& cost,
                                  const Belief& belief);

/// Convex-form stage costs (filter-form estimation, backward-form
/// obfuscation). Exercised by structure checks; not solvable by the PWLC
/// machinery.
double estimation_convex_cost(const PomdpModel& model, const CostModel& cost, int stage,
                              const Belief& belief, int u);
double obfuscation_convex_cost(const PomdpModel& model, const CostModel& cost, int stage,
                               const Belief& belief, int u);

}  // namespace trajent
