#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trajent/errors.hpp"
#include "trajent/types.hpp"

namespace trajent {

/// Finite controlled hidden Markov model.
///
/// Kernel orientation: transition[u] is column-stochastic with entry (i, j)
/// the probability of moving to state i from state j under control u;
/// observation[u] is row-stochastic with entry (i, y) the probability of
/// measurement y in state i after control u. initial_observation covers the
/// first measurement, before any control has been applied; when a model file
/// omits it, the kernel of control 0 is used (the built-in benchmarks have
/// control-invariant observations, so the choice is inert there).
struct PomdpModel {
  int num_states = 0;
  std::vector<std::string> control_names;
  std::vector<std::string> measurement_names;
  std::vector<Matrix> transition;   // per control, N x N, columns sum to 1
  std::vector<Matrix> observation;  // per control, N x |Y|, rows sum to 1
  Matrix initial_observation;       // N x |Y|
  Vector initial_distribution;      // length N
  int horizon = 0;                  // number of stages T >= 1

  int num_controls() const { return static_cast<int>(transition.size()); }
  int num_measurements() const {
    return observation.empty() ? 0 : static_cast<int>(observation.front().cols());
  }

  /// Throws ValidationError unless all kernels are stochastic within tol,
  /// entries lie in [0,1], shapes are consistent, and horizon >= 1.
  void validate(double tol = 1e-9) const;

  /// Rescales kernels and the initial distribution so stochasticity holds to
  /// machine precision. Call after loading data that passed validate().
  void renormalise();
};

/// Parses, validates (tolerance 1e-9) and renormalises a model from a JSON
/// document. Throws ValidationError on malformed or non-stochastic input.
PomdpModel load_model(const std::string& path);
PomdpModel parse_model(const std::string& json_text);
void save_model(const PomdpModel& model, const std::string& path);

// --- Bayesian filtering -----------------------------------------------------

/// Posterior over the first state given the first measurement.
Belief initial_belief(const PomdpModel& model, int y1);

/// Matrix with entry (i, j) = p(next = i, current = j | belief, u).
Matrix joint_predicted_belief(const PomdpModel& model, const Belief& belief, int u);

/// One-step-ahead state distribution A(u) * belief.
Belief predicted_belief(const PomdpModel& model, const Belief& belief, int u);

/// Bayes update of the belief with control u and measurement y. Throws
/// ImpossibleMeasurement when the measurement probability is below 1e-300.
Belief filter_update(const PomdpModel& model, const Belief& belief, int u, int y);

/// Distribution of the next measurement given belief and control.
Vector observation_likelihood(const PomdpModel& model, const Belief& belief, int u);

// --- Simulation --------------------------------------------------------------

/// One sampled rollout: states and measurements for stages 1..T, controls
/// for 1..T-1, and the filter beliefs alongside.
struct TrajectoryRecord {
  std::vector<int> states;
  std::vector<int> measurements;
  std::vector<int> controls;
  std::vector<Belief> beliefs;
};

/// Deterministic feedback policy on the belief state; stage is 1-based.
using BeliefPolicy = std::function<int(int stage, const Belief& belief)>;

/// Samples a trajectory from the model's joint law under the policy.
/// Reproducible given the seed.
TrajectoryRecord sample_trajectory(const PomdpModel& model, const BeliefPolicy& policy,
                                   std::uint64_t seed);

}  // namespace trajent
