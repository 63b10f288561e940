#pragma once

#include <string>
#include <vector>

#include "trajent/costs.hpp"
#include "trajent/pomdp.hpp"
#include "trajent/pwlc.hpp"

namespace trajent {

enum class PruneMode {
  Incremental,  // cross-sums interleaved with LP-backed pruning
  Pairwise,     // componentwise-domination pruning only
  PointBased    // backup evaluated at the base points only, one vector each
};

std::string to_string(PruneMode mode);
PruneMode prune_mode_from_string(const std::string& name);

struct SolverOptions {
  PruneMode prune = PruneMode::Incremental;
  double tolerance = 1e-9;
  bool parallel_controls = true;
  // Point-based mode only: backups are evaluated on the base points together
  // with filter beliefs reachable from the initial ones, capped per stage by
  // deterministic farthest-point thinning. 0 disables the expansion.
  int reachable_per_stage = 256;
};

struct StageStats {
  int stage = 0;
  int vectors = 0;        // retained in the stage value function
  int pruned_away = 0;    // discarded across all prune calls of the backup
  double seconds = 0.0;
};

struct SolverStats {
  std::vector<StageStats> stages;
  double wall_time_seconds = 0.0;
  int max_stage_vectors = 0;
};

/// Finite-horizon value functions of the PWLC surrogate problem together
/// with everything needed to act greedily: the per-stage cost surfaces and
/// the base points they were built from.
struct SolvedPolicy {
  Objective objective = Objective::StandardPomdp;
  double lambda = 1.0;
  int num_states = 0;
  int horizon = 0;
  std::vector<PwlcFunction> value;                    // [k-1] -> J_k, k = 1..T
  std::vector<std::vector<PwlcFunction>> stage_costs; // [k-1][u], k = 1..T-1
  BasePointSet base_points;
  SolverOptions options;
  SolverStats stats;

  const PwlcFunction& value_at(int stage) const { return value.at(stage - 1); }

  /// One-step lookahead argmin over controls; ties resolved toward the
  /// smallest control index. Stage must satisfy 1 <= stage < horizon.
  int greedy_action(const PomdpModel& model, int stage, const Belief& belief) const;
};

/// Exact dynamic-programming backup of the PWLC surrogate: projects the
/// next-stage vectors through every (control, measurement) pair, cross-sums
/// over measurements together with the stage-cost vectors, and prunes per
/// the options. Vectors in the result carry the generating control tag.
PwlcFunction dp_backup(const PomdpModel& model,
                       const std::vector<PwlcFunction>& cost_per_control,
                       const PwlcFunction& value_next, const SolverOptions& options = {},
                       StageStats* stats = nullptr);

/// Deterministic breadth-first enumeration of the filter beliefs reachable
/// within the horizon, thinned per stage to the given limit.
std::vector<Belief> reachable_beliefs(const PomdpModel& model, int per_stage_limit);

/// Point-based backup used by PruneMode::PointBased: one vector per
/// evaluation point, each the best (control, measurement-vector selection)
/// combination at that point.
PwlcFunction point_based_backup(const PomdpModel& model,
                                const std::vector<PwlcFunction>& cost_per_control,
                                const PwlcFunction& value_next,
                                const std::vector<Belief>& points);

/// Backward induction from the PWLC terminal cost. Deterministic given its
/// inputs. Throws StructureError for the convex-form objectives.
SolvedPolicy solve(const PomdpModel& model, const CostModel& cost,
                   const BasePointSet& base_points, const SolverOptions& options = {});

/// Signed over-approximation statistics of a PWLC surface against the exact
/// cost it upper-bounds, over a quasi-random simplex sample.
struct GapStatistics {
  double max_gap = 0.0;         // max of (approx - exact)
  double mean_gap = 0.0;
  double min_signed_gap = 0.0;  // negative values would break the upper bound
  int samples = 0;
};

GapStatistics approximation_gap(const std::function<double(const Belief&)>& exact,
                                const PwlcFunction& approx, int num_states, int samples);

void save_policy(const SolvedPolicy& policy, const std::string& path);
SolvedPolicy load_policy(const std::string& path);

}  // namespace trajent
