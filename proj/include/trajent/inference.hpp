#pragma once

#include <cstdint>
#include <vector>

#include "trajent/pomdp.hpp"
#include "trajent/types.hpp"

namespace trajent {

/// Fixed-interval smoothed posterior: per-stage marginals and adjacent-pair
/// joints of the state trajectory given the full measurement/control record.
struct SmoothedPosterior {
  Matrix marginals;              // T x N, row k-1 = p(x_k | record)
  std::vector<Matrix> pairwise;  // k-1 -> N x N, (i, j) = p(x_{k+1}=i, x_k=j | record)
};

/// Most probable state trajectory given the record (log-domain recursion,
/// ties toward the smaller state index). Throws InfeasibleEvidence when the
/// record has zero likelihood.
std::vector<int> viterbi(const PomdpModel& model, const std::vector<int>& measurements,
                         const std::vector<int>& controls);

/// Scaled forward-backward smoother.
SmoothedPosterior forward_backward(const PomdpModel& model,
                                   const std::vector<int>& measurements,
                                   const std::vector<int>& controls);

/// Entropy in nats of the full joint posterior of the state trajectory given
/// the record, computed by the backward decomposition: terminal belief
/// entropy plus smoothed-marginal-weighted backward-kernel entropies.
double pointwise_smoother_entropy(const PomdpModel& model,
                                  const std::vector<int>& measurements,
                                  const std::vector<int>& controls);

/// Exact joint posterior over all N^T state trajectories by chain-rule
/// enumeration; index of trajectory (x_1..x_T) is x_1 N^{T-1} + ... + x_T.
/// Guarded to N^T <= 10^6.
Vector brute_force_joint_posterior(const PomdpModel& model,
                                   const std::vector<int>& measurements,
                                   const std::vector<int>& controls);

/// Exact information accounting for a fixed policy, by enumeration over all
/// measurement sequences (guarded to |Y|^T <= 10^6). All entropies in nats.
struct EntropyLedger {
  double smoother_entropy = 0.0;      // average trajectory-posterior entropy
  double causal_entropy = 0.0;        // sum of stagewise state unpredictability
  double directed_information = 0.0;  // cumulative information flow to measurements
  // The three additive decompositions of the smoother entropy:
  double transition_minus_information = 0.0;  // causal_entropy - directed_information
  double marginal_minus_coupling = 0.0;       // filter entropies - state coupling
  double backward_accumulation = 0.0;         // terminal entropy + backward kernels
  double sum_filter_entropy = 0.0;    // sum over stages of E[entropy(belief_k)]
  double sum_smoothed_entropy = 0.0;  // same with smoothed marginals

  double identity_residual() const;   // smoother vs causal - directed
  double max_form_residual() const;   // pairwise disagreement of the forms
};

EntropyLedger entropy_ledger(const PomdpModel& model, const std::vector<int>& open_loop_controls);
EntropyLedger entropy_ledger(const PomdpModel& model, const BeliefPolicy& policy);

struct MonteCarloEstimate {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  int runs = 0;
};

/// Sample mean and standard error of the pointwise smoother entropy over
/// simulated closed-loop trajectories. Reproducible given the seed.
MonteCarloEstimate monte_carlo_smoother_entropy(const PomdpModel& model,
                                                const BeliefPolicy& policy, int runs,
                                                std::uint64_t seed);

}  // namespace trajent
