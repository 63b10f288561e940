#include "trajent/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trajent/costs.hpp"
#include "trajent/parallel.hpp"
#include "trajent/sampling.hpp"

namespace trajent {

namespace {

constexpr double kUnderflowFloor = 1e-300;

void check_record(const PomdpModel& model, const std::vector<int>& measurements,
                  const std::vector<int>& controls) {
  if (static_cast<int>(measurements.size()) != model.horizon ||
      static_cast<int>(controls.size()) != model.horizon - 1) {
    throw ValidationError("record lengths do not match the model horizon");
  }
}

std::vector<Belief> filter_chain(const PomdpModel& model, const std::vector<int>& measurements,
                                 const std::vector<int>& controls) {
  std::vector<Belief> beliefs;
  beliefs.reserve(measurements.size());
  try {
    beliefs.push_back(initial_belief(model, measurements[0]));
    for (std::size_t k = 1; k < measurements.size(); ++k) {
      beliefs.push_back(filter_update(model, beliefs.back(), controls[k - 1], measurements[k]));
    }
  } catch (const ImpossibleMeasurement& e) {
    throw InfeasibleEvidence(e.what());
  }
  return beliefs;
}

}  // namespace

std::vector<int> viterbi(const PomdpModel& model, const std::vector<int>& measurements,
                         const std::vector<int>& controls) {
  check_record(model, measurements, controls);
  const int n = model.num_states;
  const int horizon = model.horizon;

  Matrix score(horizon, n);
  Eigen::MatrixXi backpointer(horizon, n);
  for (int i = 0; i < n; ++i) {
    score(0, i) = std::log(model.initial_distribution(i)) +
                  std::log(model.initial_observation(i, measurements[0]));
  }
  for (int k = 1; k < horizon; ++k) {
    const Matrix& a = model.transition[controls[k - 1]];
    const Matrix& b = model.observation[controls[k - 1]];
    for (int i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      int best_j = 0;
      for (int j = 0; j < n; ++j) {
        const double candidate = score(k - 1, j) + std::log(a(i, j));
        if (candidate > best) {
          best = candidate;
          best_j = j;
        }
      }
      score(k, i) = best + std::log(b(i, measurements[k]));
      backpointer(k, i) = best_j;
    }
  }

  int state = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (score(horizon - 1, i) > best) {
      best = score(horizon - 1, i);
      state = i;
    }
  }
  if (!std::isfinite(best)) {
    throw InfeasibleEvidence("measurement record has zero likelihood under the model");
  }
  std::vector<int> path(horizon);
  path[horizon - 1] = state;
  for (int k = horizon - 1; k >= 1; --k) {
    state = backpointer(k, state);
    path[k - 1] = state;
  }
  return path;
}

SmoothedPosterior forward_backward(const PomdpModel& model, const std::vector<int>& measurements,
                                   const std::vector<int>& controls) {
  check_record(model, measurements, controls);
  const int n = model.num_states;
  const int horizon = model.horizon;

  Matrix alpha(horizon, n);  // scaled forward variables (filter beliefs)
  Vector scale(horizon);
  Vector a0 = model.initial_observation.col(measurements[0]).cwiseProduct(model.initial_distribution);
  scale(0) = a0.sum();
  if (scale(0) < kUnderflowFloor)
    throw InfeasibleEvidence("measurement record has zero likelihood under the model");
  alpha.row(0) = (a0 / scale(0)).transpose();

  for (int k = 1; k < horizon; ++k) {
    const Matrix& a = model.transition[controls[k - 1]];
    const Matrix& b = model.observation[controls[k - 1]];
    Vector raw = b.col(measurements[k]).cwiseProduct(a * alpha.row(k - 1).transpose());
    scale(k) = raw.sum();
    if (scale(k) < kUnderflowFloor)
      throw InfeasibleEvidence("measurement record has zero likelihood under the model");
    alpha.row(k) = (raw / scale(k)).transpose();
  }

  Matrix beta = Matrix::Ones(horizon, n);
  for (int k = horizon - 2; k >= 0; --k) {
    const Matrix& a = model.transition[controls[k]];
    const Matrix& b = model.observation[controls[k]];
    beta.row(k) = (a.transpose() *
                   b.col(measurements[k + 1]).cwiseProduct(beta.row(k + 1).transpose()) /
                   scale(k + 1))
                      .transpose();
  }

  SmoothedPosterior posterior;
  posterior.marginals.resize(horizon, n);
  for (int k = 0; k < horizon; ++k) {
    Vector m = alpha.row(k).cwiseProduct(beta.row(k)).transpose();
    posterior.marginals.row(k) = (m / m.sum()).transpose();
  }
  posterior.pairwise.reserve(horizon - 1);
  for (int k = 0; k + 1 < horizon; ++k) {
    const Matrix& a = model.transition[controls[k]];
    const Matrix& b = model.observation[controls[k]];
    Matrix joint(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        joint(i, j) = alpha(k, j) * a(i, j) * b(i, measurements[k + 1]) * beta(k + 1, i) /
                      scale(k + 1);
      }
    }
    joint /= joint.sum();
    posterior.pairwise.push_back(std::move(joint));
  }
  return posterior;
}

double pointwise_smoother_entropy(const PomdpModel& model, const std::vector<int>& measurements,
                                  const std::vector<int>& controls) {
  check_record(model, measurements, controls);
  const std::vector<Belief> beliefs = filter_chain(model, measurements, controls);
  const SmoothedPosterior posterior = forward_backward(model, measurements, controls);
  const int horizon = model.horizon;
  const int n = model.num_states;

  double total = entropy(beliefs.back());
  for (int k = 0; k + 1 < horizon; ++k) {
    const Matrix& a = model.transition[controls[k]];
    const Vector predicted = a * beliefs[k];
    for (int i = 0; i < n; ++i) {
      if (predicted(i) <= 0.0) continue;
      double backward_kernel_entropy = 0.0;
      for (int j = 0; j < n; ++j) {
        backward_kernel_entropy -= plogp(a(i, j) * beliefs[k](j) / predicted(i));
      }
      total += posterior.marginals(k + 1, i) * backward_kernel_entropy;
    }
  }
  return total;
}

Vector brute_force_joint_posterior(const PomdpModel& model, const std::vector<int>& measurements,
                                   const std::vector<int>& controls) {
  check_record(model, measurements, controls);
  const int n = model.num_states;
  const int horizon = model.horizon;
  double count = 1.0;
  for (int k = 0; k < horizon; ++k) {
    count *= n;
    if (count > 1e6) throw SizeGuardError("state-trajectory enumeration beyond 10^6 entries");
  }
  const std::size_t total = static_cast<std::size_t>(count);

  Vector posterior(total);
  double normaliser = 0.0;
  std::vector<int> states(horizon);
  for (std::size_t index = 0; index < total; ++index) {
    std::size_t rest = index;
    for (int k = horizon - 1; k >= 0; --k) {
      states[k] = static_cast<int>(rest % n);
      rest /= n;
    }
    double p = model.initial_distribution(states[0]) *
               model.initial_observation(states[0], measurements[0]);
    for (int k = 1; k < horizon && p > 0.0; ++k) {
      p *= model.transition[controls[k - 1]](states[k], states[k - 1]) *
           model.observation[controls[k - 1]](states[k], measurements[k]);
    }
    posterior(static_cast<Eigen::Index>(index)) = p;
    normaliser += p;
  }
  if (normaliser < kUnderflowFloor)
    throw InfeasibleEvidence("measurement record has zero likelihood under the model");
  return posterior / normaliser;
}

double EntropyLedger::identity_residual() const {
  return std::abs(smoother_entropy - (causal_entropy - directed_information));
}

double EntropyLedger::max_form_residual() const {
  const double a = std::abs(transition_minus_information - marginal_minus_coupling);
  const double b = std::abs(marginal_minus_coupling - backward_accumulation);
  const double c = std::abs(backward_accumulation - transition_minus_information);
  return std::max({a, b, c});
}

EntropyLedger entropy_ledger(const PomdpModel& model, const BeliefPolicy& policy) {
  const int horizon = model.horizon;
  const int ny = model.num_measurements();
  double leaves = 1.0;
  for (int k = 0; k < horizon; ++k) {
    leaves *= ny;
    if (leaves > 1e6) throw SizeGuardError("measurement-sequence enumeration beyond 10^6 leaves");
  }

  EntropyLedger ledger;
  double coupling_total = 0.0;       // state-to-state information terms
  double backward_total = 0.0;       // expected backward-kernel entropies
  double terminal_entropy = 0.0;     // E[entropy of the final belief]

  ledger.causal_entropy = entropy(model.initial_distribution);
  ledger.directed_information = entropy(model.initial_distribution);
  // First-stage information gain completes below with -E[H(belief_1)].

  std::vector<int> measurements(horizon);
  std::vector<int> controls(horizon > 0 ? horizon - 1 : 0);

  // Depth-first walk over measurement sequences; weight = sequence probability.
  std::function<void(int, const Belief&, double)> walk = [&](int stage, const Belief& belief,
                                                             double weight) {
    // `stage` is 1-based and the belief is the filter output at that stage.
    ledger.sum_filter_entropy += weight * entropy(belief);
    if (stage == 1) ledger.directed_information -= weight * entropy(belief);

    if (stage == horizon) {
      std::vector<int> prefix_controls(controls.begin(), controls.begin() + (horizon - 1));
      ledger.smoother_entropy +=
          weight * pointwise_smoother_entropy(model, measurements, prefix_controls);
      terminal_entropy += weight * entropy(belief);
      const SmoothedPosterior posterior =
          forward_backward(model, measurements, prefix_controls);
      for (int k = 0; k < horizon; ++k) {
        ledger.sum_smoothed_entropy +=
            weight * entropy(posterior.marginals.row(k).transpose());
      }
      return;
    }

    const int u = policy(stage, belief);
    controls[stage - 1] = u;
    const double h_predicted = predicted_entropy(model, belief, u);
    const double h_transition = transition_entropy(model, belief, u);
    const double h_expected_update = expected_update_entropy(model, belief, u);
    ledger.causal_entropy += weight * h_transition;
    ledger.directed_information += weight * (h_predicted - h_expected_update);
    coupling_total += weight * (h_predicted - h_transition);
    backward_total += weight * backward_transition_entropy(model, belief, u);

    const Vector likelihood = observation_likelihood(model, belief, u);
    for (int y = 0; y < ny; ++y) {
      if (likelihood(y) < kUnderflowFloor) continue;
      measurements[stage] = y;
      walk(stage + 1, filter_update(model, belief, u, y), weight * likelihood(y));
    }
  };

  for (int y1 = 0; y1 < ny; ++y1) {
    const double p1 =
        model.initial_observation.col(y1).cwiseProduct(model.initial_distribution).sum();
    if (p1 < kUnderflowFloor) continue;
    measurements[0] = y1;
    walk(1, initial_belief(model, y1), p1);
  }

  ledger.transition_minus_information = ledger.causal_entropy - ledger.directed_information;
  ledger.marginal_minus_coupling = ledger.sum_filter_entropy - coupling_total;
  ledger.backward_accumulation = terminal_entropy + backward_total;
  return ledger;
}

EntropyLedger entropy_ledger(const PomdpModel& model,
                             const std::vector<int>& open_loop_controls) {
  if (static_cast<int>(open_loop_controls.size()) != model.horizon - 1) {
    throw ValidationError("open-loop control sequence length does not match the horizon");
  }
  return entropy_ledger(model, [&open_loop_controls](int stage, const Belief&) {
    return open_loop_controls[stage - 1];
  });
}

MonteCarloEstimate monte_carlo_smoother_entropy(const PomdpModel& model,
                                                const BeliefPolicy& policy, int runs,
                                                std::uint64_t seed) {
  if (runs < 1) throw ValidationError("Monte-Carlo estimation needs at least one run");
  std::vector<double> values(static_cast<std::size_t>(runs));
  parallel_for(static_cast<std::size_t>(runs), [&](std::size_t run) {
    const TrajectoryRecord record =
        sample_trajectory(model, policy, derive_seed(seed, run));
    values[run] = pointwise_smoother_entropy(model, record.measurements, record.controls);
  });
  MonteCarloEstimate estimate;
  estimate.runs = runs;
  double total = 0.0;
  for (const double v : values) total += v;
  estimate.mean = total / runs;
  if (runs > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - estimate.mean) * (v - estimate.mean);
    estimate.stderr_of_mean = std::sqrt(ss / (runs - 1)) / std::sqrt(static_cast<double>(runs));
  }
  return estimate;
}

}  // namespace trajent
