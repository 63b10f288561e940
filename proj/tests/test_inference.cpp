#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <trajent/costs.hpp>
#include <trajent/inference.hpp>
#include <trajent/sampling.hpp>
#include <trajent/verify.hpp>

#include <cmath>
#include <random>

#include "support/models.hpp"

using namespace trajent;

namespace {

// Exhaustive trajectory argmax with ties toward lower indices.
std::vector<int> brute_force_map(const PomdpModel& model, const std::vector<int>& measurements,
                                 const std::vector<int>& controls) {
  const Vector posterior = brute_force_joint_posterior(model, measurements, controls);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < posterior.size(); ++i) {
    if (posterior(i) > posterior(best)) best = i;
  }
  std::vector<int> states(model.horizon);
  std::size_t rest = static_cast<std::size_t>(best);
  for (int k = model.horizon - 1; k >= 0; --k) {
    states[k] = static_cast<int>(rest % model.num_states);
    rest /= model.num_states;
  }
  return states;
}

double joint_posterior_probability(const PomdpModel& model, const std::vector<int>& states,
                                   const std::vector<int>& measurements,
                                   const std::vector<int>& controls) {
  const Vector posterior = brute_force_joint_posterior(model, measurements, controls);
  std::size_t index = 0;
  for (int k = 0; k < model.horizon; ++k) {
    index = index * model.num_states + static_cast<std::size_t>(states[k]);
  }
  return posterior(static_cast<Eigen::Index>(index));
}

}  // namespace

TEST_CASE("viterbi decoding") {
  SUBCASE("perfect observations reproduce the measured states") {
    const PomdpModel model = testing::perfect_observation_model(3, 4);
    const std::vector<int> measurements = {2, 2, 2, 2};
    const std::vector<int> controls = {0, 0, 0};
    CHECK(viterbi(model, measurements, controls) == std::vector<int>{2, 2, 2, 2});
  }
  SUBCASE("horizon one returns the argmax of the initial belief") {
    PomdpModel model = testing::two_state_chain(1);
    model.initial_distribution << 0.4, 0.6;
    // Posteriors: y=0 -> (0.32, 0.18), y=1 -> (0.08, 0.42).
    CHECK(viterbi(model, {0}, {}) == std::vector<int>{0});
    CHECK(viterbi(model, {1}, {}) == std::vector<int>{1});
  }
  SUBCASE("matches the exhaustive argmax on random instances") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
      const PomdpModel model = random_pomdp(rng, 3, 2, 3, 4);
      const TrajectoryRecord record = sample_trajectory(
          model, [&rng](int, const Belief&) { return 0; }, 100 + trial);
      const std::vector<int> decoded = viterbi(model, record.measurements, record.controls);
      const double decoded_probability =
          joint_posterior_probability(model, decoded, record.measurements, record.controls);
      const std::vector<int> exhaustive =
          brute_force_map(model, record.measurements, record.controls);
      const double exhaustive_probability =
          joint_posterior_probability(model, exhaustive, record.measurements, record.controls);
      CHECK(std::abs(std::log(decoded_probability) - std::log(exhaustive_probability)) < 1e-9);
    }
  }
  SUBCASE("zero-likelihood records are rejected") {
    const PomdpModel model = testing::deterministic_model(3);
    // The deterministic chain 0 -> 1 -> 0 must emit (0, 1, 0).
    CHECK_THROWS_AS(viterbi(model, {0, 0, 0}, {0, 0}), InfeasibleEvidence);
  }
}

TEST_CASE("forward-backward smoothing") {
  SUBCASE("uninformative measurements with identity dynamics keep the prior") {
    PomdpModel model = testing::uninformative_model(3);
    model.transition = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
    const SmoothedPosterior posterior = forward_backward(model, {0, 1, 0}, {0, 0});
    for (int k = 0; k < 3; ++k) {
      CHECK(posterior.marginals(k, 0) == doctest::Approx(0.5).epsilon(1e-12));
    }
  }
  SUBCASE("the final marginal equals the filter belief") {
    const PomdpModel model = testing::two_state_chain(4);
    const TrajectoryRecord record =
        sample_trajectory(model, [](int, const Belief&) { return 0; }, 5);
    const SmoothedPosterior posterior =
        forward_backward(model, record.measurements, record.controls);
    CHECK((posterior.marginals.row(3).transpose() - record.beliefs[3]).lpNorm<Eigen::Infinity>() <
          1e-10);
  }
  SUBCASE("pairwise joints match brute-force marginalisation") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 20; ++trial) {
      const PomdpModel model = random_pomdp(rng, 3, 2, 3, 4);
      const TrajectoryRecord record = sample_trajectory(
          model, [&rng](int, const Belief&) { return 1; }, 200 + trial);
      const SmoothedPosterior posterior =
          forward_backward(model, record.measurements, record.controls);
      const Vector joint = brute_force_joint_posterior(model, record.measurements, record.controls);

      for (int k = 0; k + 1 < 4; ++k) {
        Matrix expected = Matrix::Zero(3, 3);
        for (Eigen::Index index = 0; index < joint.size(); ++index) {
          std::size_t rest = static_cast<std::size_t>(index);
          int states[4];
          for (int s = 3; s >= 0; --s) {
            states[s] = static_cast<int>(rest % 3);
            rest /= 3;
          }
          expected(states[k + 1], states[k]) += joint(index);
        }
        CHECK((posterior.pairwise[k] - expected).lpNorm<Eigen::Infinity>() < 1e-9);
        // Pairwise marginals are consistent with the stage marginals.
        for (int j = 0; j < 3; ++j) {
          CHECK(posterior.pairwise[k].col(j).sum() ==
                doctest::Approx(posterior.marginals(k, j)).epsilon(1e-9));
          CHECK(posterior.pairwise[k].row(j).sum() ==
                doctest::Approx(posterior.marginals(k + 1, j)).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("pointwise smoother entropy") {
  SUBCASE("perfect observations leave no uncertainty") {
    const PomdpModel model = testing::perfect_observation_model(3, 4);
    CHECK(pointwise_smoother_entropy(model, {1, 1, 1, 1}, {0, 0, 0}) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("independent states factorise into per-stage entropies") {
    PomdpModel model = testing::uninformative_model(3);
    Matrix a(2, 2);
    a << 0.7, 0.7,
         0.3, 0.3;  // next state independent of the current one
    model.transition = {a, a};
    model.initial_distribution << 0.7, 0.3;
    const double column_entropy = -(0.7 * std::log(0.7) + 0.3 * std::log(0.3));
    CHECK(pointwise_smoother_entropy(model, {0, 1, 0}, {0, 0}) ==
          doctest::Approx(3.0 * column_entropy).epsilon(1e-10));
  }
  SUBCASE("matches the enumerated joint posterior on random instances") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; ++trial) {
      const PomdpModel model = random_pomdp(rng, 3, 2, 2, 4);
      const TrajectoryRecord record = sample_trajectory(
          model, [&rng](int, const Belief&) { return 0; }, 300 + trial);
      const double direct =
          pointwise_smoother_entropy(model, record.measurements, record.controls);
      const double enumerated =
          entropy(brute_force_joint_posterior(model, record.measurements, record.controls));
      CHECK(direct == doctest::Approx(enumerated).epsilon(1e-10));
    }
  }
}

TEST_CASE("brute-force joint posterior") {
  SUBCASE("deterministic model concentrates on one trajectory") {
    const PomdpModel model = testing::deterministic_model(4);
    const Vector posterior = brute_force_joint_posterior(model, {0, 1, 0, 1}, {0, 0, 0});
    CHECK(posterior.maxCoeff() == doctest::Approx(1.0));
    CHECK(posterior.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("horizon one recovers the initial belief") {
    const PomdpModel model = testing::two_state_chain(1);
    const Vector posterior = brute_force_joint_posterior(model, {1}, {});
    const Belief belief = initial_belief(model, 1);
    CHECK((posterior - belief).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  SUBCASE("normalisation holds on random instances") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 10; ++trial) {
      const PomdpModel model = random_pomdp(rng, 3, 1, 2, 5);
      const TrajectoryRecord record =
          sample_trajectory(model, [](int, const Belief&) { return 0; }, 400 + trial);
      CHECK(brute_force_joint_posterior(model, record.measurements, record.controls).sum() ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("oversized enumerations are refused") {
    const PomdpModel model = testing::perfect_observation_model(10, 7);
    CHECK_THROWS_AS(
        brute_force_joint_posterior(model, {0, 0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0}),
        SizeGuardError);
  }
}

TEST_CASE("entropy ledger") {
  SUBCASE("uninformative measurements leave no directed information") {
    const PomdpModel model = testing::uninformative_model(3);
    const EntropyLedger ledger = entropy_ledger(model, std::vector<int>{0, 1});
    CHECK(std::abs(ledger.directed_information) < 1e-12);
    CHECK(ledger.smoother_entropy == doctest::Approx(ledger.causal_entropy).epsilon(1e-10));
  }
  SUBCASE("perfect observations from a known start leave no entropy") {
    PomdpModel model = testing::deterministic_model(3);
    const EntropyLedger ledger = entropy_ledger(model, std::vector<int>{0, 0});
    CHECK(ledger.smoother_entropy == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("identities hold on random instances under open loop and feedback") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 2);
      const int ny = 2 + static_cast<int>(rng() % 2);
      const int horizon = 2 + static_cast<int>(rng() % 2);
      const PomdpModel model = random_pomdp(rng, n, 2, ny, horizon);

      std::vector<int> controls(horizon - 1);
      for (auto& u : controls) u = static_cast<int>(rng() % 2);
      const EntropyLedger open_loop = entropy_ledger(model, controls);
      CHECK(open_loop.identity_residual() < 1e-10);
      CHECK(open_loop.max_form_residual() < 1e-10);

      const EntropyLedger feedback =
          entropy_ledger(model, [](int, const Belief& belief) {
            return belief(0) > 0.5 ? 0 : 1;
          });
      CHECK(feedback.identity_residual() < 1e-10);
      CHECK(feedback.max_form_residual() < 1e-10);
      CHECK(feedback.smoother_entropy ==
            doctest::Approx(feedback.transition_minus_information).epsilon(1e-10));
    }
  }
  SUBCASE("entropy chain is ordered and collapses for independent states") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 20; ++trial) {
      const PomdpModel model = random_pomdp(rng, 3, 2, 3, 3);
      const EntropyLedger ledger = entropy_ledger(model, std::vector<int>{0, 1});
      CHECK(ledger.sum_filter_entropy >= ledger.sum_smoothed_entropy - 1e-10);
      CHECK(ledger.sum_smoothed_entropy >= ledger.smoother_entropy - 1e-10);
    }
    // Identical transition columns make the states temporally independent.
    PomdpModel model = random_pomdp(rng, 3, 1, 3, 3);
    for (auto& a : model.transition) {
      a.col(1) = a.col(0);
      a.col(2) = a.col(0);
    }
    const EntropyLedger ledger = entropy_ledger(model, std::vector<int>{0, 0});
    CHECK(ledger.sum_smoothed_entropy ==
          doctest::Approx(ledger.smoother_entropy).epsilon(1e-10));
    CHECK(ledger.sum_filter_entropy ==
          doctest::Approx(ledger.smoother_entropy).epsilon(1e-10));
  }
  SUBCASE("oversized measurement enumerations are refused") {
    const PomdpModel model = testing::perfect_observation_model(10, 7);
    CHECK_THROWS_AS(entropy_ledger(model, std::vector<int>(6, 0)), SizeGuardError);
  }
}

TEST_CASE("Monte-Carlo smoother entropy") {
  SUBCASE("deterministic model estimates exactly zero") {
    const PomdpModel model = testing::deterministic_model(4);
    const MonteCarloEstimate estimate = monte_carlo_smoother_entropy(
        model, [](int, const Belief&) { return 0; }, 50, 11);
    CHECK(estimate.mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(estimate.stderr_of_mean == doctest::Approx(0.0));
  }
  SUBCASE("estimate converges to the enumerated expectation") {
    const PomdpModel model = testing::two_state_chain(3);
    const std::vector<int> controls = {0, 0};
    const EntropyLedger ledger = entropy_ledger(model, controls);
    const MonteCarloEstimate estimate = monte_carlo_smoother_entropy(
        model, [](int, const Belief&) { return 0; }, 10000, 19);
    CHECK(std::abs(estimate.mean - ledger.smoother_entropy) <
          3.0 * estimate.stderr_of_mean + 1e-6);
  }
  SUBCASE("reproducible for a fixed seed") {
    const PomdpModel model = testing::two_state_chain(3);
    const auto a = monte_carlo_smoother_entropy(
        model, [](int, const Belief&) { return 1; }, 500, 23);
    const auto b = monte_carlo_smoother_entropy(
        model, [](int, const Belief&) { return 1; }, 500, 23);
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_of_mean == b.stderr_of_mean);
  }
}
