#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <trajent/costs.hpp>
#include <trajent/experiments.hpp>
#include <trajent/inference.hpp>
#include <trajent/sampling.hpp>
#include <trajent/verify.hpp>

#include <cmath>
#include <random>

#include "support/models.hpp"

using namespace trajent;

namespace {

CostModel zero_costs(const PomdpModel& model, Objective objective) {
  CostModel cost;
  cost.stage_cost = Matrix::Zero(model.num_states, model.num_controls());
  cost.terminal_cost = Vector::Zero(model.num_states);
  cost.objective = objective;
  return cost;
}

}  // namespace

TEST_CASE("belief entropy") {
  CHECK(belief_entropy(Vector::Constant(3, 1.0 / 3.0)) ==
        doctest::Approx(1.0986122886681098).epsilon(1e-12));
  Vector point = Vector::Zero(4);
  point(2) = 1.0;
  CHECK(belief_entropy(point) == 0.0);
  Vector skewed(3);
  skewed << 0.61, 0.30, 0.09;
  CHECK(belief_entropy(skewed) == doctest::Approx(0.8794277023834652).epsilon(1e-12));
}

TEST_CASE("predicted entropy") {
  SUBCASE("identity dynamics keep the belief entropy") {
    const PomdpModel model = testing::perfect_observation_model(3, 2);
    Vector belief(3);
    belief << 0.2, 0.5, 0.3;
    CHECK(predicted_entropy(model, belief, 0) ==
          doctest::Approx(belief_entropy(belief)).epsilon(1e-12));
  }
  SUBCASE("identical columns make prediction independent of the belief") {
    PomdpModel model = testing::two_state_chain();
    Matrix a(2, 2);
    a << 0.7, 0.7,
         0.3, 0.3;
    model.transition[0] = a;
    Vector p1(2), p2(2);
    p1 << 0.9, 0.1;
    p2 << 0.2, 0.8;
    const double expected = -(0.7 * std::log(0.7) + 0.3 * std::log(0.3));
    CHECK(predicted_entropy(model, p1, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(predicted_entropy(model, p2, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("cloud model from uniform belief") {
    const auto [model, cost] = build_cloud_model();
    CHECK(predicted_entropy(model, Vector::Constant(3, 1.0 / 3.0), 0) ==
          doctest::Approx(0.9183202268321401).epsilon(1e-12));
  }
}

TEST_CASE("transition entropy") {
  SUBCASE("deterministic dynamics carry no transition uncertainty") {
    const PomdpModel model = testing::deterministic_model();
    Vector belief(2);
    belief << 0.4, 0.6;
    CHECK(transition_entropy(model, belief, 0) == 0.0);
  }
  SUBCASE("point mass reads one column's entropy") {
    const PomdpModel model = testing::two_state_chain();
    Vector belief(2);
    belief << 1.0, 0.0;
    const double expected = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1));
    CHECK(transition_entropy(model, belief, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("cloud self-loop control from uniform belief") {
    const auto [model, cost] = build_cloud_model();
    CHECK(transition_entropy(model, Vector::Constant(3, 1.0 / 3.0), 2) ==
          doctest::Approx(0.23317260237386986).epsilon(1e-12));
  }
}

TEST_CASE("filter-form entropy increment") {
  SUBCASE("uninformative measurements with identity dynamics give zero") {
    PomdpModel model = testing::uninformative_model();
    model.transition[0] = Matrix::Identity(2, 2);
    Vector belief(2);
    belief << 0.35, 0.65;
    for (int y = 0; y < 2; ++y) {
      CHECK(filter_entropy_increment(model, belief, 0, y) ==
            doctest::Approx(0.0).epsilon(1e-12));
    }
  }
  SUBCASE("perfect observations with deterministic dynamics give zero") {
    const PomdpModel model = testing::deterministic_model();
    Vector belief(2);
    belief << 1.0, 0.0;
    CHECK(filter_entropy_increment(model, belief, 0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("cloud model agrees with an independent three-term evaluation") {
    const auto [model, cost] = build_cloud_model();
    const Belief belief = Vector::Constant(3, 1.0 / 3.0);
    const int u = 0, y = 0;
    // Each term by plain loops.
    double predicted[3];
    for (int i = 0; i < 3; ++i) {
      predicted[i] = 0.0;
      for (int j = 0; j < 3; ++j) predicted[i] += model.transition[u](i, j) * belief(j);
    }
    double updated[3], normaliser = 0.0;
    for (int i = 0; i < 3; ++i) {
      updated[i] = model.observation[u](i, y) * predicted[i];
      normaliser += updated[i];
    }
    double term1 = 0.0, term2 = 0.0, term3 = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double p = updated[i] / normaliser;
      if (p > 0) term1 -= p * std::log(p);
      if (predicted[i] > 0) term2 -= predicted[i] * std::log(predicted[i]);
      for (int j = 0; j < 3; ++j) {
        const double a = model.transition[u](i, j);
        if (a > 0) term3 -= a * belief(j) * std::log(a);
      }
    }
    CHECK(filter_entropy_increment(model, belief, u, y) ==
          doctest::Approx(term1 - term2 + term3).epsilon(1e-12));
  }
}

TEST_CASE("backward transition entropy") {
  SUBCASE("point-mass belief has a deterministic backward kernel") {
    const PomdpModel model = testing::two_state_chain();
    Vector belief(2);
    belief << 0.0, 1.0;
    CHECK(backward_transition_entropy(model, belief, 0) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("identity dynamics have a deterministic backward kernel") {
    const PomdpModel model = testing::perfect_observation_model(3, 2);
    Vector belief(3);
    belief << 0.2, 0.3, 0.5;
    CHECK(backward_transition_entropy(model, belief, 0) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("doubly uniform two-state case gives log 2") {
    PomdpModel model = testing::two_state_chain();
    Matrix a(2, 2);
    a << 0.5, 0.5,
         0.5, 0.5;
    model.transition[0] = a;
    CHECK(backward_transition_entropy(model, Vector::Constant(2, 0.5), 0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("joint-entropy identity on random instances") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const PomdpModel model = random_pomdp(rng, 3, 2, 2, 2);
      const Belief belief = random_belief(3, rng);
      for (int u = 0; u < 2; ++u) {
        const double lhs = backward_transition_entropy(model, belief, u) +
                           predicted_entropy(model, belief, u);
        const double rhs = transition_entropy(model, belief, u) + belief_entropy(belief);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
      }
    }
  }
  SUBCASE("nonnegative on random instances") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
      const PomdpModel model = random_pomdp(rng, 3, 1, 2, 2);
      const Belief belief = random_belief(3, rng);
      CHECK(backward_transition_entropy(model, belief, 0) >= -1e-12);
      CHECK(belief_entropy(belief) >= 0.0);
      CHECK(belief_entropy(belief) <= std::log(3.0) + 1e-12);
    }
  }
}

TEST_CASE("stage cost dispatch") {
  SUBCASE("estimation objective vanishes for identity dynamics and zero costs") {
    const PomdpModel model = testing::perfect_observation_model(3, 3);
    const CostModel cost = zero_costs(model, Objective::ActiveEstimation);
    Vector belief(3);
    belief << 0.2, 0.5, 0.3;
    CHECK(stage_cost(model, cost, 1, belief, 0).value == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("standard objective is the expected cost") {
    const auto [model, base_cost] = build_cloud_model();
    CostModel cost = base_cost;
    cost.objective = Objective::StandardPomdp;
    cost.stage_cost = Matrix::Ones(3, 3);
    cost.stage_cost.row(2).setZero();  // free in the third state
    const StageCostEvaluation eval =
        stage_cost(model, cost, 1, Vector::Constant(3, 1.0 / 3.0), 0);
    CHECK(eval.value == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(eval.gradient(0) == doctest::Approx(1.0));
    CHECK(eval.gradient(2) == doctest::Approx(0.0));
  }
  SUBCASE("obfuscation objective equals cost minus the expected increment") {
    const auto [model, base_cost] = build_cloud_model();
    CostModel cost = base_cost;
    cost.objective = Objective::ActiveObfuscation;
    cost.stage_cost = Matrix::Constant(3, 3, 0.25);
    const Belief belief = Vector::Constant(3, 1.0 / 3.0);
    const int u = 1;
    double expected_increment = 0.0;
    const Vector likelihood = observation_likelihood(model, belief, u);
    for (int y = 0; y < 3; ++y) {
      expected_increment += likelihood(y) * filter_entropy_increment(model, belief, u, y);
    }
    CHECK(stage_cost(model, cost, 1, belief, u).value ==
          doctest::Approx(0.25 - expected_increment).epsilon(1e-10));
  }
  SUBCASE("measurement-information objective is the expected information gain plus cost") {
    const auto [model, base_cost] = build_cloud_model();
    CostModel cost = base_cost;
    cost.objective = Objective::MinDirectedInfo;
    const Belief belief = Vector::Constant(3, 1.0 / 3.0);
    for (int u = 0; u < 3; ++u) {
      const double gain =
          predicted_entropy(model, belief, u) - expected_update_entropy(model, belief, u);
      CHECK(gain >= -1e-12);  // information gain is never negative
      CHECK(stage_cost(model, cost, 1, belief, u).value ==
            doctest::Approx(gain).epsilon(1e-10));
    }
  }
  SUBCASE("per-stage override replaces the table at that stage only") {
    const auto [model, base_cost] = build_cloud_model();
    CostModel cost = base_cost;
    cost.objective = Objective::StandardPomdp;
    cost.stage_overrides[2] = Matrix::Ones(3, 3);
    const Belief belief = Vector::Constant(3, 1.0 / 3.0);
    CHECK(stage_cost(model, cost, 1, belief, 0).value == doctest::Approx(0.0));
    CHECK(stage_cost(model, cost, 2, belief, 0).value == doctest::Approx(1.0));
  }
}

TEST_CASE("terminal cost dispatch") {
  const auto [model, base_cost] = build_cloud_model();
  SUBCASE("point mass with zero terminal table is zero under every objective") {
    Vector point = Vector::Zero(3);
    point(1) = 1.0;
    for (const Objective objective :
         {Objective::ActiveEstimation, Objective::ActiveObfuscation, Objective::StandardPomdp,
          Objective::MinDirectedInfo, Objective::MinMarginalEntropy,
          Objective::MinTerminalEntropy}) {
      CostModel cost = zero_costs(model, objective);
      CHECK(terminal_cost(model, cost, point).value == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
  SUBCASE("estimation terminal cost is entropy plus expected cost") {
    const auto [nav, nav_cost] = build_navigation_model();
    const Belief uniform = Vector::Constant(12, 1.0 / 12.0);
    CHECK(terminal_cost(nav, nav_cost, uniform).value ==
          doctest::Approx(2.4849066497880004 + 11.0 / 12.0).epsilon(1e-12));
  }
  SUBCASE("obfuscation terminal cost is linear") {
    CostModel cost = base_cost;
    cost.objective = Objective::ActiveObfuscation;
    Vector belief(3);
    belief << 0.2, 0.3, 0.5;
    CHECK(terminal_cost(model, cost, belief).value == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("convex forms complement the concave forms") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const PomdpModel random = random_pomdp(rng, 3, 2, 3, 3);
    CostModel cost;
    cost.stage_cost = Matrix::NullaryExpr(3, 2, [&]() { return double(rng() % 5); });
    cost.terminal_cost = Vector::Zero(3);
    cost.lambda = 0.5 + double(rng() % 4) * 0.5;
    const Belief belief = random_belief(3, rng);
    const int u = static_cast<int>(rng() % 2);
    const double linear = cost.lambda * belief.dot(cost.stage_cost.col(u));

    cost.objective = Objective::EstimationConvexForm;
    const double est_convex = stage_cost(random, cost, 1, belief, u).value;
    CHECK(est_convex ==
          doctest::Approx(estimation_convex_cost(random, cost, 1, belief, u)).epsilon(1e-12));
    cost.objective = Objective::ActiveObfuscation;
    const double obf = stage_cost(random, cost, 1, belief, u).value;
    CHECK(est_convex + obf == doctest::Approx(2.0 * linear).epsilon(1e-9));

    cost.objective = Objective::ActiveEstimation;
    const double est = stage_cost(random, cost, 1, belief, u).value;
    cost.objective = Objective::ObfuscationConvexForm;
    const double obf_convex = stage_cost(random, cost, 1, belief, u).value;
    CHECK(obf_convex ==
          doctest::Approx(obfuscation_convex_cost(random, cost, 1, belief, u)).epsilon(1e-12));
    CHECK(est + obf_convex == doctest::Approx(2.0 * linear).epsilon(1e-9));
  }
}

TEST_CASE("concavity and convexity of the stage-cost families") {
  std::mt19937_64 rng(13);
  for (const bool use_cloud : {true, false}) {
    auto [model, cost] = use_cloud ? build_cloud_model() : build_navigation_model();
    for (int u = 0; u < model.num_controls(); ++u) {
      for (int trial = 0; trial < 300; ++trial) {
        const Belief a = random_interior_belief(model.num_states, rng);
        const Belief b = random_interior_belief(model.num_states, rng);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double t = unit(rng);
        const Belief mix = t * a + (1.0 - t) * b;
        for (const Objective objective :
             {Objective::ActiveEstimation, Objective::ActiveObfuscation,
              Objective::MinDirectedInfo, Objective::MinMarginalEntropy}) {
          cost.objective = objective;
          const double fa = stage_cost(model, cost, 1, a, u).value;
          const double fb = stage_cost(model, cost, 1, b, u).value;
          const double fm = stage_cost(model, cost, 1, mix, u).value;
          CHECK(fm >= t * fa + (1.0 - t) * fb - 1e-10);
        }
        for (const Objective objective :
             {Objective::EstimationConvexForm, Objective::ObfuscationConvexForm}) {
          cost.objective = objective;
          const double fa = stage_cost(model, cost, 1, a, u).value;
          const double fb = stage_cost(model, cost, 1, b, u).value;
          const double fm = stage_cost(model, cost, 1, mix, u).value;
          CHECK(fm <= t * fa + (1.0 - t) * fb + 1e-10);
        }
      }
    }
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(17);
  for (const bool use_cloud : {true, false}) {
    auto [model, cost] = use_cloud ? build_cloud_model() : build_navigation_model();
    const int n = model.num_states;
    for (const Objective objective :
         {Objective::ActiveEstimation, Objective::ActiveObfuscation, Objective::StandardPomdp,
          Objective::MinDirectedInfo, Objective::MinMarginalEntropy,
          Objective::MinTerminalEntropy, Objective::EstimationConvexForm,
          Objective::ObfuscationConvexForm}) {
      cost.objective = objective;
      for (int trial = 0; trial < 5; ++trial) {
        const Belief point = random_interior_belief(n, rng, 0.02);
        const int u = static_cast<int>(rng() % model.num_controls());
        const StageCostEvaluation eval = stage_cost(model, cost, 1, point, u);
        const StageCostEvaluation term = terminal_cost(model, cost, point);
        const double h = 1e-6;
        for (int i = 0; i + 1 < n; ++i) {
          Vector direction = Vector::Zero(n);
          direction(i) = 1.0;
          direction(n - 1) = -1.0;
          const double stage_fd = (stage_cost(model, cost, 1, point + h * direction, u).value -
                                   stage_cost(model, cost, 1, point - h * direction, u).value) /
                                  (2.0 * h);
          const double stage_an = eval.gradient.dot(direction);
          CHECK(std::abs(stage_fd - stage_an) /
                    std::max({1.0, std::abs(stage_fd), std::abs(stage_an)}) <
                1e-5);
          const double term_fd = (terminal_cost(model, cost, point + h * direction).value -
                                  terminal_cost(model, cost, point - h * direction).value) /
                                 (2.0 * h);
          const double term_an = term.gradient.dot(direction);
          CHECK(std::abs(term_fd - term_an) /
                    std::max({1.0, std::abs(term_fd), std::abs(term_an)}) <
                1e-5);
        }
      }
    }
  }
}

TEST_CASE("expectation bridge: both stage decompositions equal the enumerated entropy") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const int ny = 2 + static_cast<int>(rng() % 2);
    const int horizon = 2 + static_cast<int>(rng() % 3);
    const PomdpModel model = random_pomdp(rng, n, 2, ny, horizon);
    std::vector<int> controls(horizon - 1);
    for (auto& u : controls) u = static_cast<int>(rng() % 2);

    double backward_sum = 0.0;   // E[sum of backward-kernel entropies + terminal entropy]
    double filter_sum = 0.0;     // E[initial entropy + sum of filter-form increments]
    double enumerated = 0.0;     // expectation of the joint-posterior entropy oracle

    std::vector<int> record(horizon);
    std::function<void(int, const Belief&, double)> walk = [&](int stage, const Belief& belief,
                                                               double weight) {
      if (stage == 1) filter_sum += weight * belief_entropy(belief);
      if (stage == horizon) {
        backward_sum += weight * belief_entropy(belief);
        enumerated += weight * entropy(brute_force_joint_posterior(model, record, controls));
        return;
      }
      const int u = controls[stage - 1];
      backward_sum += weight * backward_transition_entropy(model, belief, u);
      const Vector likelihood = observation_likelihood(model, belief, u);
      for (int y = 0; y < ny; ++y) {
        if (likelihood(y) < 1e-300) continue;
        filter_sum += weight * likelihood(y) * filter_entropy_increment(model, belief, u, y);
        record[stage] = y;
        walk(stage + 1, filter_update(model, belief, u, y), weight * likelihood(y));
      }
    };
    for (int y1 = 0; y1 < ny; ++y1) {
      const double p1 =
          model.initial_observation.col(y1).cwiseProduct(model.initial_distribution).sum();
      if (p1 < 1e-300) continue;
      record[0] = y1;
      walk(1, initial_belief(model, y1), p1);
    }

    CHECK(backward_sum == doctest::Approx(enumerated).epsilon(1e-9));
    CHECK(filter_sum == doctest::Approx(enumerated).epsilon(1e-9));
  }
}

TEST_CASE("cost files parse, validate, and reject bad content") {
  const auto [model, base_cost] = build_cloud_model();
  const std::string good = R"({
    "stage_cost": [[0,0,0],[0,0,0],[0,0,0]],
    "terminal_cost": [1,1,0],
    "objective": "active_obfuscation",
    "lambda": 2.0})";
  const CostModel cost = parse_cost_model(good, model);
  CHECK(cost.lambda == 2.0);
  CHECK(cost.objective == Objective::ActiveObfuscation);
  CHECK(cost.terminal_cost(2) == 0.0);

  CHECK_THROWS_AS(parse_cost_model("{}", model), ValidationError);
  CHECK_THROWS_AS(parse_cost_model(R"({
    "stage_cost": [[0,0,0],[0,0,0],[0,0,0]],
    "terminal_cost": [1,1,-1],
    "objective": "standard_pomdp"})", model),
                  ValidationError);
  CHECK_THROWS_AS(parse_cost_model(R"({
    "stage_cost": [[0,0,0],[0,0,0],[0,0,0]],
    "terminal_cost": [1,1,0],
    "objective": "no_such_objective"})", model),
                  ValidationError);
  CHECK_THROWS_AS(parse_cost_model(R"({
    "stage_cost": [[0,0,0],[0,0,0],[0,0,0]],
    "terminal_cost": [1,1,0],
    "objective": "standard_pomdp",
    "lambda": -1.0})", model),
                  ValidationError);
}
