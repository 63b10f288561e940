#include "trajent/verify.hpp"

#include <cmath>
#include <sstream>

#include "trajent/costs.hpp"
#include "trajent/experiments.hpp"
#include "trajent/inference.hpp"
#include "trajent/pwlc.hpp"
#include "trajent/sampling.hpp"
#include "trajent/solver.hpp"

namespace trajent {

namespace {

Vector random_pmf(std::mt19937_64& rng, int size) { return random_belief(size, rng); }

std::string detail_for(std::uint64_t seed, int instance, double residual) {
  std::ostringstream out;
  out << "seed=" << seed << " instance=" << instance << " residual=" << residual;
  return out.str();
}

}  // namespace

PomdpModel random_pomdp(std::mt19937_64& rng, int num_states, int num_controls,
                        int num_measurements, int horizon) {
  PomdpModel model;
  model.num_states = num_states;
  model.horizon = horizon;
  for (int u = 0; u < num_controls; ++u) {
    model.control_names.push_back(std::to_string(u));
    Matrix a(num_states, num_states);
    for (int j = 0; j < num_states; ++j) a.col(j) = random_pmf(rng, num_states);
    model.transition.push_back(std::move(a));
    Matrix b(num_states, num_measurements);
    for (int i = 0; i < num_states; ++i) b.row(i) = random_pmf(rng, num_measurements).transpose();
    model.observation.push_back(std::move(b));
  }
  for (int y = 0; y < num_measurements; ++y) model.measurement_names.push_back(std::to_string(y));
  model.initial_observation = model.observation.front();
  model.initial_distribution = random_pmf(rng, num_states);
  model.validate(1e-9);
  return model;
}

std::vector<CheckResult> verify_identities(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst_identity = 0.0, worst_forms = 0.0, worst_pointwise = 0.0, worst_chain = 0.0;
  std::string identity_detail, forms_detail, pointwise_detail, chain_detail;
  bool identity_ok = true, forms_ok = true, pointwise_ok = true, chain_ok = true;

  for (int instance = 0; instance < instances; ++instance) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const int ny = 2 + static_cast<int>(rng() % 2);
    const int nu = 1 + static_cast<int>(rng() % 2);
    const int horizon = 2 + static_cast<int>(rng() % 3);
    const PomdpModel model = random_pomdp(rng, n, nu, ny, horizon);

    // Alternate between open-loop sequences and belief-feedback policies.
    EntropyLedger ledger;
    if (instance % 2 == 0) {
      std::vector<int> controls(horizon - 1);
      for (auto& u : controls) u = static_cast<int>(rng() % nu);
      ledger = entropy_ledger(model, controls);
    } else {
      std::vector<Vector> scores;
      for (int u = 0; u < nu; ++u) scores.push_back(random_pmf(rng, n));
      ledger = entropy_ledger(model, [&scores, nu](int, const Belief& belief) {
        int best = 0;
        double best_score = scores[0].dot(belief);
        for (int u = 1; u < nu; ++u) {
          const double s = scores[u].dot(belief);
          if (s > best_score) {
            best_score = s;
            best = u;
          }
        }
        return best;
      });
    }

    if (ledger.identity_residual() > worst_identity) {
      worst_identity = ledger.identity_residual();
      identity_detail = detail_for(seed, instance, worst_identity);
    }
    if (ledger.identity_residual() > 1e-10) identity_ok = false;

    const double forms = std::max(ledger.max_form_residual(),
                                  std::abs(ledger.smoother_entropy -
                                           ledger.transition_minus_information));
    if (forms > worst_forms) {
      worst_forms = forms;
      forms_detail = detail_for(seed, instance, forms);
    }
    if (forms > 1e-10) forms_ok = false;

    const double chain = std::min(ledger.sum_filter_entropy - ledger.sum_smoothed_entropy,
                                  ledger.sum_smoothed_entropy - ledger.smoother_entropy);
    if (-chain > worst_chain) {
      worst_chain = -chain;
      chain_detail = detail_for(seed, instance, chain);
    }
    if (chain < -1e-10) chain_ok = false;

    // One sampled record per instance: backward decomposition against the
    // enumerated joint posterior.
    std::vector<int> controls(horizon - 1);
    for (auto& u : controls) u = static_cast<int>(rng() % nu);
    const TrajectoryRecord record = sample_trajectory(
        model, [&controls](int stage, const Belief&) { return controls[stage - 1]; }, rng());
    const double direct =
        pointwise_smoother_entropy(model, record.measurements, record.controls);
    const double enumerated =
        entropy(brute_force_joint_posterior(model, record.measurements, record.controls));
    const double residual = std::abs(direct - enumerated);
    if (residual > worst_pointwise) {
      worst_pointwise = residual;
      pointwise_detail = detail_for(seed, instance, residual);
    }
    if (residual > 1e-10) pointwise_ok = false;
  }

  return {
      {"smoother entropy equals causal entropy minus directed information", identity_ok,
       identity_detail},
      {"additive decompositions agree pairwise", forms_ok, forms_detail},
      {"pointwise entropy matches enumerated joint posterior", pointwise_ok, pointwise_detail},
      {"filtered >= smoothed >= trajectory entropy chain", chain_ok, chain_detail},
  };
}

std::vector<CheckResult> verify_structure(int pairs_per_control, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> results;

  const std::vector<std::pair<std::string, std::pair<PomdpModel, CostModel>>> models = {
      {"cloud", build_cloud_model()}, {"nav-grid", build_navigation_model()}};
  const std::vector<Objective> concave = {Objective::ActiveEstimation,
                                          Objective::ActiveObfuscation};
  const std::vector<Objective> convex = {Objective::EstimationConvexForm,
                                         Objective::ObfuscationConvexForm};

  for (const auto& [name, pair] : models) {
    const PomdpModel& model = pair.first;
    CostModel cost = pair.second;
    bool concave_ok = true, convex_ok = true, gradient_ok = true;
    std::string concave_detail, convex_detail, gradient_detail;

    for (int u = 0; u < model.num_controls(); ++u) {
      for (int trial = 0; trial < pairs_per_control; ++trial) {
        const Belief a = random_interior_belief(model.num_states, rng);
        const Belief b = random_interior_belief(model.num_states, rng);
        const Belief mid = 0.5 * (a + b);
        for (const Objective objective : concave) {
          cost.objective = objective;
          const double fa = stage_cost(model, cost, 1, a, u).value;
          const double fb = stage_cost(model, cost, 1, b, u).value;
          const double fm = stage_cost(model, cost, 1, mid, u).value;
          if (fm < 0.5 * (fa + fb) - 1e-10) {
            concave_ok = false;
            concave_detail = name + " " + to_string(objective) + " control " + std::to_string(u);
          }
        }
        for (const Objective objective : convex) {
          cost.objective = objective;
          const double fa = stage_cost(model, cost, 1, a, u).value;
          const double fb = stage_cost(model, cost, 1, b, u).value;
          const double fm = stage_cost(model, cost, 1, mid, u).value;
          if (fm > 0.5 * (fa + fb) + 1e-10) {
            convex_ok = false;
            convex_detail = name + " " + to_string(objective) + " control " + std::to_string(u);
          }
        }
      }

      // Central finite differences along simplex tangent directions.
      for (const Objective objective :
           {Objective::ActiveEstimation, Objective::ActiveObfuscation,
            Objective::MinDirectedInfo, Objective::MinMarginalEntropy}) {
        cost.objective = objective;
        const Belief point = random_interior_belief(model.num_states, rng, 0.05);
        const StageCostEvaluation eval = stage_cost(model, cost, 1, point, u);
        const double h = 1e-6;
        for (int i = 0; i + 1 < model.num_states; ++i) {
          Vector direction = Vector::Zero(model.num_states);
          direction(i) = 1.0;
          direction(model.num_states - 1) = -1.0;
          const double forward = stage_cost(model, cost, 1, point + h * direction, u).value;
          const double backward = stage_cost(model, cost, 1, point - h * direction, u).value;
          const double numeric = (forward - backward) / (2.0 * h);
          const double analytic = eval.gradient.dot(direction);
          const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic)});
          if (std::abs(numeric - analytic) / scale > 1e-5) {
            gradient_ok = false;
            gradient_detail = name + " " + to_string(objective) + " control " + std::to_string(u);
          }
        }
      }
    }

    results.push_back({name + ": estimation/obfuscation stage costs are midpoint concave",
                       concave_ok, concave_detail});
    results.push_back({name + ": convex-form stage costs are midpoint convex", convex_ok,
                       convex_detail});
    results.push_back(
        {name + ": analytic gradients match finite differences", gradient_ok, gradient_detail});
  }
  return results;
}

std::vector<CheckResult> verify_solver(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> results;
  auto [model, cost] = build_cloud_model();
  const BasePointSet base_points = generate_base_points(model.num_states, BaseScheme::Paper);

  {
    // Pruning keeps the pointwise minimum of random vector sets.
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      std::vector<AlphaVector> vectors;
      const int count = 20 + static_cast<int>(rng() % 30);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      for (int i = 0; i < count; ++i) {
        AlphaVector alpha;
        alpha.weights = Vector::NullaryExpr(model.num_states, [&]() { return unit(rng); });
        vectors.push_back(std::move(alpha));
      }
      const std::vector<AlphaVector> pruned = prune(vectors, 1e-9, true);
      PwlcFunction full{vectors}, small{pruned};
      for (int s = 0; s < 500; ++s) {
        const Belief p = random_belief(model.num_states, rng);
        if (std::abs(full.value(p) - small.value(p)) > 1e-9) {
          ok = false;
          detail = detail_for(seed, trial, full.value(p) - small.value(p));
          break;
        }
      }
    }
    results.push_back({"pruning preserves the pointwise minimum", ok, detail});
  }

  {
    // Exact backup agrees with direct evaluation of the surrogate recursion.
    bool ok = true;
    std::string detail;
    cost.objective = Objective::ActiveObfuscation;
    SolverOptions options;
    std::vector<PwlcFunction> stage_pwlc(model.num_controls());
    for (int u = 0; u < model.num_controls(); ++u) {
      stage_pwlc[u] = build_pwlc_cost(
          [&](const Belief& xi) { return stage_cost(model, cost, 1, xi, u); }, base_points, u);
    }
    PwlcFunction terminal = build_pwlc_cost(
        [&](const Belief& xi) { return terminal_cost(model, cost, xi); }, base_points, -1);
    const PwlcFunction backed_up = dp_backup(model, stage_pwlc, terminal, options);
    for (int s = 0; s < 200; ++s) {
      const Belief p = random_belief(model.num_states, rng);
      double direct = std::numeric_limits<double>::infinity();
      for (int u = 0; u < model.num_controls(); ++u) {
        double q = stage_pwlc[u].value(p);
        const Vector likelihood = observation_likelihood(model, p, u);
        for (int y = 0; y < model.num_measurements(); ++y) {
          if (likelihood(y) < 1e-300) continue;
          q += likelihood(y) * terminal.value(filter_update(model, p, u, y));
        }
        direct = std::min(direct, q);
      }
      if (std::abs(backed_up.value(p) - direct) > 1e-9) {
        ok = false;
        detail = detail_for(seed, s, backed_up.value(p) - direct);
        break;
      }
    }
    results.push_back({"dynamic-programming backup matches direct evaluation", ok, detail});
  }

  {
    // Tangent surfaces stay above the concave costs they approximate.
    bool ok = true;
    std::string detail;
    for (const Objective objective :
         {Objective::ActiveEstimation, Objective::ActiveObfuscation, Objective::StandardPomdp,
          Objective::MinDirectedInfo, Objective::MinMarginalEntropy,
          Objective::MinTerminalEntropy}) {
      cost.objective = objective;
      for (int u = 0; u < model.num_controls(); ++u) {
        const PwlcFunction approx = build_pwlc_cost(
            [&](const Belief& xi) { return stage_cost(model, cost, 1, xi, u); }, base_points, u);
        const GapStatistics gap = approximation_gap(
            [&](const Belief& p) { return stage_cost(model, cost, 1, p, u).value; }, approx,
            model.num_states, 2000);
        if (gap.min_signed_gap < -1e-9) {
          ok = false;
          detail = to_string(objective) + " control " + std::to_string(u);
        }
      }
    }
    results.push_back({"tangent surfaces upper-bound their stage costs", ok, detail});
  }
  return results;
}

}  // namespace trajent
