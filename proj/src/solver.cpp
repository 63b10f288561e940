#include "trajent/solver.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "trajent/parallel.hpp"
#include "trajent/sampling.hpp"

namespace trajent {

using nlohmann::json;

std::string to_string(PruneMode mode) {
  switch (mode) {
    case PruneMode::Incremental: return "incremental";
    case PruneMode::Pairwise: return "pairwise";
    case PruneMode::PointBased: return "point-based";
  }
  return "unknown";
}

PruneMode prune_mode_from_string(const std::string& name) {
  if (name == "incremental") return PruneMode::Incremental;
  if (name == "pairwise") return PruneMode::Pairwise;
  if (name == "point-based") return PruneMode::PointBased;
  throw ValidationError("unknown prune mode '" + name + "'");
}

namespace {

// alpha^{u,y}(j) = sum_i B(i,y,u) A(i,j,u) alpha(i): the projection carrying
// next-stage vectors through one (control, measurement) branch.
std::vector<AlphaVector> project_through(const PomdpModel& model, const PwlcFunction& next,
                                         int u, int y, int action_tag) {
  const Matrix projector =
      model.transition[u].transpose() * model.observation[u].col(y).asDiagonal();
  std::vector<AlphaVector> out;
  out.reserve(next.vectors.size());
  for (const auto& alpha : next.vectors) {
    AlphaVector projected;
    projected.weights = projector * alpha.weights;
    projected.action = action_tag;
    out.push_back(std::move(projected));
  }
  return out;
}

}  // namespace

PwlcFunction dp_backup(const PomdpModel& model,
                       const std::vector<PwlcFunction>& cost_per_control,
                       const PwlcFunction& value_next, const SolverOptions& options,
                       StageStats* stats) {
  const int nu = model.num_controls();
  const int ny = model.num_measurements();
  const bool lp = options.prune == PruneMode::Incremental;
  const double tol = options.tolerance;

  std::vector<std::vector<AlphaVector>> per_control(nu);
  int generated = 0;

  auto backup_control = [&](std::size_t uz) {
    const int u = static_cast<int>(uz);
    std::vector<std::vector<AlphaVector>> branches;
    branches.reserve(ny);
    for (int y = 0; y < ny; ++y) {
      branches.push_back(prune(project_through(model, value_next, u, y, u), tol, lp));
    }
    // Smallest branches first keeps the intermediate cross-sums lean.
    std::sort(branches.begin(), branches.end(),
              [](const auto& a, const auto& b) { return a.size() < b.size(); });
    std::vector<AlphaVector> acc = prune(cost_per_control[uz].vectors, tol, lp);
    for (const auto& branch : branches) {
      acc = prune(cross_sum(acc, branch), tol, lp);
    }
    for (auto& alpha : acc) {
      alpha.action = u;
      alpha.base_index = -1;
    }
    per_control[uz] = std::move(acc);
  };

  if (options.parallel_controls && nu > 1) {
    parallel_for(static_cast<std::size_t>(nu), backup_control);
  } else {
    for (int u = 0; u < nu; ++u) backup_control(static_cast<std::size_t>(u));
  }

  std::vector<AlphaVector> all;
  for (auto& set : per_control) {
    generated += static_cast<int>(set.size());
    all.insert(all.end(), set.begin(), set.end());
  }
  PwlcFunction result;
  result.vectors = prune(std::move(all), tol, lp);
  if (stats != nullptr) {
    stats->vectors = result.size();
    stats->pruned_away = generated - result.size();
  }
  return result;
}

std::vector<Belief> reachable_beliefs(const PomdpModel& model, int per_stage_limit) {
  const int ny = model.num_measurements();
  const int nu = model.num_controls();
  std::vector<Belief> all;
  std::vector<Belief> frontier;

  auto push_unique = [](std::vector<Belief>& set, const Belief& candidate) {
    for (const Belief& b : set) {
      if ((b - candidate).lpNorm<1>() < 1e-9) return false;
    }
    set.push_back(candidate);
    return true;
  };

  for (int y = 0; y < ny; ++y) {
    const double p =
        model.initial_observation.col(y).cwiseProduct(model.initial_distribution).sum();
    if (p < 1e-12) continue;
    push_unique(frontier, initial_belief(model, y));
  }
  all = frontier;

  for (int stage = 2; stage <= model.horizon; ++stage) {
    std::vector<Belief> expanded;
    for (const Belief& belief : frontier) {
      for (int u = 0; u < nu; ++u) {
        const Vector likelihood = observation_likelihood(model, belief, u);
        for (int y = 0; y < ny; ++y) {
          if (likelihood(y) < 1e-9) continue;
          push_unique(expanded, filter_update(model, belief, u, y));
        }
      }
    }
    if (static_cast<int>(expanded.size()) > per_stage_limit) {
      // Farthest-point thinning keeps the frontier spread out and is
      // deterministic: start from the first belief, then repeatedly take the
      // candidate farthest from everything selected so far.
      std::vector<Belief> selected;
      selected.reserve(per_stage_limit);
      std::vector<double> distance(expanded.size(), std::numeric_limits<double>::infinity());
      std::size_t pick = 0;
      while (static_cast<int>(selected.size()) < per_stage_limit) {
        selected.push_back(expanded[pick]);
        double best = -1.0;
        std::size_t next = 0;
        for (std::size_t i = 0; i < expanded.size(); ++i) {
          distance[i] = std::min(distance[i], (expanded[i] - selected.back()).lpNorm<1>());
          if (distance[i] > best) {
            best = distance[i];
            next = i;
          }
        }
        pick = next;
      }
      expanded = std::move(selected);
    }
    for (const Belief& b : expanded) push_unique(all, b);
    frontier = std::move(expanded);
  }
  return all;
}

PwlcFunction point_based_backup(const PomdpModel& model,
                                const std::vector<PwlcFunction>& cost_per_control,
                                const PwlcFunction& value_next,
                                const std::vector<Belief>& points) {
  const int nu = model.num_controls();
  const int ny = model.num_measurements();

  std::vector<Matrix> projectors(static_cast<std::size_t>(nu * ny));
  for (int u = 0; u < nu; ++u) {
    for (int y = 0; y < ny; ++y) {
      projectors[static_cast<std::size_t>(u * ny + y)] =
          model.transition[u].transpose() * model.observation[u].col(y).asDiagonal();
    }
  }

  std::vector<AlphaVector> vectors(points.size());
  parallel_for(points.size(), [&](std::size_t b) {
    const Belief& xi = points[b];
    AlphaVector best;
    double best_value = std::numeric_limits<double>::infinity();
    for (int u = 0; u < nu; ++u) {
      const int cost_index = cost_per_control[u].argmin(xi);
      AlphaVector vector = cost_per_control[u].vectors[cost_index];
      const Vector likelihood = observation_likelihood(model, xi, u);
      double q = vector.weights.dot(xi);
      for (int y = 0; y < ny; ++y) {
        int pick = 0;
        if (likelihood(y) > 1e-14) {
          pick = value_next.argmin(filter_update(model, xi, u, y));
        }
        const Vector projected =
            projectors[static_cast<std::size_t>(u * ny + y)] * value_next.vectors[pick].weights;
        vector.weights += projected;
        q += projected.dot(xi);
      }
      if (q < best_value) {
        best_value = q;
        best = std::move(vector);
        best.action = u;
      }
    }
    best.base_index = static_cast<int>(b);
    vectors[b] = std::move(best);
  });
  PwlcFunction result;
  result.vectors = prune(std::move(vectors), 1e-12, false);
  return result;
}

SolvedPolicy solve(const PomdpModel& model, const CostModel& cost,
                   const BasePointSet& base_points, const SolverOptions& options) {
  if (!is_concave_objective(cost.objective)) {
    throw StructureError(
        "objective '" + to_string(cost.objective) +
        "' has stage costs that are convex in the belief; the min-of-hyperplanes "
        "value recursion requires the concave formulation of the same problem");
  }
  const auto start = std::chrono::steady_clock::now();
  const int horizon = model.horizon;

  SolvedPolicy policy;
  policy.objective = cost.objective;
  policy.lambda = cost.lambda;
  policy.num_states = model.num_states;
  policy.horizon = horizon;
  policy.base_points = base_points;
  policy.options = options;
  policy.value.resize(horizon);
  policy.stage_costs.resize(horizon > 0 ? horizon - 1 : 0);

  const bool lp = options.prune == PruneMode::Incremental;
  policy.value[horizon - 1] = build_pwlc_cost(
      [&](const Belief& xi) { return terminal_cost(model, cost, xi); }, base_points, -1);
  policy.value[horizon - 1].vectors =
      prune(std::move(policy.value[horizon - 1].vectors), options.tolerance, lp);

  for (int k = 1; k < horizon; ++k) {
    auto& per_control = policy.stage_costs[k - 1];
    if (k > 1 && cost.stage_overrides.empty()) {
      per_control = policy.stage_costs[k - 2];  // time-invariant table
      continue;
    }
    per_control.resize(model.num_controls());
    for (int u = 0; u < model.num_controls(); ++u) {
      per_control[u] = build_pwlc_cost(
          [&](const Belief& xi) { return stage_cost(model, cost, k, xi, u); }, base_points, u);
    }
  }

  std::vector<Belief> evaluation_points;
  if (options.prune == PruneMode::PointBased) {
    evaluation_points = base_points.points;
    if (options.reachable_per_stage > 0) {
      for (Belief& b : reachable_beliefs(model, options.reachable_per_stage)) {
        evaluation_points.push_back(std::move(b));
      }
    }
  }

  for (int k = horizon - 1; k >= 1; --k) {
    StageStats stage;
    stage.stage = k;
    const auto stage_start = std::chrono::steady_clock::now();
    if (options.prune == PruneMode::PointBased) {
      policy.value[k - 1] = point_based_backup(model, policy.stage_costs[k - 1],
                                               policy.value[k], evaluation_points);
      stage.vectors = policy.value[k - 1].size();
    } else {
      policy.value[k - 1] =
          dp_backup(model, policy.stage_costs[k - 1], policy.value[k], options, &stage);
    }
    stage.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - stage_start).count();
    policy.stats.stages.push_back(stage);
    policy.stats.max_stage_vectors = std::max(policy.stats.max_stage_vectors, stage.vectors);
  }
  policy.stats.max_stage_vectors =
      std::max(policy.stats.max_stage_vectors, policy.value[horizon - 1].size());
  policy.stats.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return policy;
}

int SolvedPolicy::greedy_action(const PomdpModel& model, int stage, const Belief& belief) const {
  if (stage < 1 || stage >= horizon) {
    throw ValidationError("greedy action queried outside 1 <= stage < horizon");
  }
  const auto& costs = stage_costs[stage - 1];
  const PwlcFunction& next = value[stage];
  int best_control = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (int u = 0; u < model.num_controls(); ++u) {
    double q = costs[u].value(belief);
    const Vector likelihood = observation_likelihood(model, belief, u);
    for (int y = 0; y < model.num_measurements(); ++y) {
      if (likelihood(y) < 1e-300) continue;
      q += likelihood(y) * next.value(filter_update(model, belief, u, y));
    }
    if (q < best_value) {
      best_value = q;
      best_control = u;
    }
  }
  return best_control;
}

GapStatistics approximation_gap(const std::function<double(const Belief&)>& exact,
                                const PwlcFunction& approx, int num_states, int samples) {
  SimplexSequence sequence(num_states);
  GapStatistics stats;
  stats.samples = samples;
  stats.min_signed_gap = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Belief p = sequence.next();
    const double gap = approx.value(p) - exact(p);
    stats.max_gap = std::max(stats.max_gap, gap);
    stats.min_signed_gap = std::min(stats.min_signed_gap, gap);
    total += gap;
  }
  stats.mean_gap = samples > 0 ? total / samples : 0.0;
  return stats;
}

namespace {

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& arr) {
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
  return v;
}

json pwlc_to_json(const PwlcFunction& f) {
  json vectors = json::array();
  for (const auto& alpha : f.vectors) {
    vectors.push_back({{"action", alpha.action}, {"weights", vector_to_json(alpha.weights)}});
  }
  return vectors;
}

PwlcFunction pwlc_from_json(const json& vectors) {
  PwlcFunction f;
  for (const auto& entry : vectors) {
    AlphaVector alpha;
    alpha.action = entry.at("action").get<int>();
    alpha.weights = vector_from_json(entry.at("weights"));
    f.vectors.push_back(std::move(alpha));
  }
  return f;
}

}  // namespace

void save_policy(const SolvedPolicy& policy, const std::string& path) {
  json doc;
  doc["format"] = "trajent-policy-1";
  doc["objective"] = to_string(policy.objective);
  doc["lambda"] = policy.lambda;
  doc["num_states"] = policy.num_states;
  doc["horizon"] = policy.horizon;

  json base;
  base["scheme"] = to_string(policy.base_points.scheme);
  base["resolution"] = policy.base_points.resolution;
  base["count"] = policy.base_points.points.size();
  base["sparsity_estimate"] = policy.base_points.sparsity_estimate;
  json points = json::array();
  for (const auto& p : policy.base_points.points) points.push_back(vector_to_json(p));
  base["points"] = std::move(points);
  doc["base_points"] = std::move(base);

  json stages = json::array();
  for (int k = 1; k < policy.horizon; ++k) {
    json stage;
    stage["stage"] = k;
    stage["value"] = pwlc_to_json(policy.value[k - 1]);
    json costs = json::array();
    for (std::size_t u = 0; u < policy.stage_costs[k - 1].size(); ++u) {
      costs.push_back({{"control", u}, {"vectors", pwlc_to_json(policy.stage_costs[k - 1][u])}});
    }
    stage["costs"] = std::move(costs);
    stages.push_back(std::move(stage));
  }
  doc["stages"] = std::move(stages);
  doc["terminal"] = pwlc_to_json(policy.value[policy.horizon - 1]);

  json stats;
  stats["prune"] = to_string(policy.options.prune);
  stats["tolerance"] = policy.options.tolerance;
  stats["wall_time_seconds"] = policy.stats.wall_time_seconds;
  stats["max_stage_vectors"] = policy.stats.max_stage_vectors;
  json stage_stats = json::array();
  for (const auto& s : policy.stats.stages) {
    stage_stats.push_back({{"stage", s.stage},
                           {"vectors", s.vectors},
                           {"pruned_away", s.pruned_away},
                           {"seconds", s.seconds}});
  }
  stats["stages"] = std::move(stage_stats);
  doc["stats"] = std::move(stats);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ValidationError("cannot write policy file: " + path);
    out << doc.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

SolvedPolicy load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open policy file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("policy file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "trajent-policy-1") {
    throw ValidationError("policy file has an unknown format tag");
  }
  SolvedPolicy policy;
  policy.objective = objective_from_string(doc.at("objective").get<std::string>());
  policy.lambda = doc.at("lambda").get<double>();
  policy.num_states = doc.at("num_states").get<int>();
  policy.horizon = doc.at("horizon").get<int>();
  if (policy.horizon < 1) throw ValidationError("policy horizon must be at least 1");

  const json& base = doc.at("base_points");
  policy.base_points.scheme = base_scheme_from_string(base.at("scheme").get<std::string>());
  policy.base_points.resolution = base.at("resolution").get<int>();
  policy.base_points.sparsity_estimate = base.at("sparsity_estimate").get<double>();
  for (const auto& p : base.at("points")) policy.base_points.points.push_back(vector_from_json(p));

  policy.value.resize(policy.horizon);
  policy.stage_costs.resize(policy.horizon - 1);
  const json& stages = doc.at("stages");
  if (static_cast<int>(stages.size()) != policy.horizon - 1) {
    throw ValidationError("policy file stage count does not match the horizon");
  }
  for (const auto& stage : stages) {
    const int k = stage.at("stage").get<int>();
    if (k < 1 || k >= policy.horizon) throw ValidationError("policy stage index out of range");
    policy.value[k - 1] = pwlc_from_json(stage.at("value"));
    const json& costs = stage.at("costs");
    policy.stage_costs[k - 1].resize(costs.size());
    for (const auto& entry : costs) {
      const std::size_t u = entry.at("control").get<std::size_t>();
      if (u >= costs.size()) throw ValidationError("policy cost control index out of range");
      policy.stage_costs[k - 1][u] = pwlc_from_json(entry.at("vectors"));
    }
  }
  policy.value[policy.horizon - 1] = pwlc_from_json(doc.at("terminal"));
  for (int k = 1; k <= policy.horizon; ++k) {
    if (policy.value[k - 1].empty()) throw ValidationError("policy has an empty value stage");
    for (const auto& alpha : policy.value[k - 1].vectors) {
      if (alpha.weights.size() != policy.num_states)
        throw ValidationError("policy vector length does not match num_states");
    }
  }
  if (doc.contains("stats")) {
    const json& stats = doc.at("stats");
    policy.options.prune = prune_mode_from_string(stats.value("prune", "incremental"));
    policy.options.tolerance = stats.value("tolerance", 1e-9);
    policy.stats.wall_time_seconds = stats.value("wall_time_seconds", 0.0);
    policy.stats.max_stage_vectors = stats.value("max_stage_vectors", 0);
  }
  return policy;
}

}  // namespace trajent
