#include "trajent/experiments.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "trajent/inference.hpp"
#include "trajent/parallel.hpp"
#include "trajent/sampling.hpp"

namespace trajent {

using nlohmann::json;

std::pair<PomdpModel, CostModel> build_cloud_model() {
  PomdpModel model;
  model.num_states = 3;
  model.control_names = {"1", "2", "3"};
  model.measurement_names = {"1", "2", "3"};
  Matrix a1(3, 3), a2(3, 3), a3(3, 3);
  a1 << 0.8, 0.8, 0.1,
        0.1, 0.1, 0.8,
        0.1, 0.1, 0.1;
  a2 << 0.1, 0.1, 0.1,
        0.8, 0.1, 0.1,
        0.1, 0.8, 0.8;
  a3 = Matrix::Constant(3, 3, 0.025);
  a3.diagonal().setConstant(0.95);
  model.transition = {a1, a2, a3};
  Matrix emission(3, 3);
  emission << 0.61, 0.30, 0.09,
              0.30, 0.40, 0.30,
              0.09, 0.30, 0.61;
  model.observation = {emission, emission, emission};
  model.initial_observation = emission;
  model.initial_distribution = Vector::Constant(3, 1.0 / 3.0);
  model.horizon = 10;
  model.validate(1e-12);

  CostModel cost;
  cost.stage_cost = Matrix::Zero(3, 3);
  cost.terminal_cost = Vector::Zero(3);
  cost.terminal_cost << 1.0, 1.0, 0.0;  // regulate toward the third state
  cost.objective = Objective::ActiveObfuscation;
  cost.lambda = 1.0;
  return {std::move(model), std::move(cost)};
}

namespace {

// Detected-wall-count pmf: independent per-direction detections with hit
// probability 0.9 on a wall and false-alarm probability 0.1 otherwise.
Vector wall_count_distribution(const std::vector<bool>& walls) {
  Vector pmf = Vector::Zero(static_cast<Eigen::Index>(walls.size()) + 1);
  pmf(0) = 1.0;
  for (const bool wall : walls) {
    const double p = wall ? 0.9 : 0.1;
    Vector next = Vector::Zero(pmf.size());
    for (Eigen::Index c = 0; c < pmf.size() - 1; ++c) {
      next(c) += pmf(c) * (1.0 - p);
      next(c + 1) += pmf(c) * p;
    }
    next(pmf.size() - 1) += pmf(pmf.size() - 1) * (1.0 - p);
    pmf = next;
  }
  return pmf;
}

}  // namespace

std::pair<PomdpModel, CostModel> build_navigation_model() {
  constexpr int kColumns = 4;
  constexpr int kRows = 3;
  constexpr int kStates = kColumns * kRows;
  // States are enumerated down each column, columns left to right, so the
  // last state is the bottom-right (goal) cell.
  auto state_of = [](int column, int row) { return column * kRows + row; };

  PomdpModel model;
  model.num_states = kStates;
  model.control_names = {"left", "right", "up", "down", "stay"};
  model.measurement_names = {"0", "1", "2", "3", "4"};

  const int moves[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};  // (dcol, drow)
  for (int u = 0; u < 4; ++u) {
    Matrix a = Matrix::Zero(kStates, kStates);
    for (int column = 0; column < kColumns; ++column) {
      for (int row = 0; row < kRows; ++row) {
        const int source = state_of(column, row);
        const int target_column = column + moves[u][0];
        const int target_row = row + moves[u][1];
        if (target_column >= 0 && target_column < kColumns && target_row >= 0 &&
            target_row < kRows) {
          a(state_of(target_column, target_row), source) = 0.8;
          a(source, source) += 0.2;
        } else {
          a(source, source) = 1.0;  // bumping the boundary keeps the agent put
        }
      }
    }
    model.transition.push_back(std::move(a));
  }
  model.transition.push_back(Matrix::Identity(kStates, kStates));

  Matrix observation(kStates, 5);
  for (int column = 0; column < kColumns; ++column) {
    for (int row = 0; row < kRows; ++row) {
      const std::vector<bool> walls = {column == 0, column == kColumns - 1, row == 0,
                                       row == kRows - 1};
      observation.row(state_of(column, row)) = wall_count_distribution(walls).transpose();
    }
  }
  model.observation.assign(5, observation);
  model.initial_observation = observation;
  model.initial_distribution = Vector::Constant(kStates, 1.0 / kStates);
  model.horizon = 10;
  model.validate(1e-12);

  CostModel cost;
  cost.stage_cost = Matrix::Zero(kStates, 5);
  cost.terminal_cost = Vector::Ones(kStates);
  cost.terminal_cost(kStates - 1) = 0.0;  // goal: bottom-right cell
  cost.objective = Objective::ActiveEstimation;
  cost.lambda = 1.0;
  return {std::move(model), std::move(cost)};
}

std::pair<PomdpModel, CostModel> resolve_model(const std::string& model_source,
                                               const std::string& cost_path) {
  if (model_source == "cloud" || model_source == "nav-grid") {
    auto pair = model_source == "cloud" ? build_cloud_model() : build_navigation_model();
    if (!cost_path.empty()) pair.second = load_cost_model(cost_path, pair.first);
    return pair;
  }
  PomdpModel model = load_model(model_source);
  if (cost_path.empty()) {
    throw ValidationError("a cost file is required for file-based models");
  }
  CostModel cost = load_cost_model(cost_path, model);
  return {std::move(model), std::move(cost)};
}

namespace {

struct RunOutcome {
  double terminal_cost = 0.0;
  double running_cost = 0.0;
  double smoother_entropy = 0.0;
  double map_mismatch = 0.0;
  std::string trace;
};

std::string trace_line(const std::string& policy_name, std::size_t run,
                       const TrajectoryRecord& record) {
  json line;
  line["policy"] = policy_name;
  line["run"] = run;
  line["states"] = record.states;
  line["measurements"] = record.measurements;
  line["controls"] = record.controls;
  json beliefs = json::array();
  for (const auto& b : record.beliefs) {
    json belief = json::array();
    for (Eigen::Index i = 0; i < b.size(); ++i) belief.push_back(b(i));
    beliefs.push_back(std::move(belief));
  }
  line["beliefs"] = std::move(beliefs);
  return line.dump();
}

}  // namespace

PolicyRow evaluate_policy(const PomdpModel& model, const CostModel& cost,
                          const SolvedPolicy& policy, int runs, std::uint64_t seed,
                          TotalConvention total, const std::string& trace_path) {
  if (runs < 1) throw ValidationError("evaluation needs at least one run");
  const BeliefPolicy act = [&](int stage, const Belief& belief) {
    return policy.greedy_action(model, stage, belief);
  };
  const bool tracing = !trace_path.empty();

  std::vector<RunOutcome> outcomes(static_cast<std::size_t>(runs));
  parallel_for(static_cast<std::size_t>(runs), [&](std::size_t run) {
    const TrajectoryRecord record = sample_trajectory(model, act, derive_seed(seed, run));
    RunOutcome& out = outcomes[run];
    out.terminal_cost = cost.terminal_cost(record.states.back());
    for (std::size_t k = 0; k + 1 < record.states.size(); ++k) {
      out.running_cost +=
          cost.stage_table(static_cast<int>(k) + 1)(record.states[k], record.controls[k]);
    }
    out.smoother_entropy =
        pointwise_smoother_entropy(model, record.measurements, record.controls);
    out.map_mismatch =
        viterbi(model, record.measurements, record.controls) == record.states ? 0.0 : 1.0;
    if (tracing) out.trace = trace_line(to_string(cost.objective), run, record);
  });

  PolicyRow row;
  row.policy = to_string(cost.objective);
  row.solved = true;
  double entropy_total = 0.0;
  for (const auto& out : outcomes) {
    row.terminal_cost += out.terminal_cost;
    row.running_cost += out.running_cost;
    entropy_total += out.smoother_entropy;
    row.map_error_prob += out.map_mismatch;
  }
  row.terminal_cost /= runs;
  row.running_cost /= runs;
  row.smoother_entropy = entropy_total / runs;
  row.map_error_prob /= runs;
  if (runs > 1) {
    double ss = 0.0;
    for (const auto& out : outcomes) {
      ss += (out.smoother_entropy - row.smoother_entropy) *
            (out.smoother_entropy - row.smoother_entropy);
    }
    row.smoother_entropy_stderr =
        std::sqrt(ss / (runs - 1)) / std::sqrt(static_cast<double>(runs));
    row.map_error_stderr =
        std::sqrt(row.map_error_prob * (1.0 - row.map_error_prob) / runs);
  }
  const double sign = total == TotalConvention::EstimationAdd ? 1.0 : -1.0;
  row.total_cost = row.terminal_cost + row.running_cost + sign * row.smoother_entropy;
  row.solver_stats = policy.stats;

  if (tracing) {
    std::ofstream out(trace_path, std::ios::app);
    if (!out) throw ValidationError("cannot write trace file: " + trace_path);
    for (const auto& o : outcomes) out << o.trace << '\n';
  }
  return row;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.runs < 1) throw ValidationError("experiment needs at least one run");
  if (config.objectives.empty()) throw ValidationError("experiment needs at least one objective");

  auto [model, base_cost] = resolve_model(config.model_source, config.cost_path);
  const BasePointSet base_points =
      generate_base_points(model.num_states, config.base_scheme, config.base_resolution);

  if (!config.trace_path.empty()) {
    std::ofstream truncate(config.trace_path, std::ios::trunc);
  }

  ExperimentReport report;
  report.model_source = config.model_source;
  report.runs = config.runs;
  report.seed = config.seed;
  report.lambda = config.lambda;
  report.base_points = to_string(config.base_scheme) +
                       (config.base_scheme == BaseScheme::Lattice
                            ? ":" + std::to_string(config.base_resolution)
                            : "");
  report.total_convention =
      config.total == TotalConvention::EstimationAdd ? "estimation" : "obfuscation";

  for (const Objective objective : config.objectives) {
    CostModel cost = base_cost;
    cost.objective = objective;
    cost.lambda = config.lambda;
    PolicyRow row;
    try {
      const SolvedPolicy policy = solve(model, cost, base_points, config.solver);
      row = evaluate_policy(model, cost, policy, config.runs, config.seed, config.total,
                            config.trace_path);
    } catch (const StructureError& e) {
      row.policy = to_string(objective);
      row.solved = false;
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

ExperimentReport reproduce_benchmark(const std::string& benchmark, int runs,
                                     std::uint64_t seed, const std::string& trace_path) {
  if (benchmark != "cloud" && benchmark != "navigation") {
    throw ValidationError("unknown benchmark '" + benchmark + "' (expected cloud or navigation)");
  }
  const bool cloud = benchmark == "cloud";
  auto [model, base_cost] = cloud ? build_cloud_model() : build_navigation_model();

  BasePointSet base_points =
      generate_base_points(model.num_states, BaseScheme::Paper, 0, 10000);
  if (!cloud) {
    // Tangents at reachable beliefs (pulled toward the centre to keep the
    // entropy gradients moderate) tighten the cost surfaces where the
    // policies actually operate.
    const Vector uniform = Vector::Constant(model.num_states, 1.0 / model.num_states);
    for (const Belief& b : reachable_beliefs(model, 128)) {
      base_points.points.push_back(0.95 * b + 0.05 * uniform);
    }
  }

  const std::vector<Objective> objectives =
      cloud ? std::vector<Objective>{Objective::ActiveObfuscation, Objective::MinDirectedInfo,
                                     Objective::StandardPomdp}
            : std::vector<Objective>{Objective::ActiveEstimation, Objective::MinMarginalEntropy,
                                     Objective::MinTerminalEntropy, Objective::StandardPomdp};
  const TotalConvention total =
      cloud ? TotalConvention::ObfuscationSubtract : TotalConvention::EstimationAdd;

  if (!trace_path.empty()) {
    std::ofstream truncate(trace_path, std::ios::trunc);
  }

  ExperimentReport report;
  report.model_source = cloud ? "cloud" : "nav-grid";
  report.runs = runs;
  report.seed = seed;
  report.lambda = 1.0;
  report.base_points = cloud ? "paper" : "paper+reachable:128";
  report.total_convention = cloud ? "obfuscation" : "estimation";

  for (const Objective objective : objectives) {
    CostModel cost = base_cost;
    cost.objective = objective;
    SolverOptions options;
    if (cloud && objective != Objective::MinDirectedInfo) {
      options.prune = PruneMode::Incremental;  // exact value recursions stay small here
    } else {
      options.prune = PruneMode::PointBased;
      options.reachable_per_stage = cloud ? 0 : 512;
    }
    PolicyRow row;
    try {
      const SolvedPolicy policy = solve(model, cost, base_points, options);
      row = evaluate_policy(model, cost, policy, runs, seed, total, trace_path);
    } catch (const StructureError& e) {
      row.policy = to_string(objective);
      row.solved = false;
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

std::string significant(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

}  // namespace

std::string report_csv(const ExperimentReport& report) {
  std::string csv =
      "policy,terminal_cost,smoother_entropy,smoother_entropy_stderr,total_cost,"
      "map_error_prob,map_error_stderr\n";
  for (const auto& row : report.rows) {
    if (!row.solved) continue;
    csv += row.policy + ',' + significant(row.terminal_cost) + ',' +
           significant(row.smoother_entropy) + ',' + significant(row.smoother_entropy_stderr) +
           ',' + significant(row.total_cost) + ',' + significant(row.map_error_prob) + ',' +
           significant(row.map_error_stderr) + '\n';
  }
  return csv;
}

void write_report_csv(const ExperimentReport& report, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ValidationError("cannot write report file: " + path);
    out << report_csv(report);
  }
  std::filesystem::rename(tmp, path);
}

void write_report_json(const ExperimentReport& report, const std::string& path) {
  json doc;
  doc["model"] = report.model_source;
  doc["runs"] = report.runs;
  doc["seed"] = report.seed;
  doc["lambda"] = report.lambda;
  doc["base_points"] = report.base_points;
  doc["total_convention"] = report.total_convention;
  json rows = json::array();
  for (const auto& row : report.rows) {
    json entry;
    entry["policy"] = row.policy;
    entry["solved"] = row.solved;
    if (!row.solved) {
      entry["error"] = row.error;
    } else {
      entry["terminal_cost"] = row.terminal_cost;
      entry["running_cost"] = row.running_cost;
      entry["smoother_entropy"] = row.smoother_entropy;
      entry["smoother_entropy_stderr"] = row.smoother_entropy_stderr;
      entry["total_cost"] = row.total_cost;
      entry["map_error_prob"] = row.map_error_prob;
      entry["map_error_stderr"] = row.map_error_stderr;
      entry["solver"] = {{"wall_time_seconds", row.solver_stats.wall_time_seconds},
                         {"max_stage_vectors", row.solver_stats.max_stage_vectors}};
    }
    rows.push_back(std::move(entry));
  }
  doc["rows"] = std::move(rows);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ValidationError("cannot write report file: " + path);
    out << doc.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace trajent
