#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <trajent/experiments.hpp>
#include <trajent/inference.hpp>
#include <trajent/sampling.hpp>
#include <trajent/solver.hpp>
#include <trajent/verify.hpp>

namespace {

using namespace trajent;

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

struct BasePointsSpec {
  BaseScheme scheme = BaseScheme::Paper;
  int resolution = 0;
};

BasePointsSpec parse_base_points(const std::string& text) {
  BasePointsSpec spec;
  if (text == "paper") return spec;
  if (text.rfind("lattice:", 0) == 0) {
    spec.scheme = BaseScheme::Lattice;
    spec.resolution = std::stoi(text.substr(8));
    return spec;
  }
  throw ValidationError("base points must be 'paper' or 'lattice:<m>'");
}

int run_solve(const std::string& model_path, const std::string& cost_path,
              const std::string& objective, double lambda, const std::string& base_points,
              const std::string& prune, double tolerance, const std::string& out) {
  auto [model, cost] = resolve_model(model_path, cost_path);
  if (!objective.empty()) cost.objective = objective_from_string(objective);
  if (lambda >= 0.0) cost.lambda = lambda;
  const BasePointsSpec spec = parse_base_points(base_points);
  const BasePointSet points =
      generate_base_points(model.num_states, spec.scheme, spec.resolution);
  SolverOptions options;
  options.prune = prune_mode_from_string(prune);
  options.tolerance = tolerance;
  const SolvedPolicy policy = solve(model, cost, points, options);
  save_policy(policy, out);
  std::printf("solved %s over %d stages: max %d vectors per stage, %.2f s\n",
              to_string(cost.objective).c_str(), model.horizon,
              policy.stats.max_stage_vectors, policy.stats.wall_time_seconds);
  std::printf("base points: %zu (%s), sparsity estimate %.4f\n", points.points.size(),
              base_points.c_str(), points.sparsity_estimate);
  std::printf("policy written to %s\n", out.c_str());
  return 0;
}

int run_simulate(const std::string& model_path, const std::string& cost_path,
                 const std::string& policy_path, int runs, std::uint64_t seed,
                 const std::string& out) {
  auto [model, cost] = resolve_model(model_path, cost_path);
  const SolvedPolicy policy = load_policy(policy_path);
  if (policy.num_states != model.num_states || policy.horizon != model.horizon) {
    throw ValidationError("policy file does not match the model dimensions");
  }
  cost.objective = policy.objective;
  cost.lambda = policy.lambda;
  const PolicyRow row = evaluate_policy(model, cost, policy, runs, seed,
                                        TotalConvention::EstimationAdd, out);
  std::printf("wrote %d trajectory records to %s (policy %s)\n", runs, out.c_str(),
              row.policy.c_str());
  return 0;
}

int run_evaluate(const std::string& model_path, const std::string& cost_path,
                 const std::string& policy_path, int runs, std::uint64_t seed,
                 const std::string& out, const std::string& format,
                 const std::string& convention, const std::string& trace) {
  auto [model, cost] = resolve_model(model_path, cost_path);
  const SolvedPolicy policy = load_policy(policy_path);
  if (policy.num_states != model.num_states || policy.horizon != model.horizon) {
    throw ValidationError("policy file does not match the model dimensions");
  }
  cost.objective = policy.objective;
  cost.lambda = policy.lambda;
  const TotalConvention total = convention == "obfuscation"
                                    ? TotalConvention::ObfuscationSubtract
                                    : TotalConvention::EstimationAdd;
  ExperimentReport report;
  report.model_source = model_path;
  report.runs = runs;
  report.seed = seed;
  report.lambda = cost.lambda;
  report.base_points = to_string(policy.base_points.scheme);
  report.total_convention = convention;
  report.rows.push_back(evaluate_policy(model, cost, policy, runs, seed, total, trace));
  if (out.empty()) {
    std::cout << report_csv(report);
  } else if (format == "json") {
    write_report_json(report, out);
  } else {
    write_report_csv(report, out);
  }
  return 0;
}

int run_verify(const std::string& scope, int instances, std::uint64_t seed,
               const std::string& model_path) {
  if (!model_path.empty()) {
    load_model(model_path);  // validation-only pass
    std::printf("model file %s validates\n", model_path.c_str());
  }
  std::vector<CheckResult> results;
  if (scope == "identities" || scope == "all") {
    auto batch = verify_identities(instances, seed);
    results.insert(results.end(), batch.begin(), batch.end());
  }
  if (scope == "structure" || scope == "all") {
    auto batch = verify_structure(std::max(10, instances / 2), seed);
    results.insert(results.end(), batch.begin(), batch.end());
  }
  if (scope == "solver" || scope == "all") {
    auto batch = verify_solver(seed);
    results.insert(results.end(), batch.begin(), batch.end());
  }
  if (results.empty()) {
    throw ValidationError("verify scope must be identities, structure, solver, or all");
  }
  bool all_passed = true;
  std::printf("verification seed: %llu\n", static_cast<unsigned long long>(seed));
  for (const auto& result : results) {
    std::printf("[%s] %s%s%s\n", result.passed ? "PASS" : "FAIL", result.name.c_str(),
                result.detail.empty() ? "" : " -- ", result.detail.c_str());
    all_passed = all_passed && result.passed;
  }
  return all_passed ? 0 : kExitSolver;
}

int run_reproduce(const std::string& benchmark, int runs, std::uint64_t seed,
                  const std::string& out, const std::string& format,
                  const std::string& trace) {
  const ExperimentReport report = reproduce_benchmark(benchmark, runs, seed, trace);
  std::cout << report_csv(report);
  for (const auto& row : report.rows) {
    if (!row.solved) std::printf("# %s failed: %s\n", row.policy.c_str(), row.error.c_str());
  }
  if (!out.empty()) {
    if (format == "json") {
      write_report_json(report, out);
    } else {
      write_report_csv(report, out);
    }
    std::printf("# report written to %s\n", out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "trajent: finite-horizon POMDP planning with trajectory-entropy objectives.\n"
      "Policies trade operational cost against how well the whole state trajectory\n"
      "can (or cannot) be reconstructed from the measurement record."};
  app.require_subcommand(1);

  std::string model_path, cost_path, policy_path, objective, out, trace;
  std::string base_points = "paper";
  std::string prune = "incremental";
  std::string format = "csv";
  std::string convention = "estimation";
  std::string scope = "all";
  std::string benchmark;
  double lambda = -1.0;  // negative: keep the cost file's value
  double tolerance = 1e-9;
  int runs = 1000;
  int instances = 100;
  std::uint64_t seed = 1;

  CLI::App* solve_cmd =
      app.add_subcommand("solve", "Solve a model + cost pair and write the policy file");
  solve_cmd->add_option("--model", model_path, "model file, or builtin: cloud | nav-grid")
      ->required();
  solve_cmd->add_option("--cost", cost_path, "cost file (optional for builtin models)");
  solve_cmd->add_option("--objective", objective, "objective override");
  solve_cmd->add_option("--lambda", lambda, "trade-off coefficient override");
  solve_cmd->add_option("--base-points", base_points, "paper | lattice:<m>");
  solve_cmd->add_option("--prune", prune, "incremental | pairwise | point-based");
  solve_cmd->add_option("--tolerance", tolerance, "pruning tolerance");
  solve_cmd->add_option("--out", out, "output policy file")->required();

  CLI::App* simulate_cmd = app.add_subcommand(
      "simulate", "Roll out closed-loop trajectories under a solved policy (JSONL)");
  simulate_cmd->add_option("--model", model_path, "model file or builtin name")->required();
  simulate_cmd->add_option("--cost", cost_path, "cost file (optional for builtin models)");
  simulate_cmd->add_option("--policy", policy_path, "policy file")->required();
  simulate_cmd->add_option("--runs", runs, "number of rollouts");
  simulate_cmd->add_option("--seed", seed, "random seed");
  simulate_cmd->add_option("--out", out, "JSONL trace output")->required();

  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "Monte-Carlo evaluation of a solved policy");
  evaluate_cmd->add_option("--model", model_path, "model file or builtin name")->required();
  evaluate_cmd->add_option("--cost", cost_path, "cost file (optional for builtin models)");
  evaluate_cmd->add_option("--policy", policy_path, "policy file")->required();
  evaluate_cmd->add_option("--runs", runs, "Monte-Carlo runs");
  evaluate_cmd->add_option("--seed", seed, "random seed");
  evaluate_cmd->add_option("--out", out, "report file (stdout when omitted)");
  evaluate_cmd->add_option("--format", format, "csv | json");
  evaluate_cmd->add_option("--total", convention,
                           "estimation (add entropy) | obfuscation (subtract)");
  evaluate_cmd->add_option("--trace", trace, "optional JSONL per-run trace");

  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "Randomised self-checks of the information identities and solver");
  verify_cmd->add_option("--scope", scope, "identities | structure | solver | all");
  verify_cmd->add_option("--instances", instances, "random instances per suite");
  verify_cmd->add_option("--seed", seed, "random seed (printed for replay)");
  verify_cmd->add_option("--model", model_path, "optionally validate a model file first");

  CLI::App* reproduce_cmd = app.add_subcommand(
      "reproduce", "Run a built-in benchmark and print its policy-comparison table");
  reproduce_cmd->add_option("--benchmark", benchmark, "cloud | navigation")->required();
  reproduce_cmd->add_option("--runs", runs, "Monte-Carlo runs per policy");
  reproduce_cmd->add_option("--seed", seed, "random seed");
  reproduce_cmd->add_option("--out", out, "report file");
  reproduce_cmd->add_option("--format", format, "csv | json");
  reproduce_cmd->add_option("--trace", trace, "optional JSONL per-run trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (solve_cmd->parsed()) {
      return run_solve(model_path, cost_path, objective, lambda, base_points, prune, tolerance,
                       out);
    }
    if (simulate_cmd->parsed()) {
      return run_simulate(model_path, cost_path, policy_path, runs, seed, out);
    }
    if (evaluate_cmd->parsed()) {
      return run_evaluate(model_path, cost_path, policy_path, runs, seed, out, format,
                          convention, trace);
    }
    if (verify_cmd->parsed()) {
      return run_verify(scope, instances, seed, model_path);
    }
    if (reproduce_cmd->parsed()) {
      return run_reproduce(benchmark, runs, seed, out, format, trace);
    }
  } catch (const StructureError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kExitSolver;
  } catch (const SizeGuardError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kExitSolver;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
  return kExitUsage;
}
