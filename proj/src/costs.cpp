#include "trajent/costs.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace trajent {

using nlohmann::json;

bool is_concave_objective(Objective objective) {
  switch (objective) {
    case Objective::EstimationConvexForm:
    case Objective::ObfuscationConvexForm:
      return false;
    default:
      return true;
  }
}

std::string to_string(Objective objective) {
  switch (objective) {
    case Objective::ActiveEstimation: return "active_estimation";
    case Objective::ActiveObfuscation: return "active_obfuscation";
    case Objective::StandardPomdp: return "standard_pomdp";
    case Objective::MinDirectedInfo: return "min_directed_info";
    case Objective::MinMarginalEntropy: return "min_marginal_entropy";
    case Objective::MinTerminalEntropy: return "min_terminal_entropy";
    case Objective::EstimationConvexForm: return "estimation_convex_form";
    case Objective::ObfuscationConvexForm: return "obfuscation_convex_form";
  }
  return "unknown";
}

Objective objective_from_string(const std::string& name) {
  for (Objective o :
       {Objective::ActiveEstimation, Objective::ActiveObfuscation, Objective::StandardPomdp,
        Objective::MinDirectedInfo, Objective::MinMarginalEntropy, Objective::MinTerminalEntropy,
        Objective::EstimationConvexForm, Objective::ObfuscationConvexForm}) {
    if (to_string(o) == name) return o;
  }
  throw ValidationError("unknown objective '" + name + "'");
}

const Matrix& CostModel::stage_table(int stage) const {
  const auto it = stage_overrides.find(stage);
  return it == stage_overrides.end() ? stage_cost : it->second;
}

void CostModel::validate(const PomdpModel& model) const {
  auto check = [](bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
  };
  check(stage_cost.rows() == model.num_states && stage_cost.cols() == model.num_controls(),
        "stage cost table has wrong shape");
  check((stage_cost.array() >= 0.0).all() && stage_cost.allFinite(),
        "stage costs must be nonnegative and finite");
  for (const auto& [stage, table] : stage_overrides) {
    check(stage >= 1 && stage < model.horizon, "stage override index out of range");
    check(table.rows() == model.num_states && table.cols() == model.num_controls(),
          "stage cost override has wrong shape");
    check((table.array() >= 0.0).all() && table.allFinite(),
          "stage cost overrides must be nonnegative and finite");
  }
  check(terminal_cost.size() == model.num_states, "terminal cost has wrong length");
  check((terminal_cost.array() >= 0.0).all() && terminal_cost.allFinite(),
        "terminal costs must be nonnegative and finite");
  check(lambda >= 0.0 && std::isfinite(lambda), "lambda must be nonnegative and finite");
}

CostModel parse_cost_model(const std::string& json_text, const PomdpModel& model) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("cost file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("cost document must be a JSON object");
  for (const char* key : {"stage_cost", "terminal_cost", "objective"}) {
    if (!doc.contains(key))
      throw ValidationError(std::string("cost file missing key '") + key + "'");
  }
  CostModel cost;
  const int n = model.num_states;
  const int nu = model.num_controls();
  auto parse_table = [&](const json& rows) {
    if (!rows.is_array() || static_cast<int>(rows.size()) != n)
      throw ValidationError("stage_cost must have one row per state");
    Matrix table(n, nu);
    for (int i = 0; i < n; ++i) {
      const json& row = rows.at(i);
      if (!row.is_array() || static_cast<int>(row.size()) != nu)
        throw ValidationError("stage_cost rows must have one entry per control");
      for (int u = 0; u < nu; ++u) table(i, u) = row.at(u).get<double>();
    }
    return table;
  };
  cost.stage_cost = parse_table(doc.at("stage_cost"));
  if (doc.contains("stage_cost_overrides")) {
    for (const auto& [key, table] : doc.at("stage_cost_overrides").items()) {
      cost.stage_overrides[std::stoi(key)] = parse_table(table);
    }
  }
  const json& terminal = doc.at("terminal_cost");
  if (!terminal.is_array() || static_cast<int>(terminal.size()) != n)
    throw ValidationError("terminal_cost has wrong length");
  cost.terminal_cost.resize(n);
  for (int i = 0; i < n; ++i) cost.terminal_cost(i) = terminal.at(i).get<double>();
  cost.objective = objective_from_string(doc.at("objective").get<std::string>());
  cost.lambda = doc.value("lambda", 1.0);
  cost.validate(model);
  return cost;
}

CostModel load_cost_model(const std::string& path, const PomdpModel& model) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open cost file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_cost_model(buffer.str(), model);
}

void save_cost_model(const CostModel& cost, const std::string& path) {
  json doc;
  json rows = json::array();
  for (int i = 0; i < cost.stage_cost.rows(); ++i) {
    json row = json::array();
    for (int u = 0; u < cost.stage_cost.cols(); ++u) row.push_back(cost.stage_cost(i, u));
    rows.push_back(std::move(row));
  }
  doc["stage_cost"] = std::move(rows);
  doc["terminal_cost"] = std::vector<double>(
      cost.terminal_cost.data(), cost.terminal_cost.data() + cost.terminal_cost.size());
  doc["objective"] = to_string(cost.objective);
  doc["lambda"] = cost.lambda;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ValidationError("cannot write cost file: " + path);
    out << doc.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

// --- Entropy functionals ------------------------------------------------------

double belief_entropy(const Belief& belief) { return entropy(belief); }

double predicted_entropy(const PomdpModel& model, const Belief& belief, int u) {
  return entropy(model.transition[u] * belief);
}

double transition_entropy(const PomdpModel& model, const Belief& belief, int u) {
  const Matrix& a = model.transition[u];
  double h = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    if (belief(j) == 0.0) continue;
    double column = 0.0;
    for (int i = 0; i < a.rows(); ++i) column -= plogp(a(i, j));
    h += belief(j) * column;
  }
  return h;
}

double backward_transition_entropy(const PomdpModel& model, const Belief& belief, int u) {
  const Matrix& a = model.transition[u];
  const Vector predicted = a * belief;
  double h = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    const double pj = belief(j);
    if (pj == 0.0) continue;
    for (int i = 0; i < a.rows(); ++i) {
      const double joint = a(i, j) * pj;
      if (joint > 0.0) h -= joint * std::log(joint / predicted(i));
    }
  }
  return h;
}

double expected_update_entropy(const PomdpModel& model, const Belief& belief, int u) {
  const Vector predicted = model.transition[u] * belief;
  const Matrix& b = model.observation[u];
  double h = 0.0;
  for (int y = 0; y < b.cols(); ++y) {
    double py = 0.0;
    double joint_term = 0.0;
    for (int i = 0; i < b.rows(); ++i) {
      const double w = b(i, y) * predicted(i);
      py += w;
      joint_term -= plogp(w);
    }
    h += joint_term + plogp(py);
  }
  return h;
}

double filter_entropy_increment(const PomdpModel& model, const Belief& belief, int u, int y) {
  return belief_entropy(filter_update(model, belief, u, y)) -
         predicted_entropy(model, belief, u) + transition_entropy(model, belief, u);
}

// --- Gradients ----------------------------------------------------------------

namespace {

Vector entropy_gradient(const Belief& belief) {
  Vector g(belief.size());
  for (Eigen::Index j = 0; j < belief.size(); ++j) g(j) = -std::log(belief(j)) - 1.0;
  return g;
}

Vector predicted_entropy_gradient(const PomdpModel& model, const Belief& belief, int u) {
  const Matrix& a = model.transition[u];
  const Vector predicted = a * belief;
  Vector g = Vector::Constant(belief.size(), -1.0);
  for (int j = 0; j < a.cols(); ++j) {
    for (int i = 0; i < a.rows(); ++i) {
      if (a(i, j) > 0.0) g(j) -= a(i, j) * std::log(predicted(i));
    }
  }
  return g;
}

Vector transition_entropy_gradient(const PomdpModel& model, int u) {
  const Matrix& a = model.transition[u];
  Vector g(a.cols());
  for (int j = 0; j < a.cols(); ++j) {
    double column = 0.0;
    for (int i = 0; i < a.rows(); ++i) column -= plogp(a(i, j));
    g(j) = column;
  }
  return g;
}

Vector backward_transition_entropy_gradient(const PomdpModel& model, const Belief& belief,
                                            int u) {
  const Matrix& a = model.transition[u];
  const Vector predicted = a * belief;
  Vector g = Vector::Zero(belief.size());
  for (int j = 0; j < a.cols(); ++j) {
    for (int i = 0; i < a.rows(); ++i) {
      if (a(i, j) > 0.0) g(j) -= a(i, j) * std::log(a(i, j) * belief(j) / predicted(i));
    }
  }
  return g;
}

Vector expected_update_entropy_gradient(const PomdpModel& model, const Belief& belief, int u) {
  const Matrix& a = model.transition[u];
  const Matrix& b = model.observation[u];
  const Vector predicted = a * belief;
  // d/dpi_j = -sum_{y,i} B(i,y) A(i,j) log(updated-belief entry), folded as
  // -A' w with w_i = sum_y B(i,y) log(B(i,y) q_i / p_y).
  Vector w = Vector::Zero(b.rows());
  for (int y = 0; y < b.cols(); ++y) {
    double py = 0.0;
    for (int i = 0; i < b.rows(); ++i) py += b(i, y) * predicted(i);
    if (py <= 0.0) continue;
    for (int i = 0; i < b.rows(); ++i) {
      const double joint = b(i, y) * predicted(i);
      if (joint > 0.0) w(i) += b(i, y) * std::log(joint / py);
    }
  }
  return -(a.transpose() * w);
}

Vector lambda_cost_column(const CostModel& cost, int stage, int u) {
  return cost.lambda * cost.stage_table(stage).col(u);
}

}  // namespace

StageCostEvaluation stage_cost(const PomdpModel& model, const CostModel& cost, int stage,
                               const Belief& belief, int u) {
  const Vector c = lambda_cost_column(cost, stage, u);
  const double linear = belief.dot(c);
  StageCostEvaluation out;
  switch (cost.objective) {
    case Objective::ActiveEstimation:
      out.value = backward_transition_entropy(model, belief, u) + linear;
      out.gradient = backward_transition_entropy_gradient(model, belief, u) + c;
      break;
    case Objective::ActiveObfuscation: {
      const double expected_increment = expected_update_entropy(model, belief, u) -
                                        predicted_entropy(model, belief, u) +
                                        transition_entropy(model, belief, u);
      out.value = linear - expected_increment;
      out.gradient = c - (expected_update_entropy_gradient(model, belief, u) -
                          predicted_entropy_gradient(model, belief, u) +
                          transition_entropy_gradient(model, u));
      break;
    }
    case Objective::StandardPomdp:
    case Objective::MinTerminalEntropy:
      out.value = linear;
      out.gradient = c;
      break;
    case Objective::MinDirectedInfo:
      // Information gained from the next measurement, to be minimised.
      out.value = linear + predicted_entropy(model, belief, u) -
                  expected_update_entropy(model, belief, u);
      out.gradient = c + predicted_entropy_gradient(model, belief, u) -
                     expected_update_entropy_gradient(model, belief, u);
      break;
    case Objective::MinMarginalEntropy:
      out.value = belief_entropy(belief) + linear;
      out.gradient = entropy_gradient(belief) + c;
      break;
    case Objective::EstimationConvexForm: {
      const double expected_increment = expected_update_entropy(model, belief, u) -
                                        predicted_entropy(model, belief, u) +
                                        transition_entropy(model, belief, u);
      out.value = expected_increment + linear;
      out.gradient = expected_update_entropy_gradient(model, belief, u) -
                     predicted_entropy_gradient(model, belief, u) +
                     transition_entropy_gradient(model, u) + c;
      break;
    }
    case Objective::ObfuscationConvexForm:
      out.value = linear - backward_transition_entropy(model, belief, u);
      out.gradient = c - backward_transition_entropy_gradient(model, belief, u);
      break;
  }
  return out;
}

StageCostEvaluation terminal_cost(const PomdpModel& model, const CostModel& cost,
                                  const Belief& belief) {
  (void)model;
  const Vector c = cost.lambda * cost.terminal_cost;
  const double linear = belief.dot(c);
  StageCostEvaluation out;
  switch (cost.objective) {
    case Objective::ActiveEstimation:
    case Objective::MinMarginalEntropy:
    case Objective::MinTerminalEntropy:
      out.value = belief_entropy(belief) + linear;
      out.gradient = entropy_gradient(belief) + c;
      break;
    case Objective::ActiveObfuscation:
    case Objective::StandardPomdp:
    case Objective::MinDirectedInfo:
    case Objective::EstimationConvexForm:
      out.value = linear;
      out.gradient = c;
      break;
    case Objective::ObfuscationConvexForm:
      out.value = linear - belief_entropy(belief);
      out.gradient = c - entropy_gradient(belief);
      break;
  }
  return out;
}

double estimation_convex_cost(const PomdpModel& model, const CostModel& cost, int stage,
                              const Belief& belief, int u) {
  const double expected_increment = expected_update_entropy(model, belief, u) -
                                    predicted_entropy(model, belief, u) +
                                    transition_entropy(model, belief, u);
  return expected_increment + belief.dot(lambda_cost_column(cost, stage, u));
}

double obfuscation_convex_cost(const PomdpModel& model, const CostModel& cost, int stage,
                               const Belief& belief, int u) {
  return belief.dot(lambda_cost_column(cost, stage, u)) -
         backward_transition_entropy(model, belief, u);
}

}  // namespace trajent
