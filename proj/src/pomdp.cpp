#include "trajent/pomdp.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "trajent/sampling.hpp"

namespace trajent {

using nlohmann::json;

namespace {

constexpr double kImpossibleMeasurementFloor = 1e-300;

void check(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

int sample_index(const Vector& pmf, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double r = unit(rng);
  for (Eigen::Index i = 0; i < pmf.size(); ++i) {
    r -= pmf(i);
    if (r <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(pmf.size()) - 1;
}

}  // namespace

void PomdpModel::validate(double tol) const {
  const int n = num_states;
  check(n >= 1, "model must have at least one state");
  check(horizon >= 1, "horizon must be at least 1");
  check(!transition.empty(), "model must have at least one control");
  check(!observation.empty(), "model must have observation kernels");
  check(transition.size() == observation.size(),
        "transition and observation kernel counts differ");
  const int ny = static_cast<int>(observation.front().cols());
  check(ny >= 1, "model must have at least one measurement");

  for (std::size_t u = 0; u < transition.size(); ++u) {
    const Matrix& a = transition[u];
    check(a.rows() == n && a.cols() == n, "transition matrix has wrong shape");
    for (int j = 0; j < n; ++j) {
      check(std::abs(a.col(j).sum() - 1.0) <= tol,
            "transition column " + std::to_string(j) + " of control " + std::to_string(u) +
                " does not sum to 1");
    }
    check((a.array() >= -tol).all() && (a.array() <= 1.0 + tol).all(),
          "transition entries outside [0,1]");
    const Matrix& b = observation[u];
    check(b.rows() == n && b.cols() == ny, "observation matrix has wrong shape");
    for (int i = 0; i < n; ++i) {
      check(std::abs(b.row(i).sum() - 1.0) <= tol,
            "observation row " + std::to_string(i) + " of control " + std::to_string(u) +
                " does not sum to 1");
    }
    check((b.array() >= -tol).all() && (b.array() <= 1.0 + tol).all(),
          "observation entries outside [0,1]");
  }

  check(initial_observation.rows() == n && initial_observation.cols() == ny,
        "initial observation kernel has wrong shape");
  for (int i = 0; i < n; ++i) {
    check(std::abs(initial_observation.row(i).sum() - 1.0) <= tol,
          "initial observation row " + std::to_string(i) + " does not sum to 1");
  }
  check(initial_distribution.size() == n, "initial distribution has wrong length");
  check((initial_distribution.array() >= -tol).all(),
        "initial distribution has negative entries");
  check(std::abs(initial_distribution.sum() - 1.0) <= tol,
        "initial distribution does not sum to 1");
}

void PomdpModel::renormalise() {
  for (auto& a : transition) {
    for (int j = 0; j < a.cols(); ++j) a.col(j) = (a.col(j).cwiseMax(0.0)) / a.col(j).cwiseMax(0.0).sum();
  }
  for (auto& b : observation) {
    for (int i = 0; i < b.rows(); ++i) b.row(i) = (b.row(i).cwiseMax(0.0)) / b.row(i).cwiseMax(0.0).sum();
  }
  for (int i = 0; i < initial_observation.rows(); ++i) {
    initial_observation.row(i) =
        initial_observation.row(i).cwiseMax(0.0) / initial_observation.row(i).cwiseMax(0.0).sum();
  }
  initial_distribution = initial_distribution.cwiseMax(0.0) / initial_distribution.cwiseMax(0.0).sum();
}

namespace {

Matrix parse_matrix(const json& rows, int expect_rows, int expect_cols, const std::string& what) {
  check(rows.is_array() && static_cast<int>(rows.size()) == expect_rows,
        what + ": expected " + std::to_string(expect_rows) + " rows");
  Matrix m(expect_rows, expect_cols);
  for (int i = 0; i < expect_rows; ++i) {
    const json& row = rows.at(i);
    check(row.is_array() && static_cast<int>(row.size()) == expect_cols,
          what + ": expected " + std::to_string(expect_cols) + " columns");
    for (int j = 0; j < expect_cols; ++j) {
      check(row.at(j).is_number(), what + ": non-numeric entry");
      m(i, j) = row.at(j).get<double>();
    }
  }
  return m;
}

}  // namespace

PomdpModel parse_model(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
  }
  check(doc.is_object(), "model document must be a JSON object");
  for (const char* key :
       {"num_states", "controls", "measurements", "transition", "observation",
        "initial_distribution", "horizon"}) {
    check(doc.contains(key), std::string("model file missing key '") + key + "'");
  }

  PomdpModel model;
  model.num_states = doc.at("num_states").get<int>();
  check(model.num_states >= 1, "num_states must be positive");
  for (const auto& name : doc.at("controls")) model.control_names.push_back(name.get<std::string>());
  for (const auto& name : doc.at("measurements"))
    model.measurement_names.push_back(name.get<std::string>());
  const int nu = static_cast<int>(model.control_names.size());
  const int ny = static_cast<int>(model.measurement_names.size());
  check(nu >= 1, "model must name at least one control");
  check(ny >= 1, "model must name at least one measurement");

  const json& trans = doc.at("transition");
  const json& obs = doc.at("observation");
  check(trans.is_array() && static_cast<int>(trans.size()) == nu,
        "transition must hold one matrix per control");
  check(obs.is_array() && static_cast<int>(obs.size()) == nu,
        "observation must hold one matrix per control");
  for (int u = 0; u < nu; ++u) {
    model.transition.push_back(
        parse_matrix(trans.at(u), model.num_states, model.num_states, "transition"));
    model.observation.push_back(parse_matrix(obs.at(u), model.num_states, ny, "observation"));
  }
  if (doc.contains("initial_observation")) {
    model.initial_observation =
        parse_matrix(doc.at("initial_observation"), model.num_states, ny, "initial_observation");
  } else {
    model.initial_observation = model.observation.front();
  }

  const json& pi0 = doc.at("initial_distribution");
  check(pi0.is_array() && static_cast<int>(pi0.size()) == model.num_states,
        "initial_distribution has wrong length");
  model.initial_distribution.resize(model.num_states);
  for (int i = 0; i < model.num_states; ++i)
    model.initial_distribution(i) = pi0.at(i).get<double>();
  model.horizon = doc.at("horizon").get<int>();

  model.validate(1e-9);
  model.renormalise();
  return model;
}

PomdpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

void save_model(const PomdpModel& model, const std::string& path) {
  json doc;
  doc["num_states"] = model.num_states;
  doc["controls"] = model.control_names;
  doc["measurements"] = model.measurement_names;
  auto matrix_to_json = [](const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  doc["transition"] = json::array();
  doc["observation"] = json::array();
  for (const auto& a : model.transition) doc["transition"].push_back(matrix_to_json(a));
  for (const auto& b : model.observation) doc["observation"].push_back(matrix_to_json(b));
  doc["initial_observation"] = matrix_to_json(model.initial_observation);
  doc["initial_distribution"] =
      std::vector<double>(model.initial_distribution.data(),
                          model.initial_distribution.data() + model.initial_distribution.size());
  doc["horizon"] = model.horizon;

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ValidationError("cannot write model file: " + path);
    out << doc.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

Belief initial_belief(const PomdpModel& model, int y1) {
  Belief raw = model.initial_observation.col(y1).cwiseProduct(model.initial_distribution);
  const double norm = raw.sum();
  if (norm < kImpossibleMeasurementFloor) {
    throw ImpossibleMeasurement("first measurement " + std::to_string(y1) +
                                " has zero probability under the initial distribution");
  }
  return raw / norm;
}

Matrix joint_predicted_belief(const PomdpModel& model, const Belief& belief, int u) {
  return model.transition[u] * belief.asDiagonal();
}

Belief predicted_belief(const PomdpModel& model, const Belief& belief, int u) {
  return model.transition[u] * belief;
}

Belief filter_update(const PomdpModel& model, const Belief& belief, int u, int y) {
  Belief raw = model.observation[u].col(y).cwiseProduct(model.transition[u] * belief);
  const double norm = raw.sum();
  if (norm < kImpossibleMeasurementFloor) {
    throw ImpossibleMeasurement("measurement " + std::to_string(y) +
                                " has zero probability under the current belief and control " +
                                std::to_string(u));
  }
  raw /= norm;
  // Absorb floating-point drift: clamp parasitic negatives, renormalise.
  raw = raw.cwiseMax(0.0);
  return raw / raw.sum();
}

Vector observation_likelihood(const PomdpModel& model, const Belief& belief, int u) {
  return model.observation[u].transpose() * (model.transition[u] * belief);
}

TrajectoryRecord sample_trajectory(const PomdpModel& model, const BeliefPolicy& policy,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int horizon = model.horizon;
  TrajectoryRecord record;
  record.states.reserve(horizon);
  record.measurements.reserve(horizon);
  record.controls.reserve(horizon > 0 ? horizon - 1 : 0);
  record.beliefs.reserve(horizon);

  int state = sample_index(model.initial_distribution, rng);
  record.states.push_back(state);
  int y = sample_index(model.initial_observation.row(state).transpose(), rng);
  record.measurements.push_back(y);
  Belief belief = initial_belief(model, y);
  record.beliefs.push_back(belief);

  for (int k = 1; k < horizon; ++k) {
    const int u = policy(k, belief);
    record.controls.push_back(u);
    state = sample_index(model.transition[u].col(state), rng);
    record.states.push_back(state);
    y = sample_index(model.observation[u].row(state).transpose(), rng);
    record.measurements.push_back(y);
    belief = filter_update(model, belief, u, y);
    record.beliefs.push_back(belief);
  }
  return record;
}

}  // namespace trajent
