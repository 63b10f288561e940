#pragma once

// Hand-built fixture models shared across the test suites.

#include <trajent/pomdp.hpp>

namespace trajent::testing {

// Two states, two controls, two measurements; every kernel strictly positive.
inline PomdpModel two_state_chain(int horizon = 3) {
  PomdpModel model;
  model.num_states = 2;
  model.control_names = {"a", "b"};
  model.measurement_names = {"0", "1"};
  Matrix a0(2, 2), a1(2, 2), b(2, 2);
  a0 << 0.9, 0.3,
        0.1, 0.7;
  a1 << 0.5, 0.5,
        0.5, 0.5;
  b << 0.8, 0.2,
       0.3, 0.7;
  model.transition = {a0, a1};
  model.observation = {b, b};
  model.initial_observation = b;
  model.initial_distribution = Vector::Constant(2, 0.5);
  model.horizon = horizon;
  model.validate(1e-12);
  return model;
}

// Identity dynamics with exact state measurements.
inline PomdpModel perfect_observation_model(int num_states, int horizon) {
  PomdpModel model;
  model.num_states = num_states;
  model.control_names = {"stay"};
  for (int y = 0; y < num_states; ++y) model.measurement_names.push_back(std::to_string(y));
  model.transition = {Matrix::Identity(num_states, num_states)};
  model.observation = {Matrix::Identity(num_states, num_states)};
  model.initial_observation = model.observation.front();
  model.initial_distribution = Vector::Constant(num_states, 1.0 / num_states);
  model.horizon = horizon;
  model.validate(1e-12);
  return model;
}

// Measurements carry no information: every row of B is the same.
inline PomdpModel uninformative_model(int horizon = 3) {
  PomdpModel model = two_state_chain(horizon);
  Matrix b(2, 2);
  b << 0.5, 0.5,
       0.5, 0.5;
  model.observation = {b, b};
  model.initial_observation = b;
  return model;
}

// Point-mass start, deterministic dynamics and measurements.
inline PomdpModel deterministic_model(int horizon = 4) {
  PomdpModel model;
  model.num_states = 2;
  model.control_names = {"swap"};
  model.measurement_names = {"0", "1"};
  Matrix a(2, 2), b(2, 2);
  a << 0.0, 1.0,
       1.0, 0.0;
  b << 1.0, 0.0,
       0.0, 1.0;
  model.transition = {a};
  model.observation = {b};
  model.initial_observation = b;
  model.initial_distribution = Vector::Zero(2);
  model.initial_distribution(0) = 1.0;
  model.horizon = horizon;
  model.validate(1e-12);
  return model;
}

}  // namespace trajent::testing
