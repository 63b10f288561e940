#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "trajent/pomdp.hpp"

namespace trajent {

/// Random small POMDP with strictly positive kernels (Dirichlet-style rows
/// and columns), control-invariant initial observation.
PomdpModel random_pomdp(std::mt19937_64& rng, int num_states, int num_controls,
                        int num_measurements, int horizon);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // failing seed / residual for replay
};

/// Randomised self-check suites behind the `verify` subcommand. Each result
/// carries enough detail to replay a failure.
std::vector<CheckResult> verify_identities(int instances, std::uint64_t seed);
std::vector<CheckResult> verify_structure(int pairs_per_control, std::uint64_t seed);
std::vector<CheckResult> verify_solver(std::uint64_t seed);

}  // namespace trajent
