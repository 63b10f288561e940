#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "trajent/types.hpp"

namespace trajent {

/// Deterministic low-discrepancy stream of points on the N-simplex.
///
/// Uses an additive (Kronecker) recurrence with the generalised golden
/// ratio in [0,1]^{N-1}, mapped to the simplex by sorting and taking
/// consecutive gaps. Suitable for sparsity estimation and gap sampling
/// where reproducibility without seeds matters.
class SimplexSequence {
 public:
  explicit SimplexSequence(int num_states, std::uint64_t skip = 0);

  Belief next();

 private:
  int n_;
  std::uint64_t index_;
  Vector alphas_;  // irrational step per coordinate
};

/// Uniform (Dirichlet(1,...,1)) random point on the simplex.
Belief random_belief(int num_states, std::mt19937_64& rng);

/// Random point with all entries >= min_mass, obtained by mixing a uniform
/// Dirichlet sample with the uniform distribution.
Belief random_interior_belief(int num_states, std::mt19937_64& rng,
                              double min_mass = 1e-3);

/// Per-run seed derivation: seed xor run-index, so parallel Monte-Carlo
/// results do not depend on scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t run) {
  return seed ^ run;
}

}  // namespace trajent
