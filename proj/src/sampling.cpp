#include "trajent/sampling.hpp"

#include <algorithm>
#include <vector>

namespace trajent {

namespace {

// Root of x^(d+1) = x + 1: step generator for the d-dimensional Kronecker
// sequence (Newton iteration; converges in a handful of steps).
double generalised_golden_ratio(int d) {
  double x = 1.5;
  for (int it = 0; it < 64; ++it) {
    const double f = std::pow(x, d + 1) - x - 1.0;
    const double fp = (d + 1) * std::pow(x, d) - 1.0;
    const double next = x - f / fp;
    if (std::abs(next - x) < 1e-15) return next;
    x = next;
  }
  return x;
}

}  // namespace

SimplexSequence::SimplexSequence(int num_states, std::uint64_t skip)
    : n_(num_states), index_(skip) {
  const int d = std::max(1, n_ - 1);
  const double phi = generalised_golden_ratio(d);
  alphas_.resize(d);
  double a = 1.0;
  for (int i = 0; i < d; ++i) {
    a /= phi;
    alphas_(i) = a;
  }
}

Belief SimplexSequence::next() {
  ++index_;
  if (n_ == 1) return Vector::Ones(1);
  const int d = n_ - 1;
  std::vector<double> cuts(d);
  for (int i = 0; i < d; ++i) {
    double v = 0.5 + static_cast<double>(index_) * alphas_(i);
    cuts[i] = v - std::floor(v);
  }
  std::sort(cuts.begin(), cuts.end());
  Belief p(n_);
  double prev = 0.0;
  for (int i = 0; i < d; ++i) {
    p(i) = cuts[i] - prev;
    prev = cuts[i];
  }
  p(d) = 1.0 - prev;
  return p;
}

Belief random_belief(int num_states, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Belief p(num_states);
  double total = 0.0;
  for (int i = 0; i < num_states; ++i) {
    p(i) = expo(rng);
    total += p(i);
  }
  return p / total;
}

Belief random_interior_belief(int num_states, std::mt19937_64& rng, double min_mass) {
  const double w = min_mass * num_states;
  Belief p = random_belief(num_states, rng);
  return (1.0 - w) * p + Vector::Constant(num_states, min_mass);
}

}  // namespace trajent
