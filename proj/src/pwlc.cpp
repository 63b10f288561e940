#include "trajent/pwlc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "trajent/errors.hpp"
#include "trajent/sampling.hpp"
#include "trajent/simplex_lp.hpp"

namespace trajent {

double PwlcFunction::value(const Belief& belief) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& alpha : vectors) best = std::min(best, alpha.weights.dot(belief));
  return best;
}

int PwlcFunction::argmin(const Belief& belief) const {
  int best = -1;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const double v = vectors[i].weights.dot(belief);
    if (v < best_value) {
      best_value = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::string to_string(BaseScheme scheme) {
  return scheme == BaseScheme::Paper ? "paper" : "lattice";
}

BaseScheme base_scheme_from_string(const std::string& name) {
  if (name == "paper") return BaseScheme::Paper;
  if (name == "lattice") return BaseScheme::Lattice;
  throw ValidationError("unknown base-point scheme '" + name + "'");
}

namespace {

void enumerate_compositions(int total, int parts, std::vector<int>& prefix,
                            std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    prefix.push_back(total);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int head = 0; head <= total; ++head) {
    prefix.push_back(head);
    enumerate_compositions(total - head, parts - 1, prefix, out);
    prefix.pop_back();
  }
}

double estimate_sparsity(const std::vector<Belief>& points, int num_states, int samples) {
  SimplexSequence sequence(num_states);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Belief p = sequence.next();
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& xi : points) nearest = std::min(nearest, (p - xi).lpNorm<1>());
    worst = std::max(worst, nearest);
  }
  return worst;
}

}  // namespace

BasePointSet generate_base_points(int num_states, BaseScheme scheme, int resolution,
                                  int sparsity_samples) {
  BasePointSet set;
  set.scheme = scheme;
  set.resolution = scheme == BaseScheme::Lattice ? resolution : 0;
  const int n = num_states;
  if (scheme == BaseScheme::Paper) {
    set.points.push_back(Vector::Constant(n, 1.0 / n));
    if (n > 1) {
      for (int i = 0; i < n; ++i) {
        Belief p = Vector::Constant(n, 0.01);
        p(i) = 1.0 - 0.01 * (n - 1);
        set.points.push_back(p);
      }
    }
  } else {
    if (resolution < 1) throw ValidationError("lattice resolution must be at least 1");
    std::vector<std::vector<int>> compositions;
    std::vector<int> prefix;
    enumerate_compositions(resolution, n, prefix, compositions);
    const double interior_mix = 0.01;
    const Vector uniform = Vector::Constant(n, 1.0 / n);
    for (const auto& comp : compositions) {
      Belief p(n);
      for (int i = 0; i < n; ++i) p(i) = static_cast<double>(comp[i]) / resolution;
      set.points.push_back((1.0 - interior_mix) * p + interior_mix * uniform);
    }
  }
  set.sparsity_estimate = estimate_sparsity(set.points, n, sparsity_samples);
  return set;
}

PwlcFunction build_pwlc_cost(const std::function<StageCostEvaluation(const Belief&)>& cost,
                             const BasePointSet& base_points, int action_tag) {
  PwlcFunction out;
  out.vectors.reserve(base_points.points.size());
  for (std::size_t i = 0; i < base_points.points.size(); ++i) {
    const Belief& xi = base_points.points[i];
    const StageCostEvaluation eval = cost(xi);
    if (!eval.gradient.allFinite() || !std::isfinite(eval.value)) {
      throw StructureError("cost gradient is not finite at base point " + std::to_string(i) +
                           "; tangent hyperplanes need interior base points");
    }
    AlphaVector alpha;
    alpha.weights =
        (eval.gradient.array() + (eval.value - xi.dot(eval.gradient))).matrix();
    alpha.action = action_tag;
    alpha.base_index = static_cast<int>(i);
    out.vectors.push_back(std::move(alpha));
  }
  return out;
}

std::vector<AlphaVector> cross_sum(const std::vector<AlphaVector>& a,
                                   const std::vector<AlphaVector>& b) {
  std::vector<AlphaVector> out;
  out.reserve(a.size() * b.size());
  for (const auto& left : a) {
    for (const auto& right : b) {
      AlphaVector sum;
      sum.weights = left.weights + right.weights;
      sum.action = left.action;
      out.push_back(std::move(sum));
    }
  }
  return out;
}

namespace {

bool lexicographic_less(const AlphaVector& a, const AlphaVector& b) {
  if (a.action != b.action) return a.action < b.action;
  for (Eigen::Index i = 0; i < a.weights.size(); ++i) {
    if (a.weights(i) != b.weights(i)) return a.weights(i) < b.weights(i);
  }
  return false;
}

struct WitnessOutcome {
  enum Kind { Found, Dominated, Failure } kind = Failure;
  Belief point;      // Found: belief where the candidate is strictly lowest
  Vector dominator;  // Dominated: convex mixture of `others` at or below the
                     // candidate everywhere (may be empty when unverified)
};

// Searches for a belief where `candidate` is lower than every vector in
// `others` by more than tol. Solved through the bounded program
//   max sum(mu)  s.t.  sum_w mu_w (w - candidate) <= 1 componentwise
// whose constraint multipliers, normalised, are the best witness belief
// (margin 1 / optimum); unboundedness certifies that a convex combination
// of `others` dominates the candidate, and the ray names the mixture.
WitnessOutcome witness_lp(const AlphaVector& candidate, const std::vector<AlphaVector>& others,
                          double tol) {
  WitnessOutcome out;
  const int n = static_cast<int>(candidate.weights.size());
  if (others.empty()) {
    out.kind = WitnessOutcome::Found;
    out.point = Vector::Constant(n, 1.0 / n);
    return out;
  }
  const int r = static_cast<int>(others.size());
  Matrix constraints(n, r);
  for (int w = 0; w < r; ++w) {
    constraints.col(w) = others[static_cast<std::size_t>(w)].weights - candidate.weights;
  }
  const std::vector<LpConstraint> kinds(n, LpConstraint::LessEqual);
  const LpResult lp =
      solve_lp(Vector::Ones(r), constraints, Vector::Ones(n), kinds, 1e-11);

  auto mixture_of = [&](const Vector& coefficients) {
    Vector mix = Vector::Zero(n);
    const double total = coefficients.sum();
    for (int w = 0; w < r; ++w) {
      if (coefficients(w) > 0.0)
        mix += (coefficients(w) / total) * others[static_cast<std::size_t>(w)].weights;
    }
    return mix;
  };

  if (lp.status == LpStatus::Unbounded) {
    out.kind = WitnessOutcome::Failure;
    if (lp.ray.size() == r && lp.ray.sum() > 0.0) {
      Vector mix = mixture_of(lp.ray);
      if ((mix - candidate.weights).maxCoeff() <= tol) {
        out.kind = WitnessOutcome::Dominated;
        out.dominator = std::move(mix);
      }
    }
    return out;
  }
  if (lp.status != LpStatus::Optimal || lp.duals.size() != n) {
    out.kind = WitnessOutcome::Failure;
    return out;
  }
  if (lp.objective > 0.0 && 1.0 / lp.objective <= tol) {
    // Margin below tolerance: dominated within tolerance by the optimal mixture.
    Vector mix = mixture_of(lp.solution);
    out.kind = WitnessOutcome::Dominated;
    if (lp.solution.sum() > 0.0 && (mix - candidate.weights).maxCoeff() <= tol)
      out.dominator = std::move(mix);
    return out;
  }
  Vector z = lp.duals.cwiseMax(0.0);
  const double total = z.sum();
  if (!(total > 0.0) || !z.allFinite()) {
    out.kind = WitnessOutcome::Failure;
    return out;
  }
  out.point = z / total;
  // Trust the multipliers only after confirming the margin directly.
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& other : others) {
    margin = std::min(margin, out.point.dot(other.weights - candidate.weights));
  }
  out.kind = margin > tol ? WitnessOutcome::Found : WitnessOutcome::Failure;
  return out;
}

std::vector<AlphaVector> remove_dominated(std::vector<AlphaVector> vectors, double tol) {
  const std::size_t count = vectors.size();
  std::vector<bool> alive(count, true);
  auto dominates = [&](std::size_t a, std::size_t b) {
    return (vectors[a].weights.array() <= vectors[b].weights.array() + tol).all();
  };
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < count && alive[i]; ++j) {
      if (j == i || !alive[j]) continue;
      if (dominates(j, i) && (!dominates(i, j) || j < i)) alive[i] = false;
    }
  }
  std::vector<AlphaVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (alive[i]) out.push_back(std::move(vectors[i]));
  }
  return out;
}

}  // namespace

std::optional<Belief> find_witness(const AlphaVector& candidate,
                                   const std::vector<AlphaVector>& others, double tol) {
  const WitnessOutcome outcome = witness_lp(candidate, others, tol);
  if (outcome.kind == WitnessOutcome::Found) return outcome.point;
  return std::nullopt;
}

std::vector<AlphaVector> prune(std::vector<AlphaVector> vectors, double tol, bool lp_pruning) {
  if (vectors.size() <= 1) return vectors;
  std::sort(vectors.begin(), vectors.end(), lexicographic_less);
  vectors.erase(std::unique(vectors.begin(), vectors.end(),
                            [](const AlphaVector& a, const AlphaVector& b) {
                              return a.action == b.action &&
                                     (a.weights.array() == b.weights.array()).all();
                            }),
                vectors.end());
  vectors = remove_dominated(std::move(vectors), tol);
  if (!lp_pruning || vectors.size() <= 1) return vectors;

  const int n = static_cast<int>(vectors.front().weights.size());

  // Deterministic probe beliefs: a vector strictly lowest at one of them has
  // that probe as its witness and skips the LP entirely.
  std::vector<Belief> probes;
  {
    SimplexSequence sequence(n);
    const int quasi =
        static_cast<int>(std::min<std::size_t>(512, 16 * vectors.size()));
    for (int s = 0; s < quasi; ++s) probes.push_back(sequence.next());
    for (int i = 0; i < n; ++i) probes.push_back(Vector::Unit(n, i));
    probes.push_back(Vector::Constant(n, 1.0 / n));
  }

  std::vector<AlphaVector> retained;
  std::vector<double> retained_min(probes.size(), std::numeric_limits<double>::infinity());
  auto retain = [&](const AlphaVector& v) {
    retained.push_back(v);
    for (std::size_t s = 0; s < probes.size(); ++s) {
      retained_min[s] = std::min(retained_min[s], v.weights.dot(probes[s]));
    }
  };

  std::deque<std::size_t> queue;
  {
    std::vector<bool> taken(vectors.size(), false);
    for (std::size_t s = 0; s < probes.size(); ++s) {
      double best = std::numeric_limits<double>::infinity();
      double second = best;
      std::size_t best_index = 0;
      for (std::size_t i = 0; i < vectors.size(); ++i) {
        const double v = vectors[i].weights.dot(probes[s]);
        if (v < best) {
          second = best;
          best = v;
          best_index = i;
        } else {
          second = std::min(second, v);
        }
      }
      if (second - best > tol && !taken[best_index]) {
        taken[best_index] = true;
        retain(vectors[best_index]);
      }
    }
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (!taken[i]) queue.push_back(i);
    }
  }

  // Mixtures of retained vectors discovered by failed witness searches; a
  // candidate at or above any of them everywhere is discarded without an LP.
  std::vector<Vector> dominators;

  auto retain_best_at = [&](const Belief& witness) {
    std::size_t best = queue.front();
    double best_value = std::numeric_limits<double>::infinity();
    for (const std::size_t i : queue) {
      const double v = vectors[i].weights.dot(witness);
      if (v < best_value) {
        best_value = v;
        best = i;
      }
    }
    retain(vectors[best]);
    queue.erase(std::find(queue.begin(), queue.end(), best));
  };

  while (!queue.empty()) {
    const std::size_t candidate = queue.front();
    const Vector& weights = vectors[candidate].weights;

    bool cached_dominated = false;
    for (const Vector& mix : dominators) {
      if ((mix - weights).maxCoeff() <= tol) {
        cached_dominated = true;
        break;
      }
    }
    if (cached_dominated) {
      queue.pop_front();
      continue;
    }

    int probe_witness = -1;
    for (std::size_t s = 0; s < probes.size(); ++s) {
      if (weights.dot(probes[s]) < retained_min[s] - tol) {
        probe_witness = static_cast<int>(s);
        break;
      }
    }
    if (probe_witness >= 0) {
      retain_best_at(probes[static_cast<std::size_t>(probe_witness)]);
      continue;
    }

    const WitnessOutcome outcome = witness_lp(vectors[candidate], retained, tol);
    if (outcome.kind == WitnessOutcome::Dominated) {
      if (outcome.dominator.size() == n) dominators.push_back(outcome.dominator);
      queue.pop_front();
    } else if (outcome.kind == WitnessOutcome::Failure) {
      // Soundness over minimality.
      retain(vectors[candidate]);
      queue.pop_front();
    } else {
      retain_best_at(outcome.point);
    }
  }

  std::sort(retained.begin(), retained.end(), lexicographic_less);
  return retained;
}

}  // namespace trajent
