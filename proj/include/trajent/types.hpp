#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace trajent {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point on the probability simplex. Filter operations renormalise their
/// outputs, so downstream code may assume entries >= 0 summing to 1.
using Belief = Eigen::VectorXd;

/// x log x with the 0 log 0 = 0 convention, natural log.
inline double plogp(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

/// Shannon entropy in nats of a nonnegative vector (typically a pmf).
inline double entropy(const Vector& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) h -= plogp(p(i));
  return h;
}

}  // namespace trajent
