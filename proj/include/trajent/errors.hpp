#pragma once

#include <stdexcept>
#include <string>

namespace trajent {

/// Model, cost, or policy data violating a structural invariant
/// (stochasticity, shapes, value ranges, malformed files).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A measurement with (numerically) zero probability under the current
/// belief and control was fed to a filter update.
struct ImpossibleMeasurement : std::runtime_error {
  explicit ImpossibleMeasurement(const std::string& what) : std::runtime_error(what) {}
};

/// A full measurement/control record with zero likelihood under the model.
struct InfeasibleEvidence : std::runtime_error {
  explicit InfeasibleEvidence(const std::string& what) : std::runtime_error(what) {}
};

/// An operation was asked to exploit a structural property (e.g. concavity
/// of the stage cost) that the given configuration does not have.
struct StructureError : std::runtime_error {
  explicit StructureError(const std::string& what) : std::runtime_error(what) {}
};

/// Exhaustive-enumeration request beyond the configured size limit.
struct SizeGuardError : std::runtime_error {
  explicit SizeGuardError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace trajent
