#pragma once

#include <stdexcept>
#include <string>

namespace slab {

/// Precondition violated by a caller-supplied value.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A grid or cutoff is too coarse for the requested computation. Raised
/// instead of silently aliasing.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operator hypothesis (positivity of the density, symmetry of the
/// coefficient matrix, ...) failed on the sample grid.
class HypothesisViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A refinement loop did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last, double previous)
      : std::runtime_error(what), last_(last), previous_(previous) {}
  double last() const { return last_; }
  double previous() const { return previous_; }

 private:
  double last_;
  double previous_;
};

inline const char* error_class(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e)) return "InvalidArgument";
  if (dynamic_cast<const ResolutionError*>(&e)) return "ResolutionError";
  if (dynamic_cast<const HypothesisViolation*>(&e)) return "HypothesisViolation";
  if (dynamic_cast<const ConvergenceError*>(&e)) return "ConvergenceError";
  return "Error";
}

}  // namespace slab
