#pragma once

#include <stdexcept>
#include <string>

namespace fsmap {

// Shape or length mismatch between arguments.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the domain of a transform or link (e.g. 1/θ at θ = 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, int null_directions)
      : std::runtime_error(what), null_directions_(null_directions) {}
  int null_directions() const { return null_directions_; }

 private:
  int null_directions_;
};

// Raised when a non-finite value appears; `index` names the step (layer,
// optimizer step, ...) where it was first seen.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, long index)
      : std::runtime_error(what + " (at step " + std::to_string(index) + ")"), index_(index) {}
  long index() const { return index_; }

 private:
  long index_;
};

}  // namespace fsmap
