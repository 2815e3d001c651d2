#pragma once

#include <stdexcept>
#include <string>

namespace dp {

// Bad user input: invalid parameters, malformed files, unknown keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A quantity is undefined for the given parameters (e.g. p* with p >= N).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Iterative method failed to converge or stagnated.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flux derivative or linear system is singular.
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A user-supplied nonlinearity produced a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A mathematical invariant that must hold was observed to fail.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dp
