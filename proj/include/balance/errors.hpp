#pragma once

#include <stdexcept>
#include <string>

namespace balance {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct RejectedDistribution : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised by iterative solvers that did not reach their tolerance.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoConvergence : ConvergenceError {
  using ConvergenceError::ConvergenceError;
};

struct FeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnvelopeViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MassLossError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AdaptednessViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace balance
