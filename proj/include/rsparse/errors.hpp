#pragma once

#include <stdexcept>
#include <string>

namespace rsparse {

/// Precondition violated: bad dimensions, infeasible parameters, non-PSD input.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative routine produced a non-finite value or a factorization failed.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, long iteration = -1)
      : std::runtime_error(what), iteration_(iteration) {}

  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

/// Exhaustive enumeration would exceed its work budget.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rsparse
