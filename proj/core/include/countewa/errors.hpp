#pragma once

#include <stdexcept>
#include <string>

namespace countewa {

// Caller broke a documented precondition (dimension mismatch, non-finite
// input, evaluation outside the prior support, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad user-supplied input: config documents, CSV files, CLI values.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The data cannot support the requested computation, e.g. an all-zero
// design or a lasso grid whose largest value is zero.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace countewa
