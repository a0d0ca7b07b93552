#pragma once

#include <stdexcept>
#include <string>

namespace nhse {

/// Bad input: parameter out of range, malformed config, dimension mismatch.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical result failed a reliability gate (residual bound, non-finite values,
/// winding not integral, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nhse
