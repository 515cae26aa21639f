#pragma once

#include <stdexcept>
#include <string>

namespace spescreen {

// Invalid input, malformed files, violated preconditions. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-convergence, NaN energies, failed numerical identities. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spescreen
