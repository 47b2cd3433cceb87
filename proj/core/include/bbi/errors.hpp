#pragma once

#include <stdexcept>
#include <string>

namespace bbi {

// Bad input: malformed files, out-of-range parameters, unresolved references.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerics went wrong: eigensolver failure, wrap hazard, optimizer failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bbi
