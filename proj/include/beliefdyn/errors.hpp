#pragma once

#include <stdexcept>
#include <string>

namespace beliefdyn {

// Bad input: malformed files, out-of-domain parameters, impossible configs.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input that the numerics could not handle (divergence,
// undefined statistics such as a zero-variance correlation).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace beliefdyn
