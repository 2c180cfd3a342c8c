#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace inertiaid {

// Bad wiring between components: missing curves, inputs that do not cover the
// requested horizon, inconsistent file references.
struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normal equations (or any linear solve) with a rank-deficient system.
struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The information matrix of an estimation problem cannot be inverted.
struct UnobservableProblemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A closed-loop simulation left the sane-state envelope.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A filter lost numerical health (covariance not PSD, nonphysical mean).
struct NumericalFailureError : std::runtime_error {
  NumericalFailureError(const std::string& what, int step_index)
      : std::runtime_error(what), step(step_index) {}
  int step;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line_number)
      : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  std::size_t line;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace inertiaid
