#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ealign {

// Invalid or inconsistent configuration. The CLI maps this to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation not defined for the given inputs (dimension, family, domain).
class UnsupportedError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Any failure of the numerics themselves. The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularityError : public NumericalError {
 public:
  SingularityError(std::size_t i, std::size_t j, const std::string& context = "")
      : NumericalError("coincident particles " + std::to_string(i) + " and " +
                       std::to_string(j) + " under a singular kernel" +
                       context),
        first(i),
        second(j) {}
  explicit SingularityError(const std::string& what)
      : NumericalError(what) {}

  std::size_t first = 0;
  std::size_t second = 0;
};

class DivergenceError : public NumericalError {
 public:
  DivergenceError(std::size_t step, double time)
      : NumericalError("non-finite state at step " + std::to_string(step) +
                       " (t = " + std::to_string(time) + ")"),
        step_index(step),
        at_time(time) {}
  explicit DivergenceError(const std::string& what) : NumericalError(what) {}

  std::size_t step_index = 0;
  double at_time = 0.0;
};

// gamma does not dominate the communication weight, so the velocity
// fixed-point map is not certified to contract.
class ContractionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IterationLimitError : public NumericalError {
 public:
  IterationLimitError(std::size_t iterations, double residual)
      : NumericalError("velocity solve did not converge in " +
                       std::to_string(iterations) +
                       " iterations (residual " + std::to_string(residual) +
                       ")"),
        last_residual(residual) {}

  double last_residual = 0.0;
};

}  // namespace ealign
