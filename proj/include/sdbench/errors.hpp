#pragma once

#include <stdexcept>
#include <string>

#include "sdbench/types.hpp"

namespace sdbench {

/// Invalid input to an operation (wrong dimension, empty sample, bad id, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Finite-difference stencil would leave the domain.
class BoundaryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite intermediate in a numeric routine.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimizer iterate left the finite region. Carries the offending point.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, ParamVector where)
      : std::runtime_error(what), where_(std::move(where)) {}

  const ParamVector& where() const noexcept { return where_; }

 private:
  ParamVector where_;
};

}  // namespace sdbench
