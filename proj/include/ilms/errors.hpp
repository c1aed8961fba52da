#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ilms {

/// Invalid configuration or violated domain-type invariant.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Config document could not be parsed.
class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A node update produced a non-finite estimate.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t node, std::size_t iteration, std::string const& what)
      : std::runtime_error(what), node_(node), iteration_(iteration) {}

  std::size_t node() const noexcept { return node_; }            // 1-based
  std::size_t iteration() const noexcept { return iteration_; }  // 1-based

 private:
  std::size_t node_;
  std::size_t iteration_;
};

/// Linear system is singular or not positive definite.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(double smallest_eigenvalue, std::string const& what)
      : std::runtime_error(what), smallest_eigenvalue_(smallest_eigenvalue) {}

  double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

/// Array shapes disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ilms
