#pragma once

#include <stdexcept>
#include <string>

namespace fopaeq {

// Bad argument shape or value supplied by the caller.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation not valid for the current state (e.g. predicting from an empty
// dictionary).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A guarded division or Schur complement fell below its threshold.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration. `field()` holds the dotted path of the
// offending key, e.g. "kernel.sigma".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace fopaeq
