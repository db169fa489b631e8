#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace shotperc {

// Bad argument supplied by the caller (wrong sign, mismatched geometry, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An operation's documented precondition does not hold, e.g. padding too small.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two independent numerical routes to the same quantity disagree.
class NumericalConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration failed validation. Carries every violated field, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace shotperc
