#pragma once

#include <stdexcept>
#include <string>

namespace mstop {

// Invalid user input: malformed config files, dimension mismatches,
// out-of-range parameters. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Runtime numeric failure: non-finite dynamics output, diverged training,
// probabilities outside (0,1). Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// A caller-supplied callable broke its contract (e.g. a stopping policy
// reviving a dead component).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace mstop
