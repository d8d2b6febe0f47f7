#pragma once

#include <stdexcept>
#include <string>

namespace rlb {

// Bad user input: configs, trace files, CLI arguments.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal invariant broken (event/state desync, malformed policy output).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class CausalityError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

// Non-finite values inside the neural toolkit.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rlb
