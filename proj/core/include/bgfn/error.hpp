#pragma once

#include <stdexcept>
#include <string>

namespace bgfn {

/// Invalid configuration or shape mismatch. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value surfaced during training or gradient computation.
/// The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments outside an operation's contract.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain (e.g. a probability not in (0,1)).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An environment transition that the masks forbid.
class EnvironmentLogicError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Exhaustive enumeration would exceed its trajectory cap.
class InstanceTooLargeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// The model assigns zero total mass, so a normalized distribution is undefined.
class DegenerateModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bgfn
