// Exception hierarchy shared by every panforge module.
#pragma once

#include <stdexcept>
#include <string>

namespace panforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value violates a documented rule (divisibility, ranges,
/// variant/argument mismatches).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An API contract was broken by the caller (non-scalar loss, missing grads).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Stateful component used before it holds usable state.
class StateError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered where finite values are guaranteed.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File reading or writing failed in a named way.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace panforge
