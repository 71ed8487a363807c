#pragma once

#include <stdexcept>
#include <string>

namespace zrp {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates a documented precondition.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// The request would exceed a configured resource budget (memory, sizes).
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Numerical integration left its conservation envelope.
class IntegrationFailure : public Error {
 public:
  using Error::Error;
};

/// Two independent computations of the same quantity disagree.
class InternalConsistencyError : public Error {
 public:
  using Error::Error;
};

/// KL functionals against pi[N, x0] need x0 strictly inside (0, 1).
class UndefinedBias : public InvalidParameter {
 public:
  using InvalidParameter::InvalidParameter;
};

}  // namespace zrp
