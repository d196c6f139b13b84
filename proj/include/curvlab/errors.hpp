#pragma once

#include <stdexcept>
#include <string>

namespace curvlab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad spec file, inconsistent shifts, non-homogeneous generator.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A dimension or trace sequence did not become polynomial inside the computed range.
class NotStabilized : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown, a failed cross-check, or a violated invariant.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace curvlab
