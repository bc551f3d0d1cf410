#pragma once

#include <stdexcept>
#include <string>

namespace epidelay {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: bad parameters, malformed files, violated invariants.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// An integral that should be finite is not (tilt normalizers, inverse tilts).
class DivergenceError : public Error {
public:
  using Error::Error;
};

/// Root finders and optimizers that fail to converge.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

} // namespace epidelay
