#pragma once

#include <stdexcept>
#include <string>

namespace moodspace {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument or data set violates a documented precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A file could not be parsed as one of the interchange formats.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN/Inf or failed to converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace moodspace
