#pragma once

#include <stdexcept>
#include <string>

namespace ndmt {

// Base for every error raised by the library. Runtime failures that are not
// input-validation problems use this type directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, contract violations, out-of-range parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// External scorer misbehaved (exit, timeout, malformed or missing responses).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace ndmt
