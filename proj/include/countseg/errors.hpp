#pragma once

#include <stdexcept>
#include <string>

namespace countseg {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid call arguments (kmax out of range, empty series, bad dispersion, ...).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// A parameter outside the open domain of a loss family.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Malformed or non-finite observations.
class InputError : public Error {
public:
  InputError(const std::string& what, long line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  long line() const noexcept { return line_; }

private:
  long line_;
};

/// Iterative root finding did not converge.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// A requested criterion does not apply to the loss family.
class UnsupportedError : public Error {
public:
  using Error::Error;
};

} // namespace countseg
