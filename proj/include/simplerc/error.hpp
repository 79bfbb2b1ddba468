#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simplerc {

/// Root of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied input violated a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line where parsing stopped.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The inputs were well-formed but the numerics could not produce an answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// No eigenvalue cleared the K0 selection threshold.
class NoSignalError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularCovarianceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Leading-eigenvector entry too small to divide by.
class NearSingularRatioError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace simplerc
